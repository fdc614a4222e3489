import numpy as np
import pytest

from warpscore.core import MultiSeries


def make_series(values):
    return MultiSeries(np.asarray(values, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def small_corpus():
    """A tiny 3-class corpus with well-separated class shapes, for classifier tests."""
    from warpscore.core import Dataset, LabeledSeries

    rng = np.random.default_rng(7)
    items = []
    t = np.linspace(0, 1, 60)
    shapes = {"N": np.sin(2 * np.pi * t), "I": 3.0 + np.cos(2 * np.pi * t), "E": -4.0 + 2 * t}
    for skill, base in shapes.items():
        for p in range(2):
            participant = f"{skill}{p}"
            for s in range(3):
                vals = base + 0.05 * rng.normal(size=t.size)
                items.append(
                    LabeledSeries(series=MultiSeries(vals), skill=skill, participant=participant)
                )
    return Dataset(tuple(items), name="small-corpus")
