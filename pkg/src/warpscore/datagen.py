"""Synthetic skill-stratified motion corpus.

Every series is a shared 5-channel template trajectory (lateral x/y wander,
monotone z advance, pressure with a loss-of-resistance drop at 70% of the
procedure, a force ramp) deformed by a per-participant bias curve, a
class-scaled systematic shift, class-scaled amplitude noise and tremor, and
a random monotone time warp. Skill classes differ by construction: novices
get the largest noise, warps and biases, experts the smallest, so class
separability and phase ground truth are known analytically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Dataset, LabeledSeries, MultiSeries
from .errors import ValidationError

N_VARS = 5
CHANNELS = ("x", "y", "z", "pressure", "force")

#: Fraction of the procedure at which the pressure drop (loss of resistance) sits.
PRESSURE_DROP_AT = 0.7

# per-channel noise scale in channel units (mm, mm, mm, kPa, N)
_NOISE_BASE = np.array([0.8, 0.8, 2.0, 1.5, 0.6])
_TREMOR_BASE = np.array([0.5, 0.5, 0.3, 0.15, 0.25])


def _logistic(x):
    return 1.0 / (1.0 + np.exp(-x))


def template(n: int) -> np.ndarray:
    """The shared smooth trajectory, sampled at n uniform positions of [0, 1]."""
    t = np.linspace(0.0, 1.0, n)
    drop = _logistic((t - PRESSURE_DROP_AT) / 0.015)
    x = 2.0 * np.sin(2 * np.pi * 0.8 * t) + 1.0 * np.sin(2 * np.pi * 2.3 * t + 0.7)
    y = 1.5 * np.sin(2 * np.pi * 0.6 * t + 1.1) + 0.8 * np.sin(2 * np.pi * 1.9 * t)
    z = 80.0 * (3 * t**2 - 2 * t**3) + 2.0 * np.sin(2 * np.pi * t) * t * (1 - t)
    pressure = 35.0 * _logistic((t - 0.35) / 0.08) * (1.0 - drop) + 8.0 * drop
    force = 5.0 * t**1.2 * (1.0 - 0.5 * drop) + 0.3 * np.sin(2 * np.pi * 1.3 * t)
    return np.column_stack([x, y, z, pressure, force])


def _class_signature(t: np.ndarray) -> np.ndarray:
    """Systematic deviation shape shared by everyone in a class, unit amplitude."""
    x = 1.2 * np.sin(2 * np.pi * 1.4 * t + 0.4)
    y = 1.0 * np.cos(2 * np.pi * 1.1 * t)
    z = 4.0 * np.sin(np.pi * t) ** 2
    pressure = 5.0 * np.sin(np.pi * t**1.5)
    force = 0.8 * np.sin(2 * np.pi * 0.9 * t + 1.0)
    return np.column_stack([x, y, z, pressure, force])


@dataclass(frozen=True)
class ClassParams:
    """Per-skill deformation magnitudes (all multipliers of channel-scale bases)."""

    noise: float
    warp: float
    tremor: float
    bias: float
    shift: float


DEFAULT_CLASS_PARAMS = {
    "N": ClassParams(noise=1.00, warp=0.30, tremor=1.00, bias=1.00, shift=1.00),
    "I": ClassParams(noise=0.55, warp=0.18, tremor=0.50, bias=0.55, shift=0.50),
    "E": ClassParams(noise=0.20, warp=0.07, tremor=0.15, bias=0.20, shift=0.00),
}


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    participants_per_skill: dict = field(default_factory=lambda: {"N": 4, "I": 2, "E": 2})
    series_per_participant: int = 5
    base_length: int = 500
    class_params: dict = field(default_factory=lambda: dict(DEFAULT_CLASS_PARAMS))
    separation: float = 1.0  # scales the class-systematic contrasts (bias/shift)
    length_jitter: float = 0.2
    tremor_hz: float = 9.0
    sample_period: float = 0.002
    name: str = "synthetic"

    def __post_init__(self):
        if self.base_length < 20:
            raise ValidationError("base_length must be >= 20")
        if self.series_per_participant < 1:
            raise ValidationError("series_per_participant must be >= 1")
        if not 0 <= self.length_jitter < 1:
            raise ValidationError("length_jitter must be in [0, 1)")
        for skill, count in self.participants_per_skill.items():
            if skill not in self.class_params:
                raise ValidationError(f"no class parameters for skill {skill!r}")
            if count < 0:
                raise ValidationError("participant counts must be >= 0")
        noises = [self.class_params[s].noise for s in ("N", "I", "E") if s in self.class_params]
        if len(noises) == 3 and not noises[0] > noises[1] > noises[2]:
            raise ValidationError("class noise must satisfy N > I > E")
        for skill, p in self.class_params.items():
            if min(p.noise, p.warp, p.tremor, p.bias) < 0 or p.noise <= 0:
                raise ValidationError(f"class parameters for {skill!r} must be positive")

    @classmethod
    def epidural40(cls, seed: int = 0, base_length: int = 500, separation: float = 1.0, **kwargs) -> "GeneratorConfig":
        """The 8-participant x 5-series benchmark layout (N x4, I x2, E x2)."""
        return cls(
            seed=seed,
            participants_per_skill={"N": 4, "I": 2, "E": 2},
            series_per_participant=5,
            base_length=base_length,
            separation=separation,
            name=kwargs.pop("name", "epidural40-analog"),
            **kwargs,
        )


def _smooth(x: np.ndarray, width: int) -> np.ndarray:
    if width <= 1 or x.shape[0] <= 2:
        return x
    win = np.hanning(min(width, x.shape[0]))
    win /= win.sum()
    return np.convolve(x, win, mode="same")


def _participant_bias(rng: np.random.Generator, amount: float):
    """Smooth per-channel deformation fixed for one participant."""
    coeffs = rng.normal(0.0, 1.0, size=(N_VARS, 3))
    phases = rng.uniform(0.0, 2 * np.pi, size=(N_VARS, 3))

    def curve(t: np.ndarray) -> np.ndarray:
        out = np.zeros((t.shape[0], N_VARS))
        for v in range(N_VARS):
            for h in range(3):
                out[:, v] += coeffs[v, h] / (h + 1) * np.sin(np.pi * (h + 1) * t + phases[v, h])
            out[:, v] *= amount * 1.5 * _NOISE_BASE[v]
        return out

    return curve


def _generate_series(config: GeneratorConfig, skill: str, p_idx: int, s_idx: int, bias_curve) -> MultiSeries:
    params: ClassParams = config.class_params[skill]
    rng = np.random.default_rng([config.seed, 7919, p_idx, s_idx])

    n = int(round(config.base_length * (1.0 + rng.uniform(-config.length_jitter, config.length_jitter))))
    n = max(20, n)

    # random monotone time warp: positions u in [0, 1]
    g = _smooth(rng.normal(0.0, 1.0, n), 31)
    inc = np.exp(params.warp * g)
    cum = np.concatenate([[0.0], np.cumsum(inc)])[:n]
    u = cum / cum[-1] if cum[-1] > 0 else np.linspace(0, 1, n)

    base = template(2048)
    sig = _class_signature(np.linspace(0, 1, 2048)) * (params.shift * config.separation * 1.0)
    grid = np.linspace(0.0, 1.0, 2048)
    values = np.empty((n, N_VARS))
    shape = base + sig
    for v in range(N_VARS):
        values[:, v] = np.interp(u, grid, shape[:, v])
    values += bias_curve(u)

    # class-scaled smooth amplitude noise and tremor
    for v in range(N_VARS):
        values[:, v] += _smooth(rng.normal(0.0, 1.0, n), 7) * params.noise * _NOISE_BASE[v]
    t_real = np.arange(n) * config.sample_period
    tremor_phase = rng.uniform(0.0, 2 * np.pi)
    tremor = np.sin(2 * np.pi * config.tremor_hz * t_real + tremor_phase)
    values += np.outer(tremor, _TREMOR_BASE * params.tremor)
    return MultiSeries(values)


def synth_dataset(config: GeneratorConfig) -> Dataset:
    """Generate the full corpus for a configuration; deterministic per seed."""
    items = []
    p_idx = 0
    for skill in ("N", "I", "E"):
        count = config.participants_per_skill.get(skill, 0)
        for k in range(count):
            participant = f"{skill}{k + 1:02d}"
            bias_amount = config.class_params[skill].bias * config.separation
            bias_curve = _participant_bias(np.random.default_rng([config.seed, 104729, p_idx]), bias_amount)
            for s_idx in range(config.series_per_participant):
                series = _generate_series(config, skill, p_idx, s_idx, bias_curve)
                items.append(LabeledSeries(series=series, skill=skill, participant=participant))
            p_idx += 1
    return Dataset(tuple(items), name=config.name)


def ingest(path) -> Dataset:
    """Load and validate a dataset from a manifest file (see io.load_dataset)."""
    from .io import load_dataset

    return load_dataset(path)
