"""Series containers, normalization, resampling and dataset handling.

A recording is a length-n sequence of V-dimensional samples stored as an
(n, V) float64 array. The conventional channel layout for motion recordings
is x, y, z (millimetres), pressure (kilopascals) and force (newtons); after
normalization all channels are unitless.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConstantChannelWarning, InsufficientData, ValidationError

SKILL_LABELS = ("N", "I", "E")

#: Participant skill layout of the 8x5 benchmark subset.
SUBSET40_LAYOUT = ("N", "I", "E", "E", "I", "N", "N", "N")

DEFAULT_CHANNELS = ("x", "y", "z", "pressure", "force")


def _as_values(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValidationError(f"series values must be 1-D or 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"series must have at least one sample and one variable, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("series values must be finite (no NaN/inf)")
    return arr


@dataclass(frozen=True, eq=False)
class MultiSeries:
    """One recording: n samples of V variables each. Values are immutable."""

    values: np.ndarray

    def __post_init__(self):
        arr = _as_values(self.values)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def channel(self, v: int) -> np.ndarray:
        return self.values[:, v]

    def __len__(self) -> int:
        return self.n

    def __repr__(self):
        return f"MultiSeries(n={self.n}, n_vars={self.n_vars})"


@dataclass(frozen=True)
class LabeledSeries:
    """A recording with its skill label and the participant who produced it."""

    series: MultiSeries
    skill: str
    participant: str

    def __post_init__(self):
        if self.skill not in SKILL_LABELS:
            raise ValidationError(f"unknown skill label {self.skill!r}, expected one of {SKILL_LABELS}")
        if not self.participant:
            raise ValidationError("participant identifier must be non-empty")


@dataclass(frozen=True)
class Dataset:
    """An ordered, non-empty collection of labeled recordings sharing one variable count."""

    items: tuple[LabeledSeries, ...]
    name: str = "dataset"

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise ValidationError("dataset must contain at least one series")
        v = items[0].series.n_vars
        for k, it in enumerate(items):
            if it.series.n_vars != v:
                raise ValidationError(f"item {k} has {it.series.n_vars} variables, expected {v}")
        object.__setattr__(self, "items", items)

    @property
    def n_vars(self) -> int:
        return self.items[0].series.n_vars

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def series(self) -> list[MultiSeries]:
        return [it.series for it in self.items]

    def skills(self) -> list[str]:
        return [it.skill for it in self.items]

    def participants(self) -> list[str]:
        return [it.participant for it in self.items]


def normalize(series: MultiSeries, mode: str = "per-series", stats=None) -> MultiSeries:
    """Z-score each variable channel: subtract the population mean, divide by sigma.

    ``mode="per-series"`` uses the series' own per-variable statistics;
    ``mode="per-dataset"`` applies externally supplied ``stats`` (a
    ``(mean, sigma)`` pair of length-V arrays, e.g. from ``dataset_stats``),
    which is the form needed when normalizing a live stream against a
    training population.

    A zero-variance channel cannot be scaled; it is set to all zeros and a
    ``ConstantChannelWarning`` naming the variable is emitted.
    """
    vals = series.values
    if mode == "per-series":
        mean = vals.mean(axis=0)
        sigma = vals.std(axis=0)  # population sigma (ddof=0)
    elif mode == "per-dataset":
        if stats is None:
            raise ValueError("per-dataset mode requires stats=(mean, sigma)")
        mean = np.asarray(stats[0], dtype=np.float64)
        sigma = np.asarray(stats[1], dtype=np.float64)
        if mean.shape != (series.n_vars,) or sigma.shape != (series.n_vars,):
            raise ValueError(f"stats must be two length-{series.n_vars} vectors")
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")

    out = np.empty_like(vals)
    for v in range(series.n_vars):
        if sigma[v] > 0.0:
            out[:, v] = (vals[:, v] - mean[v]) / sigma[v]
        else:
            out[:, v] = 0.0
            warnings.warn(ConstantChannelWarning(f"variable {v} has zero variance; channel set to zeros"))
    return MultiSeries(out)


def dataset_stats(dataset: Dataset):
    """Per-variable mean and population sigma pooled over every sample of every series."""
    stacked = np.concatenate([it.series.values for it in dataset.items], axis=0)
    return stacked.mean(axis=0), stacked.std(axis=0)


def resample(series: MultiSeries, target_length: int) -> MultiSeries:
    """Resample to ``target_length`` samples by per-variable linear interpolation.

    The first and last samples are preserved exactly.
    """
    if target_length < 2:
        raise ValueError(f"target_length must be >= 2, got {target_length}")
    n = series.n
    if target_length == n:
        return series
    src = np.arange(n, dtype=np.float64)
    dst = np.linspace(0.0, n - 1.0, target_length)
    out = np.empty((target_length, series.n_vars))
    for v in range(series.n_vars):
        out[:, v] = np.interp(dst, src, series.values[:, v])
    # np.interp returns exact endpoints, but guard against fp drift anyway
    out[0] = series.values[0]
    out[-1] = series.values[-1]
    return MultiSeries(out)


def resample_values(values: np.ndarray, target_length: int) -> np.ndarray:
    """Array-level single-channel / multi-channel linear resampling helper."""
    arr = np.asarray(values, dtype=np.float64)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[:, None]
    out = resample(MultiSeries(arr), target_length).values
    return out[:, 0] if squeeze else out


def epidural40_split(dataset: Dataset) -> Dataset:
    """Select the 40-series benchmark subset: 8 participants x 5 series.

    The participant skill multiset follows SUBSET40_LAYOUT (N x4, I x2,
    E x2). Eligible participants (>= 5 series) are chosen in lexicographic
    identifier order within each skill class; each contributes 5 series taken
    in a canonical content order (length, then raw values), so the result is
    a pure function of the dataset contents and invariant under shuffling of
    the input.
    """
    need = {s: SUBSET40_LAYOUT.count(s) for s in SKILL_LABELS}

    by_participant: dict[str, list[LabeledSeries]] = {}
    skill_of: dict[str, str] = {}
    for it in dataset.items:
        by_participant.setdefault(it.participant, []).append(it)
        prev = skill_of.setdefault(it.participant, it.skill)
        if prev != it.skill:
            raise ValidationError(f"participant {it.participant!r} carries conflicting skill labels")

    eligible: dict[str, list[str]] = {s: [] for s in need}
    for pid in sorted(by_participant):
        if len(by_participant[pid]) >= 5 and skill_of[pid] in need:
            eligible[skill_of[pid]].append(pid)

    chosen: list[str] = []
    for skill in ("N", "I", "E"):
        if len(eligible[skill]) < need[skill]:
            raise InsufficientData(skill)
        chosen.extend(eligible[skill][: need[skill]])

    def content_key(it: LabeledSeries):
        return (it.series.n, it.series.values.tobytes())

    items: list[LabeledSeries] = []
    for pid in sorted(chosen):
        items.extend(sorted(by_participant[pid], key=content_key)[:5])
    return Dataset(tuple(items), name=f"{dataset.name}-40")
