"""Penalized-distance selection of the bootstrap block length.

For each candidate length ``l`` the series and its bootstrap replicates are
reduced to non-overlapping block means, and the objective

    (1/M) * sum_i (l/n) * sum_T (rep_mean[T, i] - orig_mean[T])**2
        + (log(n) / n**t) * l

is evaluated.  The squared-distance term rewards replicates whose coarse
structure tracks the original; the linear penalty makes the curve convex in
``l`` so the argmin is stable.  Selection runs every candidate on the same
base seed, so results are reproducible and common random numbers damp the
candidate-to-candidate noise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bootstrap import BlockPlan, BootstrapMethod, PseudoSeries, batch_resample
from .errors import ValidationError
from .timeseries import LogReturnSeries, _freeze


@dataclass(frozen=True)
class SelectorConfig:
    """Knobs for :func:`select_block_length`.

    ``l_max=None`` resolves to ``min(50, n // 4)`` (clamped to >= 1) when the
    series length is known.  ``locality`` only matters for the LBB method.
    """

    method: BootstrapMethod = BootstrapMethod.MBB
    reps: int = 100
    l_min: int = 1
    l_max: int | None = None
    t: float = 2.0
    locality: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "method", BootstrapMethod(self.method))
        if self.reps < 1:
            raise ValidationError("reps must be >= 1")
        if self.t <= 0:
            raise ValidationError("penalty exponent t must be > 0")
        if self.l_min < 1:
            raise ValidationError("l_min must be >= 1")
        if self.l_max is not None and self.l_max < self.l_min:
            raise ValidationError("l_max must be >= l_min")

    def resolved_l_max(self, n: int) -> int:
        if self.l_max is not None:
            if self.l_max > n:
                raise ValidationError(f"l_max {self.l_max} exceeds series length {n}")
            return self.l_max
        return max(self.l_min, min(50, n // 4))


@dataclass(frozen=True)
class SelectorCurve:
    """Objective decomposition per candidate length, in ascending ``l`` order."""

    lengths: np.ndarray
    distances: np.ndarray
    penalties: np.ndarray
    objectives: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lengths", np.ascontiguousarray(self.lengths, dtype=np.intp))
        self.lengths.setflags(write=False)
        for name in ("distances", "penalties", "objectives"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["l", "distance", "penalty", "objective"])
            for l, d, p, o in zip(self.lengths, self.distances, self.penalties, self.objectives):
                w.writerow([int(l), repr(float(d)), repr(float(p)), repr(float(o))])


def block_means(x, l: int) -> np.ndarray:
    """Means of consecutive length-``l`` blocks; the trailing remainder is dropped."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if not 1 <= l <= n:
        raise ValidationError(f"block length {l} outside [1, {n}]")
    b = n // l
    return x[: b * l].reshape(b, l).mean(axis=1)


def distance(x, replicates: list[PseudoSeries] | list[np.ndarray], l: int) -> float:
    """Average scaled squared distance between replicate and original block means."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    orig = block_means(x, l)
    total = 0.0
    for rep in replicates:
        values = rep.values if isinstance(rep, PseudoSeries) else np.asarray(rep, dtype=np.float64)
        if values.size != n:
            raise ValidationError(f"replicate length {values.size} != series length {n}")
        diff = block_means(values, l) - orig
        total += (l / n) * float(diff @ diff)
    return total / len(replicates)


def length_penalty(n: int, l: int, t: float) -> float:
    """The convexifying linear penalty log(n) / n**t * l."""
    return math.log(n) / n**t * l


def objective(x, l: int, cfg: SelectorConfig) -> float:
    """Distance over ``cfg.reps`` fresh replicates at length ``l``, plus the penalty."""
    x = np.asarray(x, dtype=np.float64)
    plan = BlockPlan(method=cfg.method, block_len=l, locality=cfg.locality, seed=cfg.seed)
    reps = batch_resample(x, plan, cfg.reps)
    return distance(x, reps, l) + length_penalty(x.size, l, cfg.t)


def select_block_length(
    x: LogReturnSeries | np.ndarray, cfg: SelectorConfig
) -> tuple[int, SelectorCurve]:
    """Evaluate the objective over the candidate range and return the argmin.

    Ties break toward the smaller length.  The full curve is returned so the
    convexity can be plotted or re-checked.
    """
    values = x.values if isinstance(x, LogReturnSeries) else np.asarray(x, dtype=np.float64)
    n = values.size
    l_max = cfg.resolved_l_max(n)
    if cfg.l_min > n:
        raise ValidationError(f"l_min {cfg.l_min} exceeds series length {n}")
    lengths = np.arange(cfg.l_min, l_max + 1)
    dists = np.empty(len(lengths))
    pens = np.empty(len(lengths))
    for j, l in enumerate(lengths):
        plan = BlockPlan(method=cfg.method, block_len=int(l), locality=cfg.locality, seed=cfg.seed)
        reps = batch_resample(values, plan, cfg.reps)
        dists[j] = distance(values, reps, int(l))
        pens[j] = length_penalty(n, int(l), cfg.t)
    objs = dists + pens
    curve = SelectorCurve(lengths=lengths, distances=dists, penalties=pens, objectives=objs)
    l_opt = int(lengths[int(np.argmin(objs))])
    return l_opt, curve
