"""Empirical spectral statistics: ECDFs, empirical Cauchy transforms,
Kolmogorov distance and seeded Monte Carlo averaging."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .sampler import ModelSpec, SpectrumSample, spectrum


@dataclass
class EmpiricalCDF:
    """Right-continuous step function k/n at the sorted sample points."""

    points: np.ndarray

    def __init__(self, points):
        pts = np.sort(np.asarray(points, dtype=float))
        if pts.size == 0:
            raise ValueError("empty sample")
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.size

    def __call__(self, x):
        return np.searchsorted(self.points, x, side="right") / self.n

    def left_limit(self, x):
        return np.searchsorted(self.points, x, side="left") / self.n


def _eigenvalues(sample) -> np.ndarray:
    if isinstance(sample, SpectrumSample):
        return sample.eigenvalues
    return np.asarray(sample, dtype=float)


def empirical_cauchy(sample, z) -> complex:
    """(1/n) sum_i 1/(z - lambda_i): the normalized resolvent trace."""
    z = complex(z)
    if z.imag == 0:
        raise ValueError("z must have nonzero imaginary part")
    ev = _eigenvalues(sample)
    return complex(np.mean(1.0 / (z - ev)))


def kolmogorov_distance(f, g) -> float:
    """Exact sup distance between a step ECDF and a monotone CDF.

    Evaluates both one-sided gaps at every jump of ``f`` (the naive
    one-sided sup underestimates by up to 1/n).  When ``g`` is itself an
    EmpiricalCDF its own left limits are used at the jumps, making the
    step-vs-step distance exact as well (identical samples give 0).
    """
    if not isinstance(f, EmpiricalCDF):
        f = EmpiricalCDF(f)
    values, counts = np.unique(f.points, return_counts=True)
    upper = np.cumsum(counts) / f.n
    lower = np.concatenate([[0.0], upper[:-1]])
    gv = np.asarray(g(values), dtype=float)
    gv_left = g.left_limit(values) if isinstance(g, EmpiricalCDF) else gv
    gaps = np.maximum(np.abs(upper - gv), np.abs(lower - gv_left))
    if isinstance(g, EmpiricalCDF):
        # jumps of g away from f's support also contribute; there f is flat
        own = np.setdiff1d(np.unique(g.points), values)
        if own.size:
            fv = f(own)
            gaps = np.concatenate([gaps, np.abs(fv - g(own)),
                                   np.abs(fv - g.left_limit(own))])
    return float(np.max(gaps))


@dataclass
class MeanCauchyResult:
    z: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    trials: int


def _trial_row(spec: ModelSpec, trial: int, zs: np.ndarray) -> np.ndarray:
    ev = spectrum(spec, trial).eigenvalues
    return np.array([np.mean(1.0 / (z - ev)) for z in zs])


def mean_cauchy(spec: ModelSpec, z_list, trials: int,
                workers: int | None = None) -> MeanCauchyResult:
    """Per-z mean and standard error of the empirical Cauchy transform.

    Trials are seeded (spec.seed, trial_index) so the result is
    deterministic for any worker count; rows are aggregated in trial
    order.  The scalar stderr is the larger of the real and imaginary
    standard errors.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    zs = np.atleast_1d(np.asarray(z_list, dtype=np.complex128))
    if np.any(zs.imag == 0):
        raise ValueError("z values must have nonzero imaginary part")
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda t: _trial_row(spec, t, zs), range(trials)))
    else:
        rows = [_trial_row(spec, t, zs) for t in range(trials)]
    data = np.stack(rows)
    mean = data.mean(axis=0)
    se = np.maximum(data.real.std(axis=0, ddof=1),
                    data.imag.std(axis=0, ddof=1)) / np.sqrt(trials)
    return MeanCauchyResult(z=zs, mean=mean, stderr=se, trials=trials)
