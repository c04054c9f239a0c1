"""Fixed-point solvers for operator-valued Dyson equations.

Semicircular case:  z G = I + eta(G) G, solved by damped iteration of
G -> (z I - eta(G))^{-1} from G0 = I / z.

Wishart case:  z G = I + eta1((I - eta2(G))^{-1}) G.

Also provides the scalar semicircle closed form, mixtures of semicircle
transforms (the block-circulant limit laws), Stieltjes inversion to a
density table, and density-to-CDF conversion.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import linalg
from .eta import CovarianceMap, EtaPair

RESIDUAL_STALL_STEPS = 10
# a step must beat the best residual by this relative margin to count as
# progress; slow 1-O(eps) contraction near the real axis otherwise never
# triggers the damping that actually accelerates it
RESIDUAL_IMPROVEMENT = 1e-3


@dataclass
class SolverOptions:
    tol: float = 1e-11
    max_iter: int = 20000
    initial_damping: float = 1.0
    min_damping: float = 1.0 / 64.0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if not (0 < self.min_damping <= self.initial_damping <= 1):
            raise ValueError("need 0 < min_damping <= initial_damping <= 1")


@dataclass
class DysonSolution:
    z: complex
    G: np.ndarray
    residual: float
    iterations: int
    converged: bool
    damping_used: float

    def trace(self) -> complex:
        """Normalized trace of G, the scalar Cauchy transform."""
        return complex(np.trace(self.G)) / self.G.shape[0]


def _require_upper_half_plane(z: complex) -> complex:
    z = complex(z)
    if z.imag <= 0:
        raise ValueError(f"z must lie in the upper half-plane, got {z}")
    return z


def solve_semicircular(eta: CovarianceMap, z: complex,
                       opts: SolverOptions | None = None) -> DysonSolution:
    """Solve z G = I + eta(G) G by damped fixed-point iteration.

    Convergence is declared on the equation residual
    ||z G - I - eta(G) G||_F <= opts.tol, a certificate independent of
    the iteration path.  On failure returns a diagnostic solution with
    converged=False.
    """
    z = _require_upper_half_plane(z)
    opts = opts or SolverOptions()
    d = eta.d
    eye = np.eye(d, dtype=np.complex128)
    G = eye / z
    theta = opts.initial_damping
    best = np.inf
    stall = 0
    residual = np.inf
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        try:
            step = linalg.invert(z * eye - eta.apply(G))
        except linalg.SingularMatrixError:
            if theta <= opts.min_damping:
                return DysonSolution(z, G, residual, iterations, False, theta)
            theta = max(theta / 2, opts.min_damping)
            continue
        G = (1 - theta) * G + theta * step
        residual = linalg.frobenius_norm(z * G - eye - eta.apply(G) @ G)
        if residual <= opts.tol:
            return DysonSolution(z, G, residual, iterations, True, theta)
        if residual < best * (1 - RESIDUAL_IMPROVEMENT):
            best = residual
            stall = 0
        else:
            best = min(best, residual)
            stall += 1
            if stall >= RESIDUAL_STALL_STEPS:
                theta = max(theta / 2, opts.min_damping)
                stall = 0
    return DysonSolution(z, G, residual, iterations, False, theta)


def wishart_residual(pair: EtaPair, G: np.ndarray, z: complex) -> float:
    eye = np.eye(pair.d, dtype=np.complex128)
    mid = linalg.invert(eye - pair.eta2.apply(G))
    return linalg.frobenius_norm(z * G - eye - pair.eta1.apply(mid) @ G)


def solve_wishart(pair: EtaPair, z: complex,
                  opts: SolverOptions | None = None) -> DysonSolution:
    """Solve z G = I + eta1((I - eta2(G))^{-1}) G by damped iteration.

    The middle inverse is guarded: a singular (I - eta2(G)) triggers a
    retry of the step at halved damping, then a diagnostic failure.
    """
    z = _require_upper_half_plane(z)
    opts = opts or SolverOptions()
    d = pair.d
    eye = np.eye(d, dtype=np.complex128)
    G = eye / z
    prev_G = G
    prev_step = None
    theta = opts.initial_damping
    best = np.inf
    stall = 0
    residual = np.inf
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        try:
            mid = linalg.invert(eye - pair.eta2.apply(G))
            step = linalg.invert(z * eye - pair.eta1.apply(mid))
        except linalg.SingularMatrixError:
            if theta <= opts.min_damping or prev_step is None:
                return DysonSolution(z, G, residual, iterations, False, theta)
            theta = max(theta / 2, opts.min_damping)
            G = (1 - theta) * prev_G + theta * prev_step
            continue
        prev_G, prev_step = G, step
        G = (1 - theta) * G + theta * step
        try:
            residual = wishart_residual(pair, G, z)
        except linalg.SingularMatrixError:
            if theta <= opts.min_damping:
                return DysonSolution(z, G, np.inf, iterations, False, theta)
            theta = max(theta / 2, opts.min_damping)
            G = (1 - theta) * prev_G + theta * prev_step
            continue
        if residual <= opts.tol:
            return DysonSolution(z, G, residual, iterations, True, theta)
        if residual < best * (1 - RESIDUAL_IMPROVEMENT):
            best = residual
            stall = 0
        else:
            best = min(best, residual)
            stall += 1
            if stall >= RESIDUAL_STALL_STEPS:
                theta = max(theta / 2, opts.min_damping)
                stall = 0
    return DysonSolution(z, G, residual, iterations, False, theta)


def scalar_semicircle_cauchy(t: float, z):
    """Cauchy transform of the semicircle law of variance t.

    Returns the root of t g^2 - z g + 1 = 0 with negative imaginary part,
    computed cancellation-free as g = 2 / (z + s) with the larger-modulus
    denominator.  Accepts scalar or array z (upper half-plane).
    """
    if t <= 0:
        raise ValueError("variance t must be positive")
    z = np.asarray(z, dtype=np.complex128)
    if np.any(z.imag <= 0):
        raise ValueError("z must lie in the upper half-plane")
    s = np.sqrt(z * z - 4 * t)
    den = np.where(np.abs(z + s) >= np.abs(z - s), z + s, z - s)
    g = 2.0 / den
    return complex(g) if g.ndim == 0 else g


def mixture_cauchy(weights, variances, z):
    """Cauchy transform of a finite mixture of semicircle laws."""
    w = np.asarray(weights, dtype=float)
    t = np.asarray(variances, dtype=float)
    if w.shape != t.shape or w.ndim != 1 or w.size == 0:
        raise ValueError("weights and variances must be matching 1-D lists")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights sum to {w.sum()!r}, expected 1")
    z = np.asarray(z, dtype=np.complex128)
    g = sum(wm * scalar_semicircle_cauchy(tm, z) for wm, tm in zip(w, t))
    return complex(g) if np.ndim(g) == 0 else g


def circulant_mixture(d: int, exact: bool = False):
    """Weights and variances of the block-circulant limit law.

    Odd d:  (d-1)/d at variance (d-1)/d  and  1/d at variance (2d-1)/d.
    Even d: (d-2)/d at variance (d-2)/d  and  2/d at variance (2d-2)/d.
    With exact=True returns Fractions (the identities sum(w) = 1 and
    sum(w*t) = 1 then hold exactly).
    """
    if d < 2:
        raise ValueError("circulant mixture needs d >= 2")
    if d % 2:
        w = [Fraction(d - 1, d), Fraction(1, d)]
        t = [Fraction(d - 1, d), Fraction(2 * d - 1, d)]
    else:
        w = [Fraction(d - 2, d), Fraction(2, d)]
        t = [Fraction(d - 2, d), Fraction(2 * d - 2, d)]
    # d=2 puts zero mass on a zero-variance component; drop it
    keep = [i for i, wi in enumerate(w) if wi != 0]
    w = [w[i] for i in keep]
    t = [t[i] for i in keep]
    if exact:
        return w, t
    return [float(x) for x in w], [float(x) for x in t]


class DensityEvaluationError(RuntimeError):
    """Solver failed while evaluating the density at a grid point."""

    def __init__(self, x: float, message: str):
        super().__init__(f"density evaluation failed at x={x!r}: {message}")
        self.x = x


def stieltjes_density(g, grid, eps: float,
                      opts: SolverOptions | None = None):
    """Boundary-value density rho(x) = -Im g(x + i eps) / pi on a grid.

    ``g`` is either a callable z -> scalar Cauchy value or a
    CovarianceMap (then the semicircular solver's normalized trace is
    used).  Values are clipped to 0 from below; the clipped mass is
    O(eps) + O(grid step^2) away from a unit integral for a probability
    law whose support the grid covers.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    xs = np.asarray(grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0:
        raise ValueError("grid must be a nonempty 1-D array")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("grid must be strictly increasing")
    if isinstance(g, CovarianceMap):
        eta_map = g

        def g_at(z):
            sol = solve_semicircular(eta_map, z, opts)
            if not sol.converged:
                raise DensityEvaluationError(
                    z.real, f"solver residual {sol.residual:.3e}")
            return sol.trace()

        values = np.array([g_at(complex(x, eps)) for x in xs])
    elif callable(g):
        try:
            values = np.asarray(g(xs + 1j * eps), dtype=np.complex128)
            if values.shape != xs.shape:
                raise TypeError
        except TypeError:
            values = np.array([complex(g(complex(x, eps))) for x in xs])
    else:
        raise TypeError("g must be callable or a CovarianceMap")
    rho = np.clip(-values.imag / np.pi, 0.0, None)
    return xs, rho


def cdf_from_density(xs, rho):
    """Monotone [0,1] CDF from a density table, trapezoid-cumulated.

    The cumulative mass is renormalized to 1; the returned callable
    evaluates by linear interpolation, clamped to [0,1] outside the grid.
    """
    xs = np.asarray(xs, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if xs.size == 0 or xs.shape != rho.shape:
        raise ValueError("empty or mismatched density table")
    if xs.size == 1:
        raise ValueError("density table needs at least two points")
    steps = np.diff(xs)
    cumulative = np.concatenate(
        [[0.0], np.cumsum(steps * (rho[1:] + rho[:-1]) / 2.0)]
    )
    total = cumulative[-1]
    if total <= 0:
        raise ValueError("density table has zero total mass")
    cumulative /= total

    def cdf(x):
        return np.clip(np.interp(x, xs, cumulative, left=0.0, right=1.0), 0.0, 1.0)

    return cdf
