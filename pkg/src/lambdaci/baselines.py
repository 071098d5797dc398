"""Competitor estimators and bootstrap inference.

Point estimators for the Tukey Lambda shape (L-moments, quantile matching),
quantile-based moment matching for the GLD shape pair, percentile bootstrap
intervals and a bootstrap convex-hull region for ``(chi, xi)``.
"""

from __future__ import annotations

import enum
import functools
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .gld import CSWParams, _s, gld_quantile, shape_to_lambdas
from .hull import DegenerateHullError, convex_hull_2d
from .intervals import ExtInterval
from .rng import substream
from .roots import ConvergenceError, monotone_root
from .tukey import _power_diff

DEFAULT_QMATCH_PROBS = (0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9)
MAX_FAILURE_RATE = 0.2
CSW_RESIDUAL_TOL = 1e-6
COARSE_CELLS = 101
_EDGE = 1e-9


class EstimationError(RuntimeError):
    """A point estimator has no solution on the given sample."""


class UnreliableResultError(EstimationError):
    """Too many bootstrap replicates failed."""


class DegenerateRegionError(EstimationError):
    """Fewer than three distinct retained points, or all collinear."""


def sample_quantile(sample, q: float) -> float:
    """Linear interpolation between order statistics at ``h = (n - 1) q + 1``."""
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    return float(np.quantile(x, q, method="linear"))


# ---------------------------------------------------------------------------
# Tukey Lambda estimators


def _lmoment_batch(rows: np.ndarray) -> np.ndarray:
    """Row-wise L-moment estimates; NaN where the L-scale is not positive."""
    x = np.sort(rows, axis=-1)
    n = x.shape[-1]
    b0 = x.mean(axis=-1)
    b1 = x @ (np.arange(n) / (n - 1)) / n
    l2 = 2.0 * b1 - b0
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = (-3.0 + np.sqrt(1.0 + 8.0 / l2)) / 2.0
    return np.where(l2 > 0, lam, np.nan)


def lmoment_estimate_tl(sample) -> float:
    """Match the sample L-scale to ``2 / ((lam + 1)(lam + 2))``.

    The closed form only has a solution for ``lam > -1``; it is applied
    whatever the truth, so heavy-tailed samples give biased answers.
    """
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need at least two observations")
    lam = _lmoment_batch(x[None, :])[0]
    if np.isnan(lam):
        raise EstimationError("sample L-scale is not positive")
    return float(lam)


lmoment_estimate_tl.batch = _lmoment_batch


def tl_l2(lam: float) -> float:
    """Population L-scale of the Tukey Lambda law, defined for ``lam > -1``."""
    if not lam > -1:
        raise ValueError("L-scale is infinite for lam <= -1")
    return 2.0 / ((lam + 1.0) * (lam + 2.0))


def _check_probs(probs) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if (
        probs.ndim != 1
        or probs.size == 0
        or np.any((probs <= 0) | (probs >= 1) | (probs == 0.5))
    ):
        raise ValueError("probs must lie in (0, 1) and exclude 1/2")
    return probs


def _qmatch_batch(
    rows: np.ndarray, probs=DEFAULT_QMATCH_PROBS, tol: float = 1e-12
) -> np.ndarray:
    """Row-wise quantile-matching estimates; NaN where every level is skipped."""
    probs = _check_probs(probs)
    targets = np.quantile(rows, probs, method="linear", axis=-1).T
    p = np.broadcast_to(probs, targets.shape)
    ok = np.where(p > 0.5, targets > 0, targets < 0)
    roots = np.full(targets.shape, np.nan)
    if ok.any():
        pk = p[ok]
        roots[ok] = monotone_root(
            lambda lam: _power_diff(pk, 1.0 - pk, lam), targets[ok], pk < 0.5, tol=tol
        )
    roots[~np.isfinite(roots)] = np.nan
    count = np.sum(~np.isnan(roots), axis=-1)
    total = np.nansum(roots, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(count > 0, total / count, np.nan)


def quantile_match_estimate_tl(
    sample, probs: Sequence[float] = DEFAULT_QMATCH_PROBS, *, tol: float = 1e-12
) -> float:
    """Average of per-level solutions of ``Q(p, lam) = pi_p``.

    ``Q(p, .)`` is decreasing and positive for ``p > 1/2`` and increasing and
    negative for ``p < 1/2``, so a level whose sample quantile has the wrong
    sign has no solution and is skipped.
    """
    probs = _check_probs(probs)
    x = np.asarray(sample, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("empty sample")
    lam = _qmatch_batch(x[None, :], probs, tol)[0]
    if np.isnan(lam):
        raise EstimationError("no quantile level has a solvable equation")
    return float(lam)


quantile_match_estimate_tl.batch = _qmatch_batch


# ---------------------------------------------------------------------------
# bootstrap


class BootstrapKind(str, enum.Enum):
    PARAMETRIC = "parametric"
    NONPARAMETRIC = "nonparametric"

    @classmethod
    def parse(cls, value: str | BootstrapKind) -> BootstrapKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown bootstrap kind {value!r}") from None


@dataclass(frozen=True)
class BootstrapSpec:
    B: int = 1000
    kind: BootstrapKind = BootstrapKind.NONPARAMETRIC
    alpha: float = 0.05
    seed: int = 0
    key: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", BootstrapKind.parse(self.kind))
        object.__setattr__(self, "key", tuple(int(k) for k in self.key))
        if int(self.B) != self.B or self.B < 100:
            raise ValueError("B must be an integer >= 100")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


def tl_parametric_sampler(lam: float, n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    return _power_diff(u, 1.0 - u, lam)


def _resample(sample, theta_hat, sampler, spec: BootstrapSpec, rep: int) -> np.ndarray:
    rng = substream(spec.seed, *spec.key, rep)
    if spec.kind is BootstrapKind.NONPARAMETRIC:
        return sample[rng.integers(0, sample.size, sample.size)]
    return sampler(theta_hat, sample.size, rng)


def _estimate(estimator, star):
    try:
        out = estimator(star)
    except (EstimationError, ConvergenceError, ValueError, FloatingPointError):
        return None
    if not np.all(np.isfinite(out)):
        return None
    return out


def bootstrap_replicates(
    sample,
    estimator: Callable,
    spec: BootstrapSpec,
    sampler: Callable | None = None,
    theta_hat=None,
) -> tuple[np.ndarray, int]:
    """Replicate estimates in replicate order, plus the number that failed.

    Replicate ``b`` draws from substream ``(seed, *key, b)``, so the result
    does not depend on evaluation order.  An estimator carrying a ``batch``
    attribute is applied to all replicates at once.  Raises
    :class:`UnreliableResultError` when more than 20% of replicates fail.
    """
    sample = np.asarray(sample, dtype=float)
    if theta_hat is None:
        theta_hat = estimator(sample)
    if spec.kind is BootstrapKind.PARAMETRIC and sampler is None:
        sampler = tl_parametric_sampler
    stars = [_resample(sample, theta_hat, sampler, spec, b) for b in range(spec.B)]
    batch = getattr(estimator, "batch", None)
    if batch is not None:
        est = batch(np.stack(stars))
        good = est[np.isfinite(est)]
    else:
        good = [d for d in (_estimate(estimator, st) for st in stars) if d is not None]
    failed = spec.B - len(good)
    if failed > MAX_FAILURE_RATE * spec.B:
        raise UnreliableResultError(f"{failed} of {spec.B} bootstrap replicates failed")
    return np.asarray(good, dtype=float), failed


def bootstrap_ci(
    sample, estimator: Callable, spec: BootstrapSpec, sampler: Callable | None = None
) -> ExtInterval:
    """Percentile interval ``[q_{alpha/2}, q_{1-alpha/2}]`` of replicate estimates.

    Parametric replicates are drawn from ``sampler(theta_hat, n, rng)``,
    which defaults to the Tukey Lambda quantile transform.
    """
    reps, _ = bootstrap_replicates(sample, estimator, spec, sampler)
    lo, hi = np.quantile(reps, [spec.alpha / 2, 1 - spec.alpha / 2], method="linear")
    return ExtInterval(float(lo), float(hi))


# ---------------------------------------------------------------------------
# GLD shape by quantile moment matching


@dataclass(frozen=True)
class PointEstimateCSW:
    mu_hat: float
    sigma_hat: float
    chi_hat: float
    xi_hat: float
    s_hat: float
    kappa_hat: float
    residual: float

    @property
    def converged(self) -> bool:
        return self.residual <= CSW_RESIDUAL_TOL

    def params(self) -> CSWParams:
        return CSWParams(self.mu_hat, self.sigma_hat, self.chi_hat, self.xi_hat)

    def to_dict(self) -> dict[str, float]:
        return {
            k: getattr(self, k)
            for k in (
                "mu_hat",
                "sigma_hat",
                "chi_hat",
                "xi_hat",
                "s_hat",
                "kappa_hat",
                "residual",
            )
        }


def _skew_kurt(sq):
    """Octile skewness and kurtosis from quantiles at ``k/8``, ``k = 1..7``."""
    q1, q2, q3, q4, q5, q6, q7 = sq
    s = (q6 + q2 - 2.0 * q4) / (q6 - q2)
    k = (q7 - q5 + q3 - q1) / (q6 - q2)
    return s, k


_OCTILES = np.arange(1, 8) / 8.0


def shape_moments(chi, xi):
    """Population ``(s, kappa)`` for shape ``(chi, xi)``; vectorised."""
    l3, l4 = shape_to_lambdas(chi, xi)
    l3 = np.asarray(l3)[..., None]
    l4 = np.asarray(l4)[..., None]
    sq = np.moveaxis(_s(_OCTILES, l3, l4), -1, 0)
    s, k = _skew_kurt(sq)
    return (float(s), float(k)) if np.ndim(s) == 0 else (s, k)


def sample_shape_moments(sample) -> tuple[float, float]:
    sq = np.quantile(np.asarray(sample, dtype=float), _OCTILES, method="linear")
    return tuple(float(v) for v in _skew_kurt(sq))


@functools.lru_cache(maxsize=1)
def _coarse_table(cells: int = COARSE_CELLS):
    chi = np.linspace(-1.0, 1.0, cells + 2)[1:-1]
    xi = np.linspace(0.0, 1.0, cells + 2)[1:-1]
    cg, xg = np.meshgrid(chi, xi, indexing="ij")
    s, k = shape_moments(cg, xg)
    return cg, xg, s, k


def _solve_shape(s_hat: float, k_hat: float) -> tuple[float, float, float]:
    cg, xg, s, k = _coarse_table()
    with np.errstate(invalid="ignore"):
        err = (s - s_hat) ** 2 + (k - k_hat) ** 2
    start = np.unravel_index(np.nanargmin(err), err.shape)
    x0 = np.array([cg[start], xg[start]])

    def resid(v):
        s_, k_ = shape_moments(v[0], v[1])
        return np.array([s_ - s_hat, k_ - k_hat])

    fit = least_squares(
        resid,
        x0,
        bounds=([-1 + _EDGE, _EDGE], [1 - _EDGE, 1 - _EDGE]),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    return float(fit.x[0]), float(fit.x[1]), float(np.linalg.norm(fit.fun))


def csw_point_estimates(sample) -> PointEstimateCSW:
    """Octile moment matching for ``(chi, xi)``; median and IQR for location and scale.

    The shape pair minimises squared residuals from a coarse-grid start.  A
    residual above 1e-6 means the sample moments are not attainable; the best
    effort is still returned and :attr:`PointEstimateCSW.converged` is false.
    """
    x = np.asarray(sample, dtype=float)
    if x.size < 8:
        raise ValueError("need at least eight observations")
    q = np.quantile(x, [0.25, 0.5, 0.75], method="linear")
    if not q[2] > q[0]:
        raise EstimationError("sample interquartile range is zero")
    s_hat, k_hat = sample_shape_moments(x)
    chi, xi, res = _solve_shape(s_hat, k_hat)
    return PointEstimateCSW(float(q[1]), float(q[2] - q[0]), chi, xi, s_hat, k_hat, res)


def _shape_estimator(x):
    est = csw_point_estimates(x)
    return np.array([est.chi_hat, est.xi_hat])


def gld_parametric_sampler(
    params: CSWParams, n: int, rng: np.random.Generator
) -> np.ndarray:
    return gld_quantile(rng.random(n), params)


def bootstrap_shape_region(sample, spec: BootstrapSpec) -> np.ndarray:
    """Convex hull of the bootstrap ``(chi*, xi*)`` nearest their coordinate-wise median.

    Keeps ``ceil((1 - alpha) B)`` replicates by Euclidean distance to the
    median and returns the hull as a counterclockwise ``(m, 2)`` vertex array.
    """
    x = np.asarray(sample, dtype=float)
    est = csw_point_estimates(x)
    theta = est.params()
    sampler = lambda th, n, rng: gld_parametric_sampler(theta, n, rng)
    reps, _ = bootstrap_replicates(x, _shape_estimator, spec, sampler, theta_hat=theta)
    med = np.median(reps, axis=0)
    keep = math.ceil((1 - spec.alpha) * spec.B)
    order = np.argsort(np.hypot(*(reps - med).T), kind="stable")
    try:
        return convex_hull_2d(reps[order[:keep]])
    except DegenerateHullError as exc:
        raise DegenerateRegionError(str(exc)) from None
