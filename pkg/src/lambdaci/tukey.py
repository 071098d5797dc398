"""Tukey Lambda quantile functions and confidence sets for the shape parameter.

The confidence set for ``lambda`` collects every value whose quantile function
threads the CDF band at each order statistic::

    {lam : Q(lower[i], lam) <= X_(i) <= Q(upper[i], lam)  for all i}

Two versions are provided.  :func:`tl_ci_raw` works with the data as given and
is unbounded below whenever a band level straddles the median.
:func:`tl_ci_abs` uses ``|X|``, whose quantile function ``Q((1 + p) / 2, lam)``
is strictly decreasing in ``lam``, so each order statistic yields a bounded
interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bands import ConfidenceBand
from .intervals import ExtInterval
from .rng import substream_uniforms
from .roots import monotone_root

#: below this |lambda| the logistic (lambda = 0) branch is used
LAMBDA_ZERO = 1e-12
ROOT_TOL = 1e-10


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


def _power_diff(p, q, lam):
    """``(p**lam - q**lam) / lam`` for ``p + q == 1``, with endpoint limits.

    ``p`` and ``q`` are passed separately so that callers holding ``q`` exactly
    (e.g. ``(1 - x) / 2``) avoid the rounding in ``1 - p``.
    """
    p, q, lam = np.broadcast_arrays(
        np.asarray(p, float), np.asarray(q, float), np.asarray(lam, float)
    )
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lp = np.log(p)
        lq = np.log(q)
        a = lam * lp
        b = lam * lq
        # near lambda = 0 the expm1 form keeps full precision
        small = np.maximum(np.abs(a), np.abs(b)) < 0.5
        near = (np.expm1(a) - np.expm1(b)) / lam
        # elsewhere work in logs so large |lambda| overflows only when the result does
        top = np.maximum(a, b)
        log_mag = top + np.log(-np.expm1(-np.abs(a - b))) - np.log(np.abs(lam))
        far = np.sign(a - b) * np.sign(lam) * np.exp(log_mag)
        out = np.where(small, near, far)
        out = np.where(np.abs(lam) < LAMBDA_ZERO, lp - lq, out)
        out = np.where(p == q, 0.0, out)
        pos = lam > LAMBDA_ZERO
        out = np.where(p == 0.0, np.where(pos, -1.0 / lam, -np.inf), out)
        out = np.where(q == 0.0, np.where(pos, 1.0 / lam, np.inf), out)
    return out


def _check_prob(p):
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0) & (p <= 1))):
        raise ValueError("probabilities must lie in [0, 1]")
    return p


def tl_quantile(p, lam):
    """Tukey Lambda quantile ``Q(p, lam) = (p**lam - (1 - p)**lam) / lam``.

    ``lam = 0`` gives the logistic quantile ``log(p / (1 - p))``.  At the
    endpoints ``Q(0) = -1/lam`` and ``Q(1) = 1/lam`` for ``lam > 0`` and are
    infinite otherwise.
    """
    p = _check_prob(p)
    return _scalar_or_array(_power_diff(p, 1.0 - p, lam))


def tl_abs_quantile(p, lam):
    """Quantile function of ``|X|``: ``Q((1 + p) / 2, lam)``."""
    p = _check_prob(p)
    return _scalar_or_array(_power_diff(0.5 * (1.0 + p), 0.5 * (1.0 - p), lam))


def _phi(t):
    """``(t - 1) e^t + 1`` without cancellation near 0."""
    t = np.asarray(t, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        direct = (t - 1.0) * np.exp(t) + 1.0
    series = np.zeros_like(t)
    term = np.ones_like(t)
    for k in range(1, 25):
        term = term * t / k
        if k >= 2:
            series = series + (k - 1) * term
    return np.where(np.abs(t) < 0.5, series, direct)


def tl_abs_quantile_dlambda(p, lam):
    """Partial derivative of :func:`tl_abs_quantile` with respect to ``lam``.

    Equals ``(lam * A'(lam) - A(lam)) / lam**2`` with
    ``A(lam) = p'**lam - q'**lam``, ``p' = (1 + p) / 2``, ``q' = (1 - p) / 2``,
    and ``((log p')**2 - (log q')**2) / 2`` at ``lam = 0``.
    """
    p = _check_prob(p)
    lam = np.asarray(lam, dtype=float)
    p, lam = np.broadcast_arrays(p, lam)
    if np.any(p == 0):
        raise ValueError("derivative requires p > 0")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lp = np.log(0.5 * (1.0 + p))
        lq = np.log(0.5 * (1.0 - p))
        at_zero = 0.5 * (lp * lp - lq * lq)
        general = (_phi(lam * lp) - _phi(lam * lq)) / (lam * lam)
        out = np.where(np.abs(lam) < LAMBDA_ZERO, at_zero, general)
        # p = 1: Q~ = 1/lam for lam > 0
        out = np.where(p == 1.0, np.where(lam > 0, -1.0 / (lam * lam), -np.inf), out)
    return _scalar_or_array(out)


@dataclass(frozen=True)
class TukeySample:
    values: np.ndarray = field(repr=False)
    sorted_values: np.ndarray = field(repr=False)
    sorted_abs: np.ndarray = field(repr=False)

    @classmethod
    def from_values(cls, values) -> TukeySample:
        values = np.asarray(values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("sample must be a non-empty vector")
        return cls(values, np.sort(values), np.sort(np.abs(values)))

    @property
    def n(self) -> int:
        return self.values.size


def tl_sample(n: int, lam: float, seed: int, *key: int) -> TukeySample:
    """``n`` inverse-transform draws ``Q(U, lam)``; deterministic in ``(seed, key)``."""
    u = substream_uniforms(seed, n, *key)
    return TukeySample.from_values(_power_diff(u, 1.0 - u, lam))


# ---------------------------------------------------------------------------
# per-order-statistic constraint sets


def _solve(p, q, target, increasing):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    return monotone_root(
        lambda lam: _power_diff(p, q, lam), target, increasing, tol=ROOT_TOL
    )


def raw_per_index(x, ell, u):
    """Vectorised constraint sets ``{lam : Q(ell, lam) <= x <= Q(u, lam)}``.

    Returns arrays ``(lo, hi, empty)``.  Each set is an interval, a ray that is
    unbounded below, the whole line, or empty.
    """
    x, ell, u = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(ell, float), np.asarray(u, float)
    )
    m = x.size
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    empty = np.zeros(m, dtype=bool)
    x, ell, u = x.ravel(), ell.ravel(), u.ravel()

    # lower band: Q(ell, lam) <= x.  Q(ell, .) is increasing and negative for
    # ell < 1/2, identically 0 at 1/2, decreasing and positive above 1/2.
    empty |= (ell == 0.5) & (x < 0)
    empty |= (ell > 0.5) & (x <= 0)
    cap_hi = (ell < 0.5) & (x < 0)
    floor_lo = (ell > 0.5) & (x > 0)

    # upper band: Q(u, lam) >= x.
    empty |= (u == 0.5) & (x > 0)
    empty |= (u < 0.5) & (x >= 0)
    cap_hi_u = (u > 0.5) & (x > 0)
    floor_lo_u = (u < 0.5) & (x < 0)

    probs = np.concatenate([ell[cap_hi | floor_lo], u[cap_hi_u | floor_lo_u]])
    targets = np.concatenate([x[cap_hi | floor_lo], x[cap_hi_u | floor_lo_u]])
    incr = probs < 0.5
    roots = _solve(probs, 1.0 - probs, targets, incr) if probs.size else probs
    k = int((cap_hi | floor_lo).sum())
    r_ell = np.full(m, np.nan)
    r_u = np.full(m, np.nan)
    r_ell[cap_hi | floor_lo] = roots[:k]
    r_u[cap_hi_u | floor_lo_u] = roots[k:]

    hi = np.where(cap_hi, np.minimum(hi, r_ell), hi)
    lo = np.where(floor_lo, np.maximum(lo, r_ell), lo)
    hi = np.where(cap_hi_u, np.minimum(hi, r_u), hi)
    lo = np.where(floor_lo_u, np.maximum(lo, r_u), lo)

    empty |= (lo > hi) | (hi == -np.inf) | (lo == np.inf)
    lo = np.where(empty, np.nan, lo)
    hi = np.where(empty, np.nan, hi)
    return lo, hi, empty


def abs_per_index(x, ell, u):
    """Vectorised sets ``{lam : Q~(ell, lam) <= x <= Q~(u, lam)}`` for ``x >= 0``.

    ``Q~(p, .)`` is strictly decreasing with range ``(0, inf)`` for
    ``0 < p < 1``, so ``ell`` gives a lower bound on ``lam`` and ``u`` an upper
    bound.  ``ell = 0`` and ``x = 0`` switch the respective side off.
    """
    x, ell, u = np.broadcast_arrays(
        np.asarray(x, float), np.asarray(ell, float), np.asarray(u, float)
    )
    x, ell, u = x.ravel(), ell.ravel(), u.ravel()
    if np.any(x < 0):
        raise ValueError("absolute values must be nonnegative")
    m = x.size
    lo = np.full(m, -np.inf)
    hi = np.full(m, np.inf)
    empty = ((ell > 0) & (x == 0)) | ((u == 0) & (x > 0))
    need_lo = (ell > 0) & (x > 0)
    need_hi = (u > 0) & (x > 0)

    probs = np.concatenate([ell[need_lo], u[need_hi]])
    targets = np.concatenate([x[need_lo], x[need_hi]])
    if probs.size:
        roots = _solve(0.5 * (1.0 + probs), 0.5 * (1.0 - probs), targets, False)
        k = int(need_lo.sum())
        lo[need_lo] = roots[:k]
        hi[need_hi] = roots[k:]
    empty |= (lo > hi) | (hi == -np.inf) | (lo == np.inf)
    lo = np.where(empty, np.nan, lo)
    hi = np.where(empty, np.nan, hi)
    return lo, hi, empty


def tl_per_index_interval(x: float, ell: float, u: float) -> ExtInterval:
    """Set of ``lam`` with ``Q(ell, lam) <= x <= Q(u, lam)`` for one order statistic."""
    if not 0 <= ell <= u <= 1:
        raise ValueError("need 0 <= ell <= u <= 1")
    lo, hi, empty = raw_per_index(x, ell, u)
    if empty[0]:
        return ExtInterval.make_empty()
    return ExtInterval(float(lo[0]), float(hi[0]))


def tl_abs_per_index_interval(x: float, ell: float, u: float) -> ExtInterval:
    if not 0 <= ell <= u <= 1:
        raise ValueError("need 0 <= ell <= u <= 1")
    lo, hi, empty = abs_per_index(x, ell, u)
    if empty[0]:
        return ExtInterval.make_empty()
    return ExtInterval(float(lo[0]), float(hi[0]))


def _intersect_all(lo, hi, empty) -> ExtInterval:
    if empty.any():
        return ExtInterval.make_empty()
    return ExtInterval.from_bounds(np.max(lo), np.min(hi))


def _check_sizes(sample: TukeySample, band: ConfidenceBand):
    if sample.n != band.n:
        raise ValueError(f"band is for n={band.n} but the sample has {sample.n} values")


def tl_ci_raw(sample: TukeySample, band: ConfidenceBand) -> ExtInterval:
    """Confidence set for ``lambda`` from the untransformed order statistics.

    May be empty (the model does not fit) or unbounded below.
    """
    _check_sizes(sample, band)
    return _intersect_all(*raw_per_index(sample.sorted_values, band.lower, band.upper))


def tl_ci_abs(sample: TukeySample, band: ConfidenceBand) -> ExtInterval:
    """Confidence set for ``lambda`` from the order statistics of ``|X|``."""
    _check_sizes(sample, band)
    return _intersect_all(*abs_per_index(sample.sorted_abs, band.lower, band.upper))


def tl_ci(
    sample: TukeySample, band: ConfidenceBand, transform: str = "abs"
) -> ExtInterval:
    if transform == "abs":
        return tl_ci_abs(sample, band)
    if transform == "raw":
        return tl_ci_raw(sample, band)
    raise ValueError(f"unknown transform {transform!r}")
