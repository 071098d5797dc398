"""Distribution-free confidence bands for a CDF at the order statistics.

Two constructions are provided:

* DKW, the fixed-width band from the Dvoretzky-Kiefer-Wolfowitz-Massart
  inequality, and
* DW, the variable-width band obtained by inverting the Duembgen-Wellner
  modified Berk-Jones statistic, whose critical value is estimated by Monte
  Carlo with uniform samples.

A band is a pair of vectors ``lower``, ``upper`` of length ``n`` such that
``lower[i] <= F(X_(i+1)) <= upper[i]`` for every ``i`` simultaneously with
probability at least ``1 - alpha``.  Arrays are 0-based; index ``i`` refers to
the order statistic of rank ``i + 1``.
"""

from __future__ import annotations

import csv
import enum
import functools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import substream
from .roots import ConvergenceError

#: clamp used before evaluating the log-log penalty, which diverges at 0 and 1
DELTA = 1e-12
BISECT_MAX_ITER = 200
#: number of Monte Carlo replicates generated per substream chunk
MC_CHUNK = 250


class BandKind(str, enum.Enum):
    DKW = "DKW"
    DW = "DW"

    @classmethod
    def parse(cls, value: str | BandKind) -> BandKind:
        if isinstance(value, BandKind):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(
                f"unknown band kind {value!r}; expected 'dkw' or 'dw'"
            ) from None


@dataclass(frozen=True)
class BandSpec:
    n: int
    alpha: float
    kind: BandKind = BandKind.DW
    nu: float = 1.0
    mc_reps: int = 10_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", BandKind.parse(self.kind))
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.kind is BandKind.DW:
            if not self.nu > 0.75:
                raise ValueError(f"nu must exceed 3/4, got {self.nu}")
            if self.mc_reps < 1000:
                raise ValueError(f"mc_reps must be at least 1000, got {self.mc_reps}")
            if not 0 <= self.seed < 2**64:
                raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ConfidenceBand:
    n: int
    alpha: float
    kind: BandKind
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    critical_value: float | None = None

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @classmethod
    def vacuous(cls, n: int) -> ConfidenceBand:
        """The trivial band ``[0, 1]`` at every index (alpha = 0 in effect)."""
        return cls(n, 0.0, BandKind.DKW, np.zeros(n), np.ones(n))


# ---------------------------------------------------------------------------
# divergence and penalty functions


def _check_unit(name, x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any((x < 0) | (x > 1)):
        raise ValueError(f"{name} must lie in [0, 1]")
    return x


def _kl(a, b):
    """Bernoulli KL without argument checks; broadcasting."""
    with np.errstate(divide="ignore", invalid="ignore"):
        left = np.where(a > 0, a * np.log(a / b), 0.0)
        right = np.where(a < 1, (1 - a) * np.log((1 - a) / (1 - b)), 0.0)
    # a == b contributes exactly zero even at the endpoints
    out = left + right
    return np.where(a == b, 0.0, out)


def bernoulli_kl(a, b):
    """KL divergence ``K(a, b)`` between Bernoulli(a) and Bernoulli(b).

    Uses ``0 * log(0 / x) = 0``; returns ``inf`` when ``b`` is 0 or 1 and
    ``a`` differs from it.
    """
    a = _check_unit("a", a)
    b = _check_unit("b", b)
    out = _kl(a, b)
    return float(out) if out.ndim == 0 else out


def _c(t):
    return np.log(np.log(np.e / (4.0 * t * (1.0 - t))))


def penalty_c(t):
    """``C(t) = log(log(e / (4 t (1 - t))))`` on the open unit interval."""
    t = np.asarray(t, dtype=float)
    if np.any(~((t > 0) & (t < 1))):
        raise ValueError("penalty_c is defined on (0, 1) only")
    out = np.maximum(_c(t), 0.0)
    return float(out) if out.ndim == 0 else out


def penalty_d(t):
    """``D(t) = log(1 + C(t)^2)``."""
    c = np.asarray(penalty_c(t))
    out = np.log1p(c * c)
    return float(out) if out.ndim == 0 else out


def _c_plus_nu_d(t, nu):
    t = np.clip(t, DELTA, 1.0 - DELTA)
    c = np.maximum(_c(t), 0.0)
    return c + nu * np.log1p(c * c)


def _cnu(u, v, nu):
    # C + nu D grows with |t - 1/2|, so the minimum over [min, max] sits at the
    # endpoint nearest 1/2, or is zero when the interval straddles 1/2.
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    nearest = np.where(hi < 0.5, hi, np.where(lo > 0.5, lo, 0.5))
    return _c_plus_nu_d(nearest, nu)


def penalty_cnu(u, v, nu):
    """Minimum of ``C(t) + nu D(t)`` over ``t`` between ``u`` and ``v``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(~((u > 0) & (u < 1))) or np.any(~((v > 0) & (v < 1))):
        raise ValueError("penalty_cnu is defined on (0, 1) only")
    out = _cnu(u, v, nu)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# the DW statistic and its critical value


def _dw_objective(a, u, n, nu):
    return n * _kl(a, u) - _cnu(a, u, nu)


def _dw_statistic_rows(p, nu):
    """Row-wise DW statistic for a 2-D array of sorted probabilities."""
    n = p.shape[-1]
    i = np.arange(1, n + 1, dtype=float)
    at = _dw_objective(i / n, p, n, nu)
    before = _dw_objective((i - 1) / n, p, n, nu)
    return np.maximum(at.max(axis=-1), before.max(axis=-1))


def dw_statistic(sorted_probs, nu: float = 1.0) -> float:
    """Modified Berk-Jones statistic of Duembgen and Wellner.

    ``sorted_probs`` holds ``F(X_(1)) <= ... <= F(X_(n))``.  The supremum over
    ``z`` is attained at the jump points of the empirical CDF, so only the two
    step values adjacent to each order statistic are evaluated.
    """
    p = _check_unit("sorted_probs", sorted_probs)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("sorted_probs must be a non-empty vector")
    if np.any(np.diff(p) < 0):
        raise ValueError("sorted_probs must be nondecreasing")
    return float(_dw_statistic_rows(p[None, :], nu)[0])


def _mc_chunk(n, nu, seed, chunk, size):
    u = substream(seed, n, chunk).random((size, n))
    u.sort(axis=1)
    return _dw_statistic_rows(u, nu)


@functools.lru_cache(maxsize=64)
def _dw_null_draws(
    n: int, nu: float, mc_reps: int, seed: int, workers: int = 1
) -> np.ndarray:
    sizes = [min(MC_CHUNK, mc_reps - start) for start in range(0, mc_reps, MC_CHUNK)]
    jobs = [(n, nu, seed, c, s) for c, s in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda args: _mc_chunk(*args), jobs))
    else:
        parts = [_mc_chunk(*args) for args in jobs]
    draws = np.concatenate(parts)
    draws.setflags(write=False)
    return draws


def dw_critical_value(
    n: int, alpha: float, nu: float = 1.0, mc_reps: int = 10_000, seed: int = 0
) -> float:
    """Monte Carlo estimate of the (1 - alpha) quantile of the DW statistic.

    The statistic is simulated on ``mc_reps`` sorted uniform samples of size
    ``n``; the estimate is the ``ceil((1 - alpha) * mc_reps)``-th smallest
    draw.  Draws are cached per ``(n, nu, mc_reps, seed)`` and shared across
    ``alpha``.
    """
    BandSpec(n, alpha, BandKind.DW, nu, mc_reps, seed)
    draws = _dw_null_draws(int(n), float(nu), int(mc_reps), int(seed))
    rank = math.ceil((1.0 - alpha) * mc_reps)
    return float(np.partition(draws, rank - 1)[rank - 1])


# ---------------------------------------------------------------------------
# band construction


def _bisect(f, good, bad):
    """Shrink the bracket between ``good`` (``f <= 0``) and ``bad`` (``f > 0``)
    until the two ends are adjacent floats, then return the ``good`` end.
    """
    good = good.copy()
    bad = bad.copy()
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (good + bad)
        done = (mid == good) | (mid == bad)
        if done.all():
            return good
        inside = f(mid) <= 0
        good = np.where(~done & inside, mid, good)
        bad = np.where(~done & ~inside, mid, bad)
    raise ConvergenceError("band bisection exceeded its iteration cap")


def _dw_band(n, kappa, nu):
    a = np.arange(1, n + 1, dtype=float) / n
    lower = np.zeros(n)
    upper = np.ones(n)

    # lower side: objective decreases from u = DELTA up to u = a
    floor_u = np.full(n, DELTA)
    need = (a > DELTA) & (_dw_objective(a, floor_u, n, nu) > kappa)
    if need.any():
        aa = a[need]
        lower[need] = _bisect(
            lambda u: _dw_objective(aa, u, n, nu) - kappa, aa, floor_u[need]
        )

    # upper side: objective increases from u = a up to u = 1 - DELTA
    ceil_u = np.full(n, 1.0 - DELTA)
    need = (a < 1.0 - DELTA) & (_dw_objective(a, ceil_u, n, nu) > kappa)
    if need.any():
        aa = a[need]
        upper[need] = _bisect(
            lambda u: _dw_objective(aa, u, n, nu) - kappa, aa, ceil_u[need]
        )
    return lower, upper


def compute_band(spec: BandSpec) -> ConfidenceBand:
    n = int(spec.n)
    i = np.arange(1, n + 1, dtype=float)
    if spec.kind is BandKind.DKW:
        eps = math.sqrt(math.log(2.0 / spec.alpha) / (2.0 * n))
        lower = np.maximum(0.0, i / n - eps)
        upper = np.minimum(1.0, i / n + eps)
        return ConfidenceBand(n, spec.alpha, spec.kind, lower, upper)
    kappa = dw_critical_value(n, spec.alpha, spec.nu, spec.mc_reps, spec.seed)
    lower, upper = _dw_band(n, kappa, spec.nu)
    # the objective is exactly zero minus a penalty at u = i/n, so i/n is inside
    lower = np.minimum(lower, i / n)
    upper = np.maximum(upper, i / n)
    return ConfidenceBand(n, spec.alpha, spec.kind, lower, upper, critical_value=kappa)


@functools.lru_cache(maxsize=128)
def cached_band(
    n: int,
    alpha: float,
    kind: str = "DW",
    nu: float = 1.0,
    mc_reps: int = 10_000,
    seed: int = 0,
) -> ConfidenceBand:
    """Memoised :func:`compute_band`; bands depend on ``n`` only, not on data."""
    band = compute_band(BandSpec(n, alpha, BandKind.parse(kind), nu, mc_reps, seed))
    band.lower.setflags(write=False)
    band.upper.setflags(write=False)
    return band


def band_covers(band: ConfidenceBand, sorted_probs) -> bool:
    """True iff ``lower[i] <= p[i] <= upper[i]`` for every index (closed band)."""
    p = np.asarray(sorted_probs, dtype=float)
    if p.shape != (band.n,):
        raise ValueError(f"expected {band.n} probabilities, got shape {p.shape}")
    return bool(np.all((band.lower <= p) & (p <= band.upper)))


def band_covers_rows(band: ConfidenceBand, sorted_probs: np.ndarray) -> np.ndarray:
    """Vectorised :func:`band_covers` over the rows of a 2-D array."""
    p = np.asarray(sorted_probs, dtype=float)
    return np.all((band.lower <= p) & (p <= band.upper), axis=-1)


def write_band_csv(band: ConfidenceBand, path) -> None:
    """Write ``i,lower,upper`` rows (1-based ``i``) with 17 significant digits.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_band_rows(band, path)
        return
    with open(Path(path), "w", newline="") as fh:
        _write_band_rows(band, fh)


def _write_band_rows(band: ConfidenceBand, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["i", "lower", "upper"])
    for i, (lo, hi) in enumerate(zip(band.lower, band.upper), start=1):
        w.writerow([i, f"{lo:.17g}", f"{hi:.17g}"])


def read_band_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(Path(path), newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (
        np.array([float(r["lower"]) for r in rows]),
        np.array([float(r["upper"]) for r in rows]),
    )
