"""Generalized Lambda distribution in the CSW parameterization.

The FKML quantile ``lambda1 + S(u | lambda3, lambda4) / lambda2`` is rewritten
in terms of the median ``mu_t``, the interquartile range ``sigma_t``, an
asymmetry ``chi`` in (-1, 1) and a steepness ``xi`` in (0, 1).  Location and
scale get confidence intervals by inverting the CDF band at one or two
quantile levels; the shape pair gets a joint region from IQR-normalised
quantile ranges evaluated over a grid.
"""

from __future__ import annotations

import enum
import functools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .bands import ConfidenceBand
from .intervals import ExtInterval
from .rng import substream_uniforms

LAMBDA_ZERO = 1e-12
DEFAULT_CELLS = 200


def _scalar_or_array(out):
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class FKMLParams:
    lambda1: float
    lambda2: float
    lambda3: float
    lambda4: float

    def __post_init__(self):
        if not self.lambda2 > 0:
            raise ValueError("lambda2 must be positive")


@dataclass(frozen=True)
class CSWParams:
    mu_t: float
    sigma_t: float
    chi: float
    xi: float

    def __post_init__(self):
        if not self.sigma_t > 0:
            raise ValueError("sigma_t must be positive")
        if not -1 < self.chi < 1:
            raise ValueError("chi must lie in (-1, 1)")
        if not 0 < self.xi < 1:
            raise ValueError("xi must lie in (0, 1)")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.mu_t, self.sigma_t, self.chi, self.xi)


def shape_to_lambdas(chi, xi):
    """Invert the ``(lambda3, lambda4) -> (chi, xi)`` map; vectorised."""
    chi = np.asarray(chi, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(chi) >= 1) or np.any((xi <= 0) | (xi >= 1)):
        raise ValueError("need chi in (-1, 1) and xi in (0, 1)")
    diff = chi / np.sqrt(1.0 - chi * chi)
    total = (1.0 - 2.0 * xi) / (2.0 * np.sqrt(xi * (1.0 - xi)))
    return _scalar_or_array(0.5 * (total + diff)), _scalar_or_array(
        0.5 * (total - diff)
    )


def lambdas_to_shape(lambda3, lambda4):
    d = np.asarray(lambda3, float) - np.asarray(lambda4, float)
    s = np.asarray(lambda3, float) + np.asarray(lambda4, float)
    chi = d / np.sqrt(1.0 + d * d)
    xi = 0.5 - s / (2.0 * np.sqrt(1.0 + s * s))
    return _scalar_or_array(chi), _scalar_or_array(xi)


def csw_to_fkml(csw: CSWParams) -> FKMLParams:
    l3, l4 = shape_to_lambdas(csw.chi, csw.xi)
    lambda2 = (_s(0.75, l3, l4) - _s(0.25, l3, l4)) / csw.sigma_t
    lambda1 = csw.mu_t - _s(0.5, l3, l4) / lambda2
    return FKMLParams(float(lambda1), float(lambda2), l3, l4)


def fkml_to_csw(fkml: FKMLParams) -> CSWParams:
    l3, l4 = fkml.lambda3, fkml.lambda4
    chi, xi = lambdas_to_shape(l3, l4)
    mu_t = fkml.lambda1 + _s(0.5, l3, l4) / fkml.lambda2
    sigma_t = (_s(0.75, l3, l4) - _s(0.25, l3, l4)) / fkml.lambda2
    return CSWParams(float(mu_t), float(sigma_t), chi, xi)


# ---------------------------------------------------------------------------
# the S function and quantiles


def _box_cox_log(logx, lam):
    """``(x**lam - 1) / lam`` from ``log x``, with the ``log x`` limit at 0."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = np.expm1(lam * logx) / lam
    return np.where(np.abs(lam) < LAMBDA_ZERO, logx, out)


def _s(u, lambda3, lambda4):
    u, l3, l4 = np.broadcast_arrays(
        np.asarray(u, float), np.asarray(lambda3, float), np.asarray(lambda4, float)
    )
    with np.errstate(divide="ignore"):
        lu = np.log(u)
        lv = np.log1p(-u)
    out = _box_cox_log(lu, l3) - _box_cox_log(lv, l4)
    out = np.where(
        u == 0.0,
        np.where(l3 > LAMBDA_ZERO, -1.0 / np.where(l3 > 0, l3, 1.0), -np.inf),
        out,
    )
    out = np.where(
        u == 1.0,
        np.where(l4 > LAMBDA_ZERO, 1.0 / np.where(l4 > 0, l4, 1.0), np.inf),
        out,
    )
    return out


def s_basis(u, lambda3, lambda4):
    """FKML basis ``S(u | lambda3, lambda4)``.

    ``(u**l3 - 1)/l3 - ((1 - u)**l4 - 1)/l4`` with logarithms replacing a
    zero-exponent term.  ``S(0) = -1/l3`` if ``l3 > 0`` else ``-inf``;
    ``S(1) = 1/l4`` if ``l4 > 0`` else ``inf``.
    """
    u = np.asarray(u, dtype=float)
    if np.any(~((u >= 0) & (u <= 1))):
        raise ValueError("u must lie in [0, 1]")
    return _scalar_or_array(_s(u, lambda3, lambda4))


def fkml_quantile(u, fkml: FKMLParams):
    u = np.asarray(u, dtype=float)
    if np.any(~((u >= 0) & (u <= 1))):
        raise ValueError("u must lie in [0, 1]")
    return _scalar_or_array(
        fkml.lambda1 + _s(u, fkml.lambda3, fkml.lambda4) / fkml.lambda2
    )


def _standardised(u, chi, xi):
    l3, l4 = shape_to_lambdas(chi, xi)
    iqr = _s(0.75, l3, l4) - _s(0.25, l3, l4)
    return (_s(u, l3, l4) - _s(0.5, l3, l4)) / iqr


def gld_quantile(u, csw: CSWParams):
    """CSW quantile ``mu_t + sigma_t (S(u) - S(1/2)) / (S(3/4) - S(1/4))``."""
    u = np.asarray(u, dtype=float)
    if np.any(~((u >= 0) & (u <= 1))):
        raise ValueError("u must lie in [0, 1]")
    z = _standardised(u, csw.chi, csw.xi)
    # keep the median exact: the standardised value is exactly 0 at u = 1/2
    return _scalar_or_array(csw.mu_t + csw.sigma_t * z)


def gld_sample(n: int, csw: CSWParams, seed: int, *key: int) -> np.ndarray:
    """Sorted inverse-transform sample of size ``n``."""
    u = substream_uniforms(seed, n, *key)
    return np.sort(gld_quantile(u, csw))


# ---------------------------------------------------------------------------
# band inversion for quantiles and quantile ranges


def _band_indices(band: ConfidenceBand, u: float) -> tuple[int | None, int | None]:
    """1-based ``a = min{i : upper_i >= u}`` and ``b = max{i : lower_i <= u}``."""
    a = int(np.searchsorted(band.upper, u, side="left"))
    b = int(np.searchsorted(band.lower, u, side="right"))
    return (a + 1 if a < band.n else None), (b if b > 0 else None)


def _order_stat(xs: np.ndarray, i: int | None, missing: float) -> float:
    return missing if i is None else float(xs[i - 1])


def _as_sorted(sample, band: ConfidenceBand) -> np.ndarray:
    xs = np.sort(np.asarray(sample, dtype=float))
    if xs.shape != (band.n,):
        raise ValueError(f"band is for n={band.n} but the sample has {xs.size} values")
    return xs


def quantile_bounds(sample, band: ConfidenceBand, u: float) -> tuple[float, float]:
    xs = _as_sorted(sample, band)
    a, b = _band_indices(band, u)
    return _order_stat(xs, a, -math.inf), _order_stat(xs, b, math.inf)


def quantile_ci(sample, band: ConfidenceBand, u: float) -> ExtInterval:
    """Interval ``[X_(a), X_(b)]`` for the ``u``-quantile.

    ``a`` is the first index whose upper band level reaches ``u`` and ``b`` the
    last whose lower level does not exceed it; a missing index makes that end
    infinite.  ``u = 1/2`` gives the interval for ``mu_t``.
    """
    if not 0 < u < 1:
        raise ValueError("u must lie in (0, 1)")
    lo, hi = quantile_bounds(sample, band, u)
    return ExtInterval.from_bounds(lo, hi)


def qr_ci(sample, band: ConfidenceBand, u1: float, u2: float) -> ExtInterval:
    """Interval for the quantile range ``Q(u1) - Q(u2)``, ``u1 > u2``.

    ``[max(X_(a1) - X_(b2), 0), X_(b1) - X_(a2)]``; ``(3/4, 1/4)`` gives the
    interval for ``sigma_t``.
    """
    if not u1 > u2:
        raise ValueError("need u1 > u2")
    xs = _as_sorted(sample, band)
    a1, b1 = _band_indices(band, u1)
    a2, b2 = _band_indices(band, u2)
    with np.errstate(invalid="ignore"):
        lo = _order_stat(xs, a1, -math.inf) - _order_stat(xs, b2, math.inf)
        hi = _order_stat(xs, b1, math.inf) - _order_stat(xs, a2, -math.inf)
    lo = 0.0 if math.isnan(lo) else max(lo, 0.0)
    return ExtInterval(lo, max(hi, lo))


# ---------------------------------------------------------------------------
# shape statistic and joint region


def shape_stat(u1, u2, chi, xi):
    """Rescaled shape statistic ``(S(u2) - S(u1)) / (S(3/4) - S(1/4))``.

    The sign follows the defining display, so the value is negative for
    ``u1 > u2``; location and scale cancel.
    """
    l3, l4 = shape_to_lambdas(chi, xi)
    iqr = _s(0.75, l3, l4) - _s(0.25, l3, l4)
    with np.errstate(invalid="ignore"):
        out = (_s(u2, l3, l4) - _s(u1, l3, l4)) / iqr
    return _scalar_or_array(out)


def _ratio(num, den, zero_den):
    if den == 0.0:
        return zero_den
    if math.isinf(den):
        return 0.0 if math.isfinite(num) else zero_den
    return num / den


def shape_stat_ci(sample, band: ConfidenceBand, u1: float, u2: float) -> ExtInterval:
    """Interval for :func:`shape_stat` at ``(u1, u2)``.

    The quantile-range ratio is bracketed by
    ``[l_QR(u1, u2) / u_QR(3/4, 1/4), u_QR(u1, u2) / l_QR(3/4, 1/4)]`` and then
    negated to match the sign of :func:`shape_stat`.  A zero IQR lower bound
    makes the interval unbounded below.
    """
    num = qr_ci(sample, band, u1, u2)
    iqr = qr_ci(sample, band, 0.75, 0.25)
    small = _ratio(num.lo, iqr.hi, 0.0)
    large = _ratio(num.hi, iqr.lo, math.inf)
    return ExtInterval(-large, -small)


class PairKind(str, enum.Enum):
    RW = "RW"
    GRID = "GRID"
    EDGE = "EDGE"
    CUSTOM = "CUSTOM"


@dataclass(frozen=True)
class PairSet:
    pairs: tuple[tuple[float, float], ...]
    kind: PairKind = PairKind.CUSTOM
    k: int | None = None

    def __post_init__(self):
        pairs = tuple((float(a), float(b)) for a, b in self.pairs)
        for a, b in pairs:
            if not 1 >= a > b >= 0:
                raise ValueError(f"pair ({a}, {b}) violates 1 >= u1 > u2 >= 0")
        if len(set(pairs)) != len(pairs):
            raise ValueError("duplicate pairs")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def u1(self) -> np.ndarray:
        return np.array([p[0] for p in self.pairs])

    @property
    def u2(self) -> np.ndarray:
        return np.array([p[1] for p in self.pairs])


def pairs_rw(n: int) -> PairSet:
    """Multiscale pair lattice of Rivera and Walther, of size O(n).

    For ``l = 2 .. floor(log2(n / ln n))`` with ``m_l = n 2**-l`` and
    ``d_l = ceil(m_l / (6 sqrt(l)))``, take indices ``j, k`` on the lattice
    ``1 + i d_l`` with ``m_l < k - j < 2 m_l`` and ``k <= n``; emit
    ``(k/n, j/n)``.
    """
    if n < 3:
        raise ValueError("n too small for the multiscale pair lattice")
    l_max = math.floor(math.log2(n / math.log(n)))
    if l_max < 2:
        raise ValueError(f"n={n} is too small: no scale l >= 2 exists")
    seen = set()
    out = []
    for l in range(2, l_max + 1):
        m = n * 2.0 ** (-l)
        d = math.ceil(m / (6.0 * math.sqrt(l)))
        lattice = range(1, n + 1, d)
        for j in lattice:
            for k in lattice:
                if m < k - j < 2 * m and (k, j) not in seen:
                    seen.add((k, j))
                    out.append((k / n, j / n))
    return PairSet(tuple(out), PairKind.RW)


def _grid_levels(n: int, k: int) -> list[float]:
    if not 2 <= k <= n - 1:
        raise ValueError("need 2 <= k <= n - 1")
    levels = sorted({((n - 1) * i // k) / n for i in range(1, k + 1)})
    if len(levels) < 2:
        raise ValueError("grid collapses to fewer than two distinct levels")
    return levels


def pairs_grid(n: int, k: int) -> PairSet:
    """All pairs ``u1 > u2`` from ``{floor((n - 1) i / k) / n : i = 1..k}``."""
    levels = _grid_levels(n, k)
    pairs = tuple((hi, lo) for j, hi in enumerate(levels) for lo in levels[:j])
    return PairSet(pairs, PairKind.GRID, k)


def pairs_edge(n: int, k: int) -> PairSet:
    """Grid pairs with at least one level within ``2/k`` of 0 or 1.

    Since ``u1 > u2``, this means ``u2 <= 2/k`` or ``u1 >= 1 - 2/k``. It contains
    the corner pairs where both levels sit at the same edge.
    """
    grid = pairs_grid(n, k)
    edge = tuple((a, b) for a, b in grid if b <= 2.0 / k or a >= 1.0 - 2.0 / k)
    return PairSet(edge, PairKind.EDGE, k)


def parse_pairs(spec: str, n: int) -> PairSet:
    """``'rw'``, ``'grid:K'`` or ``'edge:K'``."""
    name, _, arg = spec.strip().lower().partition(":")
    if name == "rw" and not arg:
        return pairs_rw(n)
    if name in ("grid", "edge") and arg.isdigit():
        return (pairs_grid if name == "grid" else pairs_edge)(n, int(arg))
    raise ValueError(f"bad pair collection {spec!r}; expected rw, grid:K or edge:K")


@dataclass(frozen=True)
class ShapeRegion:
    chi_grid: np.ndarray = field(repr=False)
    xi_grid: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)
    area: float = 0.0

    @property
    def cell_area(self) -> float:
        return cell_area(self.chi_grid, self.xi_grid)

    def contains(self, chi: float, xi: float) -> bool:
        """Membership of the cell whose center is nearest to ``(chi, xi)``."""
        g = int(np.argmin(np.abs(self.chi_grid - chi)))
        h = int(np.argmin(np.abs(self.xi_grid - xi)))
        return bool(self.mask[g, h])


def shape_grid(
    chi_cells: int = DEFAULT_CELLS, xi_cells: int = DEFAULT_CELLS
) -> tuple[np.ndarray, np.ndarray]:
    """Cell centers of a uniform partition of ``(-1, 1) x (0, 1)``."""
    if chi_cells < 2 or xi_cells < 2:
        raise ValueError("need at least 2 cells per axis")
    chi = -1.0 + (np.arange(chi_cells) + 0.5) * (2.0 / chi_cells)
    xi = (np.arange(xi_cells) + 0.5) / xi_cells
    return chi, xi


def cell_area(chi_grid: np.ndarray, xi_grid: np.ndarray) -> float:
    return (2.0 / len(chi_grid)) * (1.0 / len(xi_grid))


def region_area(region: ShapeRegion) -> float:
    return float(np.count_nonzero(region.mask)) * region.cell_area


@functools.lru_cache(maxsize=16)
def _stat_table_cached(
    u1: tuple, u2: tuple, chi_cells: int, xi_cells: int
) -> np.ndarray:
    chi, xi = shape_grid(chi_cells, xi_cells)
    l3, l4 = shape_to_lambdas(chi[:, None], xi[None, :])
    levels = sorted(set(u1) | set(u2) | {0.25, 0.75})
    values = {u: _s(u, l3, l4) for u in levels}
    iqr = values[0.75] - values[0.25]
    table = np.empty((len(u1), chi_cells, xi_cells))
    with np.errstate(invalid="ignore"):
        for k, (a, b) in enumerate(zip(u1, u2)):
            table[k] = (values[b] - values[a]) / iqr
    table.setflags(write=False)
    return table


def shape_stat_table(
    pairs: PairSet, chi_cells: int = DEFAULT_CELLS, xi_cells: int = DEFAULT_CELLS
) -> np.ndarray:
    """:func:`shape_stat` for every pair and grid cell; data-independent, cached."""
    return _stat_table_cached(
        tuple(pairs.u1), tuple(pairs.u2), int(chi_cells), int(xi_cells)
    )


def shape_region(
    sample,
    band: ConfidenceBand,
    pairs: PairSet,
    chi_cells: int = DEFAULT_CELLS,
    xi_cells: int = DEFAULT_CELLS,
) -> ShapeRegion:
    """Joint region of ``(chi, xi)`` grid cells consistent with every pair.

    A cell is kept when :func:`shape_stat` at its center falls inside
    :func:`shape_stat_ci` for all ``(u1, u2)`` in ``pairs``.
    """
    if len(pairs) == 0:
        raise ValueError("pair collection is empty")
    chi, xi = shape_grid(chi_cells, xi_cells)
    table = shape_stat_table(pairs, chi_cells, xi_cells)
    mask = np.ones((chi_cells, xi_cells), dtype=bool)
    for k, (a, b) in enumerate(pairs):
        ci = shape_stat_ci(sample, band, a, b)
        mask &= (ci.lo <= table[k]) & (table[k] <= ci.hi)
    return ShapeRegion(
        chi, xi, mask, float(np.count_nonzero(mask)) * cell_area(chi, xi)
    )


def write_region_csv(region: ShapeRegion, path) -> None:
    """One ``chi,xi,inside`` row per cell center."""
    with open(path, "w") as fh:
        fh.write("chi,xi,inside\n")
        for g, c in enumerate(region.chi_grid):
            fh.writelines(
                f"{c:.17g},{x:.17g},{int(region.mask[g, h])}\n"
                for h, x in enumerate(region.xi_grid)
            )


def location_scale_cis(sample, band: ConfidenceBand) -> dict[str, ExtInterval]:
    return {
        "mu": quantile_ci(sample, band, 0.5),
        "sigma": qr_ci(sample, band, 0.75, 0.25),
    }


def coerce_params(values: Sequence[float]) -> CSWParams:
    if len(values) != 4:
        raise ValueError("GLD parameters need four values (mu_t, sigma_t, chi, xi)")
    return CSWParams(*(float(v) for v in values))
