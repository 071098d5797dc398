import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lambdaci.bands import (
    BandKind,
    BandSpec,
    ConfidenceBand,
    _dw_objective,
    band_covers,
    band_covers_rows,
    bernoulli_kl,
    cached_band,
    compute_band,
    dw_critical_value,
    dw_statistic,
    penalty_c,
    penalty_cnu,
    penalty_d,
    read_band_csv,
    write_band_csv,
)

from . import oracles

# Oracle values computed with 40-digit mpmath.
KL_HALF_QUARTER = 0.14384103622589042
C_QUARTER = 0.2528437590540543
D_QUARTER = 0.06196956778754191
C_PLUS_D_FIFTH = 0.4966544641431816629


class TestPenalties:
    def test_bernoulli_kl_value(self):
        assert bernoulli_kl(0.5, 0.25) == pytest.approx(KL_HALF_QUARTER, abs=1e-15)

    def test_bernoulli_kl_zero_a(self):
        assert bernoulli_kl(0.0, 0.5) == pytest.approx(math.log(2), abs=1e-15)

    def test_bernoulli_kl_vanishes_on_diagonal(self):
        assert bernoulli_kl(0.3, 0.3) == 0.0

    def test_bernoulli_kl_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            bernoulli_kl(1.2, 0.5)

    def test_c_at_half_is_zero(self):
        assert penalty_c(0.5) == 0.0

    def test_c_at_quarter(self):
        assert penalty_c(0.25) == pytest.approx(C_QUARTER, abs=1e-15)

    def test_d_at_quarter(self):
        assert penalty_d(0.25) == pytest.approx(D_QUARTER, abs=1e-15)

    def test_cnu_straddling_half_is_zero(self):
        assert penalty_cnu(0.3, 0.7, 1.0) == 0.0

    def test_cnu_uses_endpoint_nearest_half(self):
        assert penalty_cnu(0.1, 0.2, 1.0) == pytest.approx(C_PLUS_D_FIFTH, abs=1e-14)
        assert penalty_cnu(0.2, 0.1, 1.0) == pytest.approx(C_PLUS_D_FIFTH, abs=1e-14)

    @given(st.floats(0.001, 0.999), st.floats(0.001, 0.999))
    @settings(max_examples=50, deadline=None)
    def test_cnu_matches_brute_force_minimum(self, u, v):
        assert penalty_cnu(u, v, 1.0) == pytest.approx(
            oracles.cnu(u, v, 1.0, grid=2001), abs=1e-6
        )

    def test_vectorised(self):
        out = bernoulli_kl(np.array([0.5, 0.0]), np.array([0.25, 0.5]))
        assert out.shape == (2,)


class TestStatistic:
    def test_single_point_at_half(self):
        assert dw_statistic([0.5]) == pytest.approx(math.log(2), abs=1e-15)

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            dw_statistic([0.6, 0.2])

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_dense_grid_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 21))
        p = np.sort(rng.random(n))
        assert dw_statistic(p) == pytest.approx(
            oracles.dw_statistic_scan(p, grid=4001), abs=1e-6
        )

    def test_nonnegative_nu_increases_penalty(self):
        p = np.sort(np.random.default_rng(3).random(15))
        assert dw_statistic(p, nu=2.0) <= dw_statistic(p, nu=1.0)


class TestCriticalValue:
    # frozen regression values: 10_000 draws, seed 0
    @pytest.mark.parametrize(
        "n, alpha, expected",
        [
            (20, 0.05, 4.581623567396522),
            (20, 0.1, 3.8220352149764683),
            (100, 0.05, 4.664509408822531),
            (100, 0.1, 3.795591976926677),
        ],
    )
    def test_frozen(self, n, alpha, expected):
        assert dw_critical_value(n, alpha) == expected

    def test_decreasing_in_alpha(self):
        assert (
            dw_critical_value(50, 0.01)
            > dw_critical_value(50, 0.05)
            > dw_critical_value(50, 0.2)
        )

    def test_seed_changes_value_slightly(self):
        a = dw_critical_value(30, 0.05, mc_reps=2000, seed=1)
        b = dw_critical_value(30, 0.05, mc_reps=2000, seed=2)
        assert a != b and abs(a - b) < 0.5


class TestBandSpec:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n": 0, "alpha": 0.05},
            {"n": 10, "alpha": 0.0},
            {"n": 10, "alpha": 1.0},
            {"n": 10, "alpha": 0.05, "nu": 0.5},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            BandSpec(**kwargs)

    def test_kind_parsing(self):
        assert BandKind.parse("dkw") is BandKind.DKW
        assert BandKind.parse("DW") is BandKind.DW
        with pytest.raises(ValueError):
            BandKind.parse("ks")


class TestDKW:
    @pytest.mark.parametrize("n", [1, 7, 100, 1000])
    @pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1])
    def test_half_width_exact(self, n, alpha):
        band = compute_band(BandSpec(n, alpha, BandKind.DKW))
        eps = math.sqrt(math.log(2 / alpha) / (2 * n))
        i = np.arange(1, n + 1) / n
        free = (i - eps > 0) & (i + eps < 1)
        np.testing.assert_allclose(band.upper[free] - i[free], eps, atol=1e-12, rtol=0)
        np.testing.assert_allclose(i[free] - band.lower[free], eps, atol=1e-12, rtol=0)
        assert np.all(band.width <= 2 * eps + 1e-12)

    def test_frozen_entries(self):
        band = compute_band(BandSpec(100, 0.05, BandKind.DKW))
        assert band.lower[49] == pytest.approx(0.36418984842593805, abs=1e-15)
        assert band.upper[49] == pytest.approx(0.63581015157406195, abs=1e-15)
        assert band.lower[0] == 0.0 and band.upper[-1] == 1.0


class TestDW:
    @pytest.mark.parametrize("n", [1, 5, 20, 100])
    def test_shape(self, n):
        band = cached_band(n, 0.05)
        i = np.arange(1, n + 1) / n
        assert np.all(
            (0 <= band.lower)
            & (band.lower <= i)
            & (i <= band.upper)
            & (band.upper <= 1)
        )
        assert np.all(np.diff(band.lower) >= 0) and np.all(np.diff(band.upper) >= 0)
        assert band.critical_value is not None

    @pytest.mark.parametrize("n", [20, 100])
    def test_defining_equation_residual(self, n):
        band = cached_band(n, 0.05)
        kappa = band.critical_value
        a = np.arange(1, n + 1) / n
        for side in (band.lower, band.upper):
            free = (side > 1e-12) & (side < 1 - 1e-12) & (side != a)
            res = _dw_objective(a[free], side[free], n, 1.0) - kappa
            assert np.max(np.abs(res)) <= 1e-8

    def test_residual_against_scalar_oracle(self):
        n = 50
        band = cached_band(n, 0.1)
        for i in (1, 10, 25, 49):
            for edge in (band.lower[i - 1], band.upper[i - 1]):
                if 1e-12 < edge < 1 - 1e-12:
                    assert oracles.dw_objective(i / n, edge, n) == pytest.approx(
                        band.critical_value, abs=1e-8
                    )

    def test_narrower_than_dkw_in_tails(self):
        dw = cached_band(500, 0.05)
        dkw = compute_band(BandSpec(500, 0.05, BandKind.DKW))
        assert dw.width[0] < dkw.width[0]
        assert dw.width[-1] < dkw.width[-1]

    def test_cached_arrays_are_read_only(self):
        band = cached_band(10, 0.05)
        with pytest.raises(ValueError):
            band.lower[0] = 0.5


class TestCoverage:
    @pytest.mark.parametrize("kind", ["DW", "DKW"])
    def test_uniform_coverage(self, kind):
        n, alpha, reps = 50, 0.1, 2000
        band = cached_band(n, alpha, kind)
        u = np.sort(np.random.default_rng(123).random((reps, n)), axis=1)
        cov = band_covers_rows(band, u).mean()
        assert cov >= 1 - alpha - 3 * math.sqrt(alpha * (1 - alpha) / reps)

    def test_band_covers_shape_check(self):
        band = ConfidenceBand.vacuous(3)
        assert band_covers(band, [0.1, 0.2, 0.3])
        with pytest.raises(ValueError):
            band_covers(band, [0.1, 0.2])


def test_csv_round_trip(tmp_path):
    band = cached_band(30, 0.05)
    path = tmp_path / "band.csv"
    write_band_csv(band, path)
    lower, upper = read_band_csv(path)
    np.testing.assert_array_equal(lower, band.lower)
    np.testing.assert_array_equal(upper, band.upper)
    assert path.read_text().splitlines()[0] == "i,lower,upper"
