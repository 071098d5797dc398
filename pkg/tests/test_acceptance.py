"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The Monte Carlo criteria run at full desk scale (500 replications) and take a
few minutes in total.
"""

import io
import json
import math
import time

import numpy as np
import pytest

from lambdaci.bands import (
    BandKind,
    BandSpec,
    _dw_objective,
    band_covers_rows,
    cached_band,
    compute_band,
    dw_statistic,
)
from lambdaci.cli import main
from lambdaci.diagnostics import tl_envelope
from lambdaci.gld import (
    CSWParams,
    FKMLParams,
    csw_to_fkml,
    fkml_quantile,
    fkml_to_csw,
    gld_quantile,
    gld_sample,
    pairs_grid,
    qr_ci,
    quantile_ci,
    shape_region,
    shape_stat,
    shape_stat_ci,
)
from lambdaci.simharness import ExperimentConfig, emit_csv, run
from lambdaci.tukey import (
    TukeySample,
    tl_abs_quantile,
    tl_ci_abs,
    tl_ci_raw,
    tl_quantile,
)

from . import oracles

LAMBDAS = (-2.0, -1.0, 0.0, 1.0, 2.0)
TUKEY_N = (30, 100, 300)
REPS = 500
# GLD shapes close to the normal, lognormal and uniform laws
SPECIAL_SHAPES = ((0.0, 0.3661), (0.2844, 0.3583), (0.0, 0.5 - 1 / math.sqrt(5)))


def _report(number: int, ok: bool, detail: str, capsys) -> None:
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _floor(reps: int = REPS, level: float = 0.95) -> float:
    return level - 3 * math.sqrt(level * (1 - level) / reps)


# ---------------------------------------------------------------------------
# shared Monte Carlo runs


@pytest.fixture(scope="module")
def tukey_table():
    cfg = ExperimentConfig.from_dict(
        {
            "experiment": "tukey_method_comparison",
            "truths": [[lam] for lam in LAMBDAS],
            "n_grid": list(TUKEY_N),
            "methods": ["ours-abs-DW", "ours-raw-DW", "ours-abs-DKW", "ours-raw-DKW"],
            "alpha": 0.05,
            "replications": REPS,
            "master_seed": 20240504,
        }
    )
    start = time.perf_counter()
    rows = run(cfg, workers=4)
    return {(r.truth[0], r.n, r.method): r for r in rows}, time.perf_counter() - start


@pytest.fixture(scope="module")
def gld_tables():
    truths = [[0.0, 1.0, chi, xi] for chi, xi in SPECIAL_SHAPES]
    common = {
        "truths": truths,
        "n_grid": [100, 500],
        "methods": ["ours-DW"],
        "alpha": 0.05,
        "replications": REPS,
    }
    start = time.perf_counter()
    loc = run(
        ExperimentConfig.from_dict(
            dict(experiment="gld_location_scale", master_seed=20240508, **common)
        ),
        4,
    )
    shape = run(
        ExperimentConfig.from_dict(
            dict(
                experiment="gld_shape_region",
                master_seed=20240510,
                pairs="edge:17",
                grid=200,
                **common,
            )
        ),
        4,
    )
    return loc, shape, time.perf_counter() - start


# ---------------------------------------------------------------------------


def test_criterion_01_band_validity(capsys):
    reps, worst, failures = 5000, [], []
    for n in (20, 100, 500):
        u = np.sort(np.random.default_rng(n).random((reps, n)), axis=1)
        for alpha in (0.05, 0.1):
            floor = 1 - alpha - 3 * math.sqrt(alpha * (1 - alpha) / reps)
            for kind in ("DW", "DKW"):
                cov = band_covers_rows(cached_band(n, alpha, kind), u).mean()
                worst.append(cov - floor)
                if cov < floor:
                    failures.append(f"{kind} n={n} a={alpha}: {cov:.4f} < {floor:.4f}")
    _report(
        1,
        not failures,
        failures[0] if failures else f"12 configs, min margin {min(worst):+.4f}",
        capsys,
    )


def test_criterion_02_dkw_exactness(capsys):
    worst = 0.0
    for n in (1, 10, 100, 1000, 5000):
        for alpha in (0.01, 0.05, 0.1, 0.5):
            band = compute_band(BandSpec(n, alpha, BandKind.DKW))
            eps = math.sqrt(math.log(2 / alpha) / (2 * n))
            i = np.arange(1, n + 1) / n
            up, lo = i + eps < 1, i - eps > 0
            worst = max(worst, np.max(np.abs(band.upper[up] - i[up] - eps), initial=0))
            worst = max(worst, np.max(np.abs(i[lo] - band.lower[lo] - eps), initial=0))
    _report(2, worst <= 1e-12, f"max half-width error {worst:.2e}", capsys)


def test_criterion_03_dw_residual_and_statistic(capsys):
    worst_res = 0.0
    for n in (20, 100, 500):
        for alpha in (0.05, 0.1):
            band = cached_band(n, alpha)
            a = np.arange(1, n + 1) / n
            for side in (band.lower, band.upper):
                free = (side > 0) & (side < 1) & (side != a)
                res = np.abs(
                    _dw_objective(a[free], side[free], n, 1.0) - band.critical_value
                )
                worst_res = max(worst_res, float(np.max(res, initial=0)))
    rng = np.random.default_rng(3)
    worst_stat = 0.0
    for _ in range(100):
        p = np.sort(rng.random(int(rng.integers(1, 21))))
        worst_stat = max(
            worst_stat, abs(dw_statistic(p) - oracles.dw_statistic_scan(p))
        )
    ok = worst_res <= 1e-8 and worst_stat <= 1e-6
    _report(
        3,
        ok,
        f"max residual {worst_res:.2e}, max statistic error {worst_stat:.2e}",
        capsys,
    )


@pytest.mark.slow
def test_criterion_04_tukey_coverage(tukey_table, capsys):
    table, seconds = tukey_table
    floor = _floor()
    cells = [table[(lam, n, "ours-abs-DW")] for lam in LAMBDAS for n in TUKEY_N]
    low = min(cells, key=lambda r: r.coverage)
    ok = low.coverage >= floor
    detail = f"min |X| DW coverage {low.coverage:.3f} (lambda={low.truth[0]:g}, n={low.n}) vs {floor:.4f}; {seconds:.0f}s"
    _report(4, ok, detail, capsys)


@pytest.mark.slow
def test_criterion_05_transform_improvement(tukey_table, capsys):
    table, _ = tukey_table

    def worse(band):
        out = []
        for lam in LAMBDAS:
            for n in TUKEY_N:
                ab, raw = (
                    table[(lam, n, f"ours-abs-{band}")],
                    table[(lam, n, f"ours-raw-{band}")],
                )
                if not ab.mean_width_or_area <= raw.mean_width_or_area:
                    out.append(
                        f"{band} lambda={lam:g} n={n}: abs {ab.mean_width_or_area:.4f} > raw {raw.mean_width_or_area:.4f} "
                        f"(inf {ab.infinite_fraction:.3f}/{raw.infinite_fraction:.3f})"
                    )
        return out

    # gated on the DW band of criterion 4; DKW is reported alongside
    bad, extra = worse("DW"), worse("DKW")
    inf = max(
        table[(lam, n, "ours-raw-DW")].infinite_fraction
        for lam in LAMBDAS
        for n in TUKEY_N
    )
    detail = "; ".join(bad) or f"15 cells, max raw infinite fraction {inf:.3f}"
    _report(5, not bad, f"{detail}; DKW cells where abs is wider: {len(extra)}", capsys)


@pytest.mark.slow
def test_criterion_06_band_comparison(tukey_table, capsys):
    table, _ = tukey_table

    def wider(transform):
        out = []
        for lam in LAMBDAS:
            for n in TUKEY_N:
                dw, dkw = (
                    table[(lam, n, f"ours-{transform}-DW")],
                    table[(lam, n, f"ours-{transform}-DKW")],
                )
                if not dw.mean_width_or_area <= dkw.mean_width_or_area:
                    out.append(
                        f"lambda={lam:g} n={n}: DW {dw.mean_width_or_area:.4f} > DKW {dkw.mean_width_or_area:.4f}"
                    )
        return out

    # gated on the |X| transform of criterion 4; raw is reported alongside
    bad, extra = wider("abs"), wider("raw")
    _report(
        6,
        not bad,
        f"{'; '.join(bad) or '15 cells'}; raw cells where DW is wider: {len(extra)}",
        capsys,
    )


def test_criterion_07_envelope_containment(capsys):
    rng = np.random.default_rng(7)
    lams = oracles.LAMBDA_GRID
    draws = violations = 0
    while draws < 1000:
        lam0 = float(rng.uniform(-2, 2))
        n = int(rng.choice([10, 30, 100, 300]))
        band = cached_band(
            n, float(rng.choice([0.05, 0.1])), str(rng.choice(["DW", "DKW"]))
        )
        u = np.sort(rng.random(n))
        i = int(rng.integers(0, n))
        ell, up = float(band.lower[i]), float(band.upper[i])
        if not ell <= u[i] <= up:
            continue  # the guarantee is conditional on the band holding at i
        draws += 1
        x = float(tl_abs_quantile(u[i], lam0))
        feasible = (oracles.tl_q_grid((1 + ell) / 2, lams) <= x) & (
            x <= oracles.tl_q_grid((1 + up) / 2, lams)
        )
        env = tl_envelope(float(u[i]), lam0, ell, up)
        violations += bool(
            np.any(feasible & ~((lams >= env.lo - 1e-9) & (lams <= env.hi + 1e-9)))
        )
    _report(7, violations == 0, f"{violations} violations in {draws} draws", capsys)


def test_criterion_08_monotone_convex(capsys):
    lams = np.linspace(-5, 5, 2001)
    h = lams[1] - lams[0]
    worst_mono = worst_conv = 0.0
    for p in np.linspace(0.01, 0.99, 99):
        q = tl_abs_quantile(p, lams)
        worst_mono = max(worst_mono, float(np.max(np.diff(q))))
        mid = tl_abs_quantile(p, lams[1:-1])
        gap = mid - 0.5 * (q[:-2] + q[2:])
        worst_conv = max(worst_conv, float(np.max(gap / np.maximum(1.0, np.abs(mid)))))
    ok = worst_mono <= 1e-12 and worst_conv <= 1e-10
    _report(
        8,
        ok,
        f"max increase {worst_mono:.1e}, max convexity gap {worst_conv:.1e} (step {h:.3g})",
        capsys,
    )


def test_criterion_09_gld_identities(capsys):
    rng = np.random.default_rng(9)
    med = iqr = trip = red = 0.0
    for mu, sigma, chi, xi in zip(
        rng.uniform(-10, 10, 500),
        rng.uniform(0.01, 10, 500),
        rng.uniform(-0.99, 0.99, 500),
        rng.uniform(0.01, 0.99, 500),
    ):
        csw = CSWParams(mu, sigma, chi, xi)
        med = max(med, abs(gld_quantile(0.5, csw) - mu))
        iqr = max(
            iqr,
            abs(gld_quantile(0.75, csw) - gld_quantile(0.25, csw) - sigma)
            / max(1.0, sigma),
        )
        trip = max(
            trip,
            float(
                np.max(
                    np.abs(
                        np.subtract(
                            fkml_to_csw(csw_to_fkml(csw)).as_tuple(), csw.as_tuple()
                        )
                    )
                )
            ),
        )
    u = np.linspace(0.001, 0.999, 999)
    for lam in np.linspace(-3, 3, 61):
        # |Q| reaches 3e8 here, where one ulp exceeds 1e-10; compare on the scale of max(1, |Q|)
        q = tl_quantile(u, lam)
        err = np.abs(fkml_quantile(u, FKMLParams(0, 1, lam, lam)) - q) / np.maximum(
            1.0, np.abs(q)
        )
        red = max(red, float(np.max(err)))
    ok = med <= 1e-12 and iqr <= 1e-12 and trip <= 1e-10 and red <= 1e-10
    _report(
        9,
        ok,
        f"median {med:.1e}, IQR {iqr:.1e}, round trip {trip:.1e}, reduction {red:.1e}",
        capsys,
    )


@pytest.mark.slow
def test_criterion_10_gld_coverage(gld_tables, capsys):
    loc, shape, seconds = gld_tables
    floor = 0.92
    problems = [
        f"{r.method} {r.truth} n={r.n}: {r.coverage:.3f}"
        for r in loc + shape
        if r.coverage < floor
    ]
    areas = {(r.truth, r.n): r.mean_width_or_area for r in shape}
    for chi, xi in SPECIAL_SHAPES:
        t = (0.0, 1.0, chi, xi)
        if not areas[(t, 500)] < areas[(t, 100)]:
            problems.append(f"area {t}: {areas[(t, 100)]:.4f} -> {areas[(t, 500)]:.4f}")
    low = min(r.coverage for r in loc + shape)
    trend = ", ".join(
        f"{areas[((0.0, 1.0, c, x), 100)]:.3f}->{areas[((0.0, 1.0, c, x), 500)]:.3f}"
        for c, x in SPECIAL_SHAPES
    )
    _report(
        10,
        not problems,
        "; ".join(problems) or f"min coverage {low:.3f}, areas {trend}; {seconds:.0f}s",
        capsys,
    )


def _first_upper(band, u):
    idx = np.flatnonzero(band.upper >= u)
    return idx[0] if idx.size else None


def _last_lower(band, u):
    idx = np.flatnonzero(band.lower <= u)
    return idx[-1] if idx.size else None


def _stat(xs, i, missing):
    return missing if i is None else xs[i]


def test_criterion_11_oracle_equivalence(capsys):
    rng = np.random.default_rng(11)
    counts = dict.fromkeys(
        ("tl_ci_raw", "tl_ci_abs", "quantile_ci", "qr_ci", "shape_region"), 0
    )
    bad = dict.fromkeys(counts, 0)
    for _ in range(200):
        n = int(rng.integers(3, 51))
        band = cached_band(
            n,
            float(rng.choice([0.05, 0.2])),
            str(rng.choice(["DW", "DKW"])),
            mc_reps=2000,
        )
        lam = float(rng.uniform(-2, 2))
        sample = TukeySample.from_values(tl_quantile(rng.random(n), lam))

        raw, ab = tl_ci_raw(sample, band), tl_ci_abs(sample, band)
        feas = oracles.feasible_raw(sample.sorted_values, band.lower, band.upper)
        bad["tl_ci_raw"] += (
            oracles.grid_disagreements(feas, raw.lo, raw.hi, raw.empty).size > 0
        )
        feas = oracles.feasible_abs(sample.sorted_abs, band.lower, band.upper)
        bad["tl_ci_abs"] += (
            oracles.grid_disagreements(feas, ab.lo, ab.hi, ab.empty).size > 0
        )

        xs = sample.sorted_values
        u = float(rng.uniform(0.01, 0.99))
        ci = quantile_ci(xs, band, u)
        bad["quantile_ci"] += (ci.lo, ci.hi) != (
            _stat(xs, _first_upper(band, u), -math.inf),
            _stat(xs, _last_lower(band, u), math.inf),
        )

        u1, u2 = sorted(rng.uniform(0.01, 0.99, 2))[::-1]
        qr = qr_ci(xs, band, u1, u2)
        lo = _stat(xs, _first_upper(band, u1), -math.inf) - _stat(
            xs, _last_lower(band, u2), math.inf
        )
        hi = _stat(xs, _last_lower(band, u1), math.inf) - _stat(
            xs, _first_upper(band, u2), -math.inf
        )
        lo = 0.0 if math.isnan(lo) else max(lo, 0.0)
        bad["qr_ci"] += (qr.lo, qr.hi) != (lo, max(hi, lo))

        gx = np.sort(
            gld_sample(
                n,
                CSWParams(
                    0, 1, float(rng.uniform(-0.6, 0.6)), float(rng.uniform(0.2, 0.6))
                ),
                0,
                n,
            )
        )
        pairs = pairs_grid(n, int(rng.integers(2, min(n, 6))))
        region = shape_region(gx, band, pairs, 10, 10)
        cis = [shape_stat_ci(gx, band, a, b) for a, b in pairs]
        want = np.array(
            [
                [
                    all(shape_stat(a, b, c, x) in ci for (a, b), ci in zip(pairs, cis))
                    for x in region.xi_grid
                ]
                for c in region.chi_grid
            ]
        )
        bad["shape_region"] += not np.array_equal(want, region.mask)
        for key in counts:
            counts[key] += 1
    ok = not any(bad.values())
    detail = (
        ", ".join(f"{k} {bad[k]}/{counts[k]}" for k in counts) + " mismatched instances"
    )
    _report(11, ok, detail, capsys)


def _run_cli(argv, capsys) -> bytes:
    assert main(argv) == 0
    return capsys.readouterr().out.encode()


def test_criterion_12_determinism(tmp_path, capsys):
    data = tmp_path / "x.txt"
    data.write_text(
        "\n".join(
            repr(float(v)) for v in gld_sample(150, CSWParams(0, 1, 0.2, 0.4), 12)
        )
    )
    commands = [
        ["band", "--n", "60", "--kind", "dw", "--seed", "42"],
        ["tl-ci", "--data", str(data), "--transform", "abs"],
        ["gld-ci", "--data", str(data), "--targets", "mu,sigma,shape", "--grid", "60"],
        [
            "estimate",
            "--data",
            str(data),
            "--method",
            "qmatch",
            "--bootstrap",
            "parametric",
            "--B",
            "300",
            "--seed",
            "5",
        ],
        [
            "estimate",
            "--data",
            str(data),
            "--method",
            "csw",
            "--bootstrap",
            "nonparametric",
            "--B",
            "200",
            "--seed",
            "5",
        ],
    ]
    differing = [
        argv[0] for argv in commands if _run_cli(argv, capsys) != _run_cli(argv, capsys)
    ]

    configs = [
        {
            "experiment": "tukey_band_comparison",
            "truths": [[0.5]],
            "methods": ["ours-DW", "ours-DKW"],
        },
        {
            "experiment": "tukey_method_comparison",
            "truths": [[-1.0]],
            "methods": ["ours", "lmoments+npboot", "qmatch+pboot"],
            "bootstrap_B": 100,
        },
        {
            "experiment": "gld_location_scale",
            "truths": [[1.0, 2.0, 0.1, 0.4]],
            "methods": ["ours-DW"],
        },
        {
            "experiment": "gld_shape_region",
            "truths": [[0.0, 1.0, 0.1, 0.4]],
            "methods": ["ours-DW"],
            "grid": 40,
        },
    ]
    for extra in configs:
        cfg = ExperimentConfig.from_dict(
            dict(n_grid=[40], replications=16, master_seed=12, **extra)
        )
        outs = set()
        for workers in (1, 1, 8):
            buf = io.StringIO()
            emit_csv(run(cfg, workers=workers), buf)
            outs.add(buf.getvalue())
        if len(outs) != 1:
            differing.append(extra["experiment"])
    detail = (
        f"differing: {json.dumps(differing)}"
        if differing
        else f"{len(commands)} CLI commands, {len(configs)} simulations"
    )
    _report(12, not differing, detail, capsys)
