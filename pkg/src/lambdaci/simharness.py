"""Seeded Monte Carlo coverage studies with tidy CSV output.

A run is a grid of ``(truth, n, method)`` cells.  Replication ``r`` at sample
size ``n`` draws its uniforms from substream ``(master_seed, n, r, 0)`` and
any bootstrap resamples from ``(master_seed, n, r, 1, ...)``.  The same
uniforms feed every truth and every method, so comparisons between cells use
common random numbers and location shifts are exact.  Results are merged by
replication index and therefore do not depend on the worker count.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import time
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .bands import BandKind, cached_band
from .baselines import (
    BootstrapSpec,
    EstimationError,
    bootstrap_ci,
    lmoment_estimate_tl,
    quantile_match_estimate_tl,
)
from .gld import CSWParams, gld_quantile, location_scale_cis, parse_pairs, shape_region
from .rng import substream_uniforms
from .roots import ConvergenceError
from .tukey import TukeySample, _power_diff, tl_ci

CSV_HEADER = (
    "family",
    "truth",
    "n",
    "method",
    "coverage",
    "mean_width_or_area",
    "infinite_fraction",
    "replications",
    "wall_time_seconds",
)


class ConfigError(ValueError):
    """The experiment configuration is invalid."""


class Family(str, enum.Enum):
    TUKEY = "TukeyLambda"
    GLD = "GLD"


class Experiment(str, enum.Enum):
    TUKEY_BANDS = "tukey_band_comparison"
    TUKEY_METHODS = "tukey_method_comparison"
    GLD_LOCATION_SCALE = "gld_location_scale"
    GLD_SHAPE = "gld_shape_region"

    @property
    def family(self) -> Family:
        return Family.TUKEY if self.value.startswith("tukey") else Family.GLD


DEFAULT_METHODS = {
    Experiment.TUKEY_BANDS: ("ours-DW", "ours-DKW"),
    Experiment.TUKEY_METHODS: (
        "ours",
        "lmoments+npboot",
        "qmatch+npboot",
        "qmatch+pboot",
    ),
    Experiment.GLD_LOCATION_SCALE: ("ours-DW",),
    Experiment.GLD_SHAPE: ("ours-DW",),
}
BASELINE_METHODS = ("lmoments+npboot", "qmatch+npboot", "qmatch+pboot")


@dataclass(frozen=True)
class OursMethod:
    transform: str = "abs"
    band: BandKind = BandKind.DW


def parse_ours(method: str) -> OursMethod:
    """Parse ``ours[-raw|-abs][-DW|-DKW]``."""
    parts = method.split("-")
    if parts[0] != "ours" or len(parts) > 3:
        raise ConfigError(f"unknown method {method!r}")
    transform, band = "abs", BandKind.DW
    for part in parts[1:]:
        if part in ("raw", "abs"):
            transform = part
        else:
            try:
                band = BandKind.parse(part)
            except ValueError:
                raise ConfigError(f"unknown method {method!r}") from None
    return OursMethod(transform, band)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    truths: tuple[tuple[float, ...], ...]
    n_grid: tuple[int, ...] = (30, 100, 300, 1000)
    methods: tuple[str, ...] = ()
    alpha: float = 0.05
    replications: int = 500
    master_seed: int = 0
    nu: float = 1.0
    mc_reps: int = 10_000
    band_seed: int = 0
    pairs: str = "edge:17"
    grid: int = 200
    bootstrap_B: int = 1000
    family: Family | None = None

    def __post_init__(self):
        try:
            exp = Experiment(self.experiment)
        except ValueError:
            raise ConfigError(f"unknown experiment {self.experiment!r}") from None
        set_ = lambda k, v: object.__setattr__(self, k, v)
        set_("experiment", exp)
        if self.family is not None and Family(self.family) is not exp.family:
            raise ConfigError(f"{exp.value} needs family {exp.family.value}")
        set_("family", exp.family)
        set_(
            "truths",
            tuple(tuple(float(v) for v in np.atleast_1d(t)) for t in self.truths),
        )
        set_("n_grid", tuple(int(n) for n in self.n_grid))
        set_("methods", tuple(self.methods) or DEFAULT_METHODS[exp])
        self._validate()

    def _validate(self):
        if not self.truths:
            raise ConfigError("truths must be non-empty")
        width = 1 if self.family is Family.TUKEY else 4
        for t in self.truths:
            if len(t) != width:
                raise ConfigError(
                    f"{self.family.value} truths need {width} values, got {t}"
                )
            if self.family is Family.GLD:
                try:
                    CSWParams(*t)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
        if not self.n_grid or min(self.n_grid) < 1:
            raise ConfigError("n_grid must hold positive sizes")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.grid < 2:
            raise ConfigError("grid must be >= 2")
        if self.mc_reps < 1:
            raise ConfigError("mc_reps must be >= 1")
        baselines = [m for m in self.methods if not m.startswith("ours")]
        for m in self.methods:
            if m.startswith("ours"):
                parse_ours(m)
            elif (
                self.experiment is not Experiment.TUKEY_METHODS
                or m not in BASELINE_METHODS
            ):
                raise ConfigError(
                    f"method {m!r} is not available for {self.experiment.value}"
                )
        if baselines and self.bootstrap_B < 100:
            raise ConfigError("bootstrap_B must be >= 100")
        if self.experiment is Experiment.GLD_SHAPE:
            try:
                parse_pairs(self.pairs, min(self.n_grid))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> ExperimentConfig:
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "experiment" not in obj or "truths" not in obj:
            raise ConfigError("config needs 'experiment' and 'truths'")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_json(cls, path) -> ExperimentConfig:
        text = Path(path).read_text()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(obj)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["experiment"] = self.experiment.value
        d["family"] = self.family.value
        d["truths"] = [list(t) for t in self.truths]
        d["n_grid"] = list(self.n_grid)
        d["methods"] = list(self.methods)
        return d


@dataclass(frozen=True)
class ExperimentResult:
    family: str
    truth: tuple[float, ...]
    n: int
    method: str
    coverage: float
    mean_width_or_area: float
    infinite_fraction: float
    replications: int
    wall_time_seconds: float | None = None

    def __post_init__(self):
        if not 0 <= self.coverage <= 1 or not 0 <= self.infinite_fraction <= 1:
            raise ValueError("coverage and infinite_fraction must lie in [0, 1]")

    @property
    def se(self) -> float:
        """Binomial standard error of the coverage estimate."""
        return math.sqrt(self.coverage * (1 - self.coverage) / self.replications)


# ---------------------------------------------------------------------------
# per-replication evaluation


@dataclass
class _Outcome:
    covered: bool
    size: float
    seconds: float = 0.0


def _interval_outcome(iv, truth: float) -> tuple[bool, float]:
    return truth in iv, iv.width


def _timed(fn: Callable, *args) -> _Outcome:
    t0 = time.perf_counter()
    covered, size = fn(*args)
    return _Outcome(bool(covered), float(size), time.perf_counter() - t0)


def _band(cfg: ExperimentConfig, n: int, kind: BandKind):
    return cached_band(n, cfg.alpha, kind.value, cfg.nu, cfg.mc_reps, cfg.band_seed)


def _tukey_ours(cfg, n, method, sample: TukeySample, lam0):
    m = parse_ours(method)
    return _interval_outcome(tl_ci(sample, _band(cfg, n, m.band), m.transform), lam0)


_ESTIMATORS = {"lmoments": lmoment_estimate_tl, "qmatch": quantile_match_estimate_tl}
_BOOT_KINDS = {"npboot": "nonparametric", "pboot": "parametric"}


def _tukey_baseline(cfg, n, rep, method, values, lam0):
    est_name, boot_name = method.split("+")
    spec = BootstrapSpec(
        cfg.bootstrap_B, _BOOT_KINDS[boot_name], cfg.alpha, cfg.master_seed, (n, rep, 1)
    )
    try:
        iv = bootstrap_ci(values, _ESTIMATORS[est_name], spec)
    except (EstimationError, ConvergenceError):
        # no interval at all: a miss of unknown size
        return False, math.inf
    return _interval_outcome(iv, lam0)


def _eval_tukey(cfg: ExperimentConfig, n: int, rep: int, u: np.ndarray):
    out = {}
    for t in cfg.truths:
        lam0 = t[0]
        values = _power_diff(u, 1.0 - u, lam0)
        sample = TukeySample.from_values(values)
        for m in cfg.methods:
            if m.startswith("ours"):
                out[t, m] = _timed(_tukey_ours, cfg, n, m, sample, lam0)
            else:
                out[t, m] = _timed(_tukey_baseline, cfg, n, rep, m, values, lam0)
    return out


def _eval_gld_location_scale(cfg: ExperimentConfig, n: int, rep: int, u: np.ndarray):
    out = {}
    for t in cfg.truths:
        csw = CSWParams(*t)
        xs = np.sort(gld_quantile(u, csw))
        for m in cfg.methods:
            band = _band(cfg, n, parse_ours(m).band)
            t0 = time.perf_counter()
            cis = location_scale_cis(xs, band)
            dt = (time.perf_counter() - t0) / 2
            for target, value in (("mu", csw.mu_t), ("sigma", csw.sigma_t)):
                covered, width = _interval_outcome(cis[target], value)
                out[t, f"{m}:{target}"] = _Outcome(covered, width, dt)
    return out


def _region_outcome(xs, band, pairs, grid: int, csw: CSWParams) -> tuple[bool, float]:
    region = shape_region(xs, band, pairs, grid, grid)
    return region.contains(csw.chi, csw.xi), region.area


def _eval_gld_shape(cfg: ExperimentConfig, n: int, rep: int, u: np.ndarray):
    out = {}
    pairs = parse_pairs(cfg.pairs, n)
    for t in cfg.truths:
        csw = CSWParams(*t)
        xs = np.sort(gld_quantile(u, csw))
        for m in cfg.methods:
            band = _band(cfg, n, parse_ours(m).band)
            out[t, f"{m}:shape"] = _timed(
                _region_outcome, xs, band, pairs, cfg.grid, csw
            )
    return out


def _row_methods(cfg: ExperimentConfig) -> list[str]:
    if cfg.experiment is Experiment.GLD_LOCATION_SCALE:
        return [f"{m}:{target}" for m in cfg.methods for target in ("mu", "sigma")]
    if cfg.experiment is Experiment.GLD_SHAPE:
        return [f"{m}:shape" for m in cfg.methods]
    return list(cfg.methods)


_EVALUATORS = {
    Experiment.TUKEY_BANDS: _eval_tukey,
    Experiment.TUKEY_METHODS: _eval_tukey,
    Experiment.GLD_LOCATION_SCALE: _eval_gld_location_scale,
    Experiment.GLD_SHAPE: _eval_gld_shape,
}


def _summarise(outcomes: Sequence[_Outcome]) -> tuple[float, float, float, float]:
    covered = np.array([o.covered for o in outcomes])
    size = np.array([o.size for o in outcomes])
    finite = np.isfinite(size)
    mean = float(size[finite].mean()) if finite.any() else math.nan
    seconds = math.fsum(o.seconds for o in outcomes)
    return float(covered.mean()), mean, float(1.0 - finite.mean()), seconds


def run_experiment(
    cfg: ExperimentConfig, workers: int = 1, timing: bool = False
) -> list[ExperimentResult]:
    """Run every cell of ``cfg``; one result per ``(truth, n, row method)``.

    ``workers`` threads split the replications.  Wall time is reported only
    with ``timing=True`` so that the default output is byte-reproducible.
    """
    evaluate = _EVALUATORS[cfg.experiment]
    row_methods = _row_methods(cfg)
    per_n: dict[int, list[dict]] = {}
    for n in cfg.n_grid:
        # critical values once per n, before any worker starts
        for m in cfg.methods:
            if m.startswith("ours"):
                _band(cfg, n, parse_ours(m).band)

        def one(rep, n=n):
            return evaluate(
                cfg, n, rep, substream_uniforms(cfg.master_seed, n, n, rep, 0)
            )

        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                per_n[n] = list(pool.map(one, range(cfg.replications)))
        else:
            per_n[n] = [one(rep) for rep in range(cfg.replications)]

    results = []
    for t in cfg.truths:
        for n in cfg.n_grid:
            for m in row_methods:
                cov, mean, inf_frac, secs = _summarise([r[t, m] for r in per_n[n]])
                results.append(
                    ExperimentResult(
                        cfg.family.value,
                        t,
                        n,
                        m,
                        cov,
                        mean,
                        inf_frac,
                        cfg.replications,
                        secs if timing else None,
                    )
                )
    return results


def _require(cfg: ExperimentConfig, experiment: Experiment) -> ExperimentConfig:
    if cfg.experiment is not experiment:
        raise ConfigError(
            f"expected a {experiment.value} config, got {cfg.experiment.value}"
        )
    return cfg


def run_tukey_band_comparison(
    cfg: ExperimentConfig, workers: int = 1, timing: bool = False
):
    """Coverage and mean width of the Tukey Lambda set under DW and DKW bands."""
    _require(cfg, Experiment.TUKEY_BANDS)
    bands = {parse_ours(m).band for m in cfg.methods}
    if bands != {BandKind.DW, BandKind.DKW}:
        raise ConfigError("band comparison needs both a DW and a DKW method")
    return run_experiment(cfg, workers, timing)


def run_tukey_method_comparison(
    cfg: ExperimentConfig, workers: int = 1, timing: bool = False
):
    """Band-inversion sets against bootstrap intervals around point estimators."""
    return run_experiment(_require(cfg, Experiment.TUKEY_METHODS), workers, timing)


def run_gld_location_scale(
    cfg: ExperimentConfig, workers: int = 1, timing: bool = False
):
    """Coverage and width of the median and IQR intervals."""
    return run_experiment(_require(cfg, Experiment.GLD_LOCATION_SCALE), workers, timing)


def run_gld_shape_region(cfg: ExperimentConfig, workers: int = 1, timing: bool = False):
    """Coverage and area of the ``(chi, xi)`` grid region."""
    return run_experiment(_require(cfg, Experiment.GLD_SHAPE), workers, timing)


# ---------------------------------------------------------------------------
# CSV


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def format_truth(truth: Iterable[float]) -> str:
    return ";".join(repr(float(v)) for v in truth)


def parse_truth(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(";"))


def emit_csv(results: Sequence[ExperimentResult], path) -> None:
    """Write one row per cell under the fixed header; bytes depend only on ``results``.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_rows(results, path)
        return
    with open(Path(path), "w", newline="") as fh:
        _write_rows(results, fh)


def _write_rows(results: Sequence[ExperimentResult], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in results:
        w.writerow(
            [
                r.family,
                format_truth(r.truth),
                r.n,
                r.method,
                _fmt(r.coverage),
                _fmt(r.mean_width_or_area),
                _fmt(r.infinite_fraction),
                r.replications,
                "" if r.wall_time_seconds is None else _fmt(r.wall_time_seconds),
            ]
        )


def read_csv(path) -> list[ExperimentResult]:
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError("unexpected results header")
        return [
            ExperimentResult(
                r["family"],
                parse_truth(r["truth"]),
                int(r["n"]),
                r["method"],
                float(r["coverage"]),
                float(r["mean_width_or_area"]),
                float(r["infinite_fraction"]),
                int(r["replications"]),
                float(r["wall_time_seconds"]) if r["wall_time_seconds"] else None,
            )
            for r in reader
        ]


RUNNERS = {
    Experiment.TUKEY_BANDS: run_tukey_band_comparison,
    Experiment.TUKEY_METHODS: run_tukey_method_comparison,
    Experiment.GLD_LOCATION_SCALE: run_gld_location_scale,
    Experiment.GLD_SHAPE: run_gld_shape_region,
}


def run(
    cfg: ExperimentConfig, workers: int = 1, timing: bool = False
) -> list[ExperimentResult]:
    return RUNNERS[cfg.experiment](cfg, workers, timing)
