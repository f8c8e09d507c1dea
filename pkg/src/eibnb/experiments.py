"""Experiment harness: the three comparison families and the derivative
plots, with CSV export and deterministic per-seed replication.

Replications are keyed by (base seed, replication index) so that rerunning
with an identical config reproduces bit-identical raw CSVs.  Failed GP
fits exclude the replication from *every* method's average (paired
exclusion), and a fit fingerprint ties each method's row to the shared fit
it was given.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from eibnb.bnb import BnbConfig, bnb_maximize
from eibnb.criteria import BestEstimates, FeatureTarget, d_ei_contour_mod_ts
from eibnb.design import run_sequential, static_baseline
from eibnb.ga import POOL_FACTOR, GaConfig, ga_maximize
from eibnb.gp import DesignData, FitError, fit_mle
from eibnb.sampling import maximin_lhd
from eibnb.testbed import TestFunction, branin_function, discretize_contour, levy_function

# sigma2 blowing up past this multiple of the sample response variance
# marks a bad fit; the replication is excluded for every method
BAD_FIT_SIGMA2_FACTOR = 1e6


class ExperimentError(RuntimeError):
    """Experiment produced no usable replications."""


FUNCTIONS = {
    "branin": branin_function,
    "levy2": lambda: levy_function(2),
    "levy4": lambda: levy_function(4),
}


def make_test_function(name: str) -> TestFunction:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}; choose from {sorted(FUNCTIONS)}")
    return FUNCTIONS[name]()


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "direct"
    function: str = "branin"
    target: FeatureTarget = field(default_factory=FeatureTarget.max_min)
    n0: tuple[int, ...] = (10, 20)
    n_new: int = 30
    replications: int = 50
    budget: int = 500
    seed: int = 0
    output_dir: str | None = None
    band: tuple[float, float] | None = None
    study_checkpoints: tuple[int, ...] = (5, 10, 20, 30)
    lhd_candidates: int = 100
    fit_restarts: int = 5
    contour_resolution: int = 201

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if isinstance(self.n0, int):
            object.__setattr__(self, "n0", (self.n0,))
        else:
            object.__setattr__(self, "n0", tuple(int(v) for v in self.n0))


@dataclass(frozen=True)
class AggregateRow:
    """One aggregated cell: grouping keys, mean, s/sqrt(n) and counts."""

    method: str
    group: str  # "n0=10", "k=12", ...
    metric: str
    mean: float
    stderr: float
    n_included: int
    n_excluded: int

    CSV_HEADER = ("method", "group", "metric", "mean", "stderr", "n_included", "n_excluded")

    def csv_row(self) -> tuple:
        return (
            self.method,
            self.group,
            self.metric,
            repr(self.mean),
            repr(self.stderr),
            self.n_included,
            self.n_excluded,
        )


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else math.nan
    return mean, stderr


def write_csv(path: Path, header: tuple, rows: list[tuple]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def fit_fingerprint(data: DesignData, params) -> str:
    """Hash of the design and fitted parameters; ties paired method rows
    to the identical fit they consumed."""
    h = hashlib.sha256()
    h.update(data.X.tobytes())
    h.update(data.y.tobytes())
    h.update(np.asarray([params.mu, params.sigma2, params.delta]).tobytes())
    h.update(params.theta.tobytes())
    return h.hexdigest()[:16]


def _default_bnb_config(budget: int, dim: int) -> BnbConfig:
    return BnbConfig(
        ei_eval_budget=budget,
        samples_per_rectangle=10 if dim <= 2 else 20,
    )


def _default_ga_config(budget: int) -> GaConfig:
    n_init = 25
    generations = max(budget // (POOL_FACTOR * n_init), 1)
    return GaConfig(
        n_init=n_init, n_generations=generations, ei_eval_budget=budget
    )


def _rep_rng(seed: int, rep: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng([seed, rep, stream])


@dataclass
class DirectResult:
    raw_rows: list[tuple] = field(default_factory=list)
    aggregates: list[AggregateRow] = field(default_factory=list)
    exclusions: list[tuple] = field(default_factory=list)

    RAW_HEADER = ("run_id", "seed", "n0", "method", "max_ei", "evals_used", "fit_hash")


def run_direct_comparison(cfg: ExperimentConfig, fit_fn=fit_mle) -> DirectResult:
    """One EI-maximization step per replication: a shared fit handed to
    both BNB and GA under the same evaluation budget."""
    sim = make_test_function(cfg.function)
    result = DirectResult()
    per_rep: dict[tuple[int, str], list[float]] = {}
    excluded: dict[int, int] = {n0: 0 for n0 in cfg.n0}

    for n0 in cfg.n0:
        for rep in range(cfg.replications):
            rng = _rep_rng(cfg.seed, rep, stream=n0)
            X = maximin_lhd(n0, sim.dim, cfg.lhd_candidates, rng)
            y = np.asarray(sim(X), dtype=float)
            data = DesignData(X, y)
            try:
                fit = fit_fn(data, restarts=cfg.fit_restarts, rng=rng)
            except FitError:
                excluded[n0] += 1
                result.exclusions.append((rep, n0, "fit_failure"))
                continue
            if fit.params.sigma2 > BAD_FIT_SIGMA2_FACTOR * max(float(np.var(y)), 1e-300):
                excluded[n0] += 1
                result.exclusions.append((rep, n0, "sigma2_blowup"))
                continue
            bests = BestEstimates(fmin=float(y.min()), fmax=float(y.max()))
            fh = fit_fingerprint(data, fit.params)
            bnb_seed = int(rng.integers(2**31 - 1))
            ga_seed = int(rng.integers(2**31 - 1))
            bnb_cfg = dataclasses.replace(
                _default_bnb_config(cfg.budget, sim.dim), rng_seed=bnb_seed
            )
            ga_cfg = dataclasses.replace(_default_ga_config(cfg.budget), rng_seed=ga_seed)
            bnb_res = bnb_maximize(fit, cfg.target, bests, bnb_cfg)
            ga_res = ga_maximize(fit, cfg.target, bests, ga_cfg)
            for method, res in (("bnb", bnb_res), ("ga", ga_res)):
                result.raw_rows.append(
                    (rep, cfg.seed, n0, method, repr(res.ei_best), res.evals_used, fh)
                )
                per_rep.setdefault((n0, method), []).append(res.ei_best)

    if not per_rep:
        raise ExperimentError("every replication was excluded")

    for (n0, method), vals in sorted(per_rep.items()):
        mean, stderr = _mean_stderr(vals)
        result.aggregates.append(
            AggregateRow(method, f"n0={n0}", "max_ei", mean, stderr, len(vals), excluded[n0])
        )
    _maybe_write(cfg, "direct", DirectResult.RAW_HEADER, result.raw_rows, result.aggregates)
    return result


@dataclass
class LongRunResult:
    raw_rows: list[tuple] = field(default_factory=list)
    aggregates: list[AggregateRow] = field(default_factory=list)
    n_excluded: int = 0

    RAW_HEADER = ("run_id", "seed", "method", "k", "y_new", "fmin_est", "fmax_est", "max_ei", "d_k")


def _contour_points_for(cfg: ExperimentConfig, sim: TestFunction) -> np.ndarray | None:
    if not cfg.target.kind.startswith("contour"):
        return None
    return discretize_contour(
        sim,
        cfg.target.level_a,
        resolution=cfg.contour_resolution,
        rng=np.random.default_rng([cfg.seed, 999_983]),
    )


def run_long_run(cfg: ExperimentConfig) -> LongRunResult:
    """Sequential BNB, sequential GA and the static baseline, replicated,
    with per-k curves of the feature estimates / contour divergence."""
    sim = make_test_function(cfg.function)
    n0 = cfg.n0[0]
    contour_pts = _contour_points_for(cfg, sim)
    result = LongRunResult()
    per_cell: dict[tuple[str, int, str], list[float]] = {}
    k_values = list(range(cfg.n_new + 1))

    bnb_cfg = _default_bnb_config(cfg.budget, sim.dim)
    ga_cfg = _default_ga_config(cfg.budget)

    for rep in range(cfg.replications):
        traces = {}
        failed = False
        for si, (method, opt_cfg) in enumerate((("bnb", bnb_cfg), ("ga", ga_cfg))):
            trace = run_sequential(
                sim,
                cfg.target,
                n0,
                cfg.n_new,
                method,
                opt_cfg,
                _rep_rng(cfg.seed, rep, stream=si),
                contour_points=contour_pts,
                lhd_candidates=cfg.lhd_candidates,
                fit_restarts=cfg.fit_restarts,
            )
            if trace.failed:
                failed = True
                break
            traces[method] = trace
        if not failed:
            static = static_baseline(
                sim,
                cfg.target,
                n0,
                k_values,
                _rep_rng(cfg.seed, rep, stream=2),
                contour_points=contour_pts,
                lhd_candidates=cfg.lhd_candidates,
                fit_restarts=cfg.fit_restarts,
            )
            failed = any(r.failed for r in static.records)
        if failed:
            result.n_excluded += 1
            continue

        for method, trace in traces.items():
            for rec in trace.records:
                result.raw_rows.append(
                    (
                        rep,
                        cfg.seed,
                        method,
                        rec.k,
                        "" if rec.y is None else repr(rec.y),
                        repr(rec.fmin_est),
                        repr(rec.fmax_est),
                        "" if rec.max_ei is None else repr(rec.max_ei),
                        "" if rec.divergence is None else repr(rec.divergence),
                    )
                )
                per_cell.setdefault(("fmin_est", rec.k, method), []).append(rec.fmin_est)
                per_cell.setdefault(("fmax_est", rec.k, method), []).append(rec.fmax_est)
                if rec.divergence is not None:
                    per_cell.setdefault(("d_k", rec.k, method), []).append(rec.divergence)
        for rec in static.records:
            result.raw_rows.append(
                (
                    rep,
                    cfg.seed,
                    "static",
                    rec.k,
                    "",
                    repr(rec.fmin_est),
                    repr(rec.fmax_est),
                    "",
                    "" if rec.divergence is None else repr(rec.divergence),
                )
            )
            per_cell.setdefault(("fmin_est", rec.k, "static"), []).append(rec.fmin_est)
            per_cell.setdefault(("fmax_est", rec.k, "static"), []).append(rec.fmax_est)
            if rec.divergence is not None:
                per_cell.setdefault(("d_k", rec.k, "static"), []).append(rec.divergence)

    if not per_cell:
        raise ExperimentError("every replication was excluded")

    for (metric, k, method), vals in sorted(per_cell.items()):
        mean, stderr = _mean_stderr(vals)
        result.aggregates.append(
            AggregateRow(method, f"k={k}", metric, mean, stderr, len(vals), result.n_excluded)
        )
    _maybe_write(cfg, "longrun", LongRunResult.RAW_HEADER, result.raw_rows, result.aggregates)
    return result


@dataclass
class StudyResult:
    raw_rows: list[tuple] = field(default_factory=list)
    aggregates: list[AggregateRow] = field(default_factory=list)
    n_excluded: int = 0

    RAW_HEADER = ("run_id", "seed", "criterion", "k", "n_in_band", "proportion")


def run_local_global_study(cfg: ExperimentConfig) -> StudyResult:
    """GA-driven sequential contour estimation under the full and modified
    criteria; reports the fraction of added points whose true value falls
    in the configured neighbourhood band."""
    if not cfg.target.kind.startswith("contour"):
        raise ValueError("local/global study needs a contour target")
    if cfg.band is None:
        raise ValueError("local/global study needs a neighbourhood band")
    sim = make_test_function(cfg.function)
    n0 = cfg.n0[0]
    lo, hi = cfg.band
    checkpoints = [k for k in cfg.study_checkpoints if 1 <= k <= cfg.n_new]
    ga_cfg = _default_ga_config(cfg.budget)
    result = StudyResult()
    per_cell: dict[tuple[str, int], list[float]] = {}

    for rep in range(cfg.replications):
        failed = False
        rep_rows = []
        for kind in ("contour_full", "contour_mod"):
            target = FeatureTarget(kind, cfg.target.level_a, cfg.target.alpha)
            trace = run_sequential(
                sim,
                target,
                n0,
                cfg.n_new,
                "ga",
                ga_cfg,
                _rep_rng(cfg.seed, rep, stream=0),
                lhd_candidates=cfg.lhd_candidates,
                fit_restarts=cfg.fit_restarts,
            )
            if trace.failed:
                failed = True
                break
            added_y = [rec.y for rec in trace.records if rec.k >= 1]
            for k in checkpoints:
                in_band = sum(1 for v in added_y[:k] if lo < v < hi)
                prop = in_band / k
                rep_rows.append((rep, cfg.seed, kind, k, in_band, repr(prop)))
                per_cell.setdefault((kind, k), []).append(prop)
        if failed:
            result.n_excluded += 1
            continue
        result.raw_rows.extend(rep_rows)

    if not per_cell:
        raise ExperimentError("every replication was excluded")

    for (kind, k), vals in sorted(per_cell.items()):
        mean, stderr = _mean_stderr(vals)
        result.aggregates.append(
            AggregateRow(kind, f"k={k}", "proportion", mean, stderr, len(vals), result.n_excluded)
        )
    _maybe_write(cfg, "study", StudyResult.RAW_HEADER, result.raw_rows, result.aggregates)
    return result


@dataclass
class DerivPlotResult:
    raw_rows: list[tuple] = field(default_factory=list)
    plot_paths: list[Path] = field(default_factory=list)

    RAW_HEADER = ("t", "s", "d_dt", "d_ds")


def emit_derivative_plots(
    cfg: ExperimentConfig,
    s_values: tuple[float, ...] = (0.5, 1.0, 2.0),
    alpha: float = 2.0,
    n_t: int = 241,
) -> DerivPlotResult:
    """Partials of the modified contour criterion over t in [-6, 6] for a
    few s values; writes a data CSV and the two line plots."""
    t = np.linspace(-6.0, 6.0, n_t)
    result = DerivPlotResult()
    curves = {}
    for s in s_values:
        d_ds, d_dt = d_ei_contour_mod_ts(t, np.full_like(t, s), alpha)
        curves[s] = (d_dt, d_ds)
        for ti, dti, dsi in zip(t, d_dt, d_ds):
            result.raw_rows.append((repr(float(ti)), repr(s), repr(float(dti)), repr(float(dsi))))

    if cfg.output_dir is not None:
        out = Path(cfg.output_dir)
        write_csv(out / "derivplots_raw.csv", DerivPlotResult.RAW_HEADER, result.raw_rows)
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        for name, idx, ylabel in (("dt", 0, "d EI / d t"), ("ds", 1, "d EI / d s")):
            fig, ax = plt.subplots(figsize=(7, 4.5))
            for s in s_values:
                ax.plot(t, curves[s][idx], label=f"s = {s}")
            ax.axhline(0.0, color="gray", lw=0.6)
            ax.set_xlabel("t = (a - yhat) / s")
            ax.set_ylabel(ylabel)
            ax.legend()
            fig.tight_layout()
            path = out / f"derivplot_{name}.png"
            fig.savefig(path, dpi=120)
            plt.close(fig)
            result.plot_paths.append(path)
    return result


def _maybe_write(cfg, name, raw_header, raw_rows, aggregates) -> None:
    if cfg.output_dir is None:
        return
    out = Path(cfg.output_dir)
    write_csv(out / f"{name}_raw.csv", raw_header, raw_rows)
    write_csv(
        out / f"{name}_aggregate.csv",
        AggregateRow.CSV_HEADER,
        [row.csv_row() for row in aggregates],
    )
