"""Sequential design loop, static maximin-LHD baseline, and the contour
divergence metric.

One sequential run alternates: fit the GP to everything observed, take the
observed response extremes as the running feature estimates, maximize the
feature's EI criterion with the chosen optimizer, run the simulator at the
winner, augment, repeat.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from eibnb.bnb import BnbConfig, bnb_maximize
from eibnb.criteria import BestEstimates, FeatureTarget
from eibnb.ga import GaConfig, ga_maximize
from eibnb.gp import DesignData, FitError, GPFit, fit_mle, predict_many
from eibnb.sampling import maximin_lhd
from eibnb.testbed import TestFunction

DUPLICATE_TOL = 1e-8
JITTER = 0.005
DEFAULT_LHD_CANDIDATES = 100


@dataclass
class TraceRecord:
    k: int
    x: np.ndarray | None
    y: float | None
    fmin_est: float
    fmax_est: float
    max_ei: float | None
    divergence: float | None
    n_evals: int

    CSV_HEADER = ("k", "x", "y", "fmin_est", "fmax_est", "max_ei", "d_k", "n_evals")


@dataclass
class RunTrace:
    records: list[TraceRecord] = field(default_factory=list)
    failed: bool = False

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]


@dataclass
class StaticRecord:
    k: int
    n: int
    fmin_est: float
    fmax_est: float
    divergence: float | None
    failed: bool = False


@dataclass
class StaticRun:
    records: list[StaticRecord] = field(default_factory=list)


def contour_divergence(fit: GPFit, contour_points: np.ndarray, a: float) -> float:
    """Root-mean-square deviation of the prediction from the level a along
    the discretized true contour."""
    contour_points = np.atleast_2d(np.asarray(contour_points, dtype=float))
    if contour_points.shape[0] == 0:
        raise ValueError("contour point set is empty")
    yhat, _ = predict_many(fit, contour_points)
    return float(np.sqrt(np.mean((yhat - a) ** 2)))


def _is_duplicate(X: np.ndarray, x: np.ndarray) -> bool:
    return bool(np.any(np.max(np.abs(X - x), axis=1) <= DUPLICATE_TOL))


def _deduplicate(X: np.ndarray, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Jitter a proposed point that collides with an existing design row."""
    x = x.copy()
    for _ in range(100):
        if not _is_duplicate(X, x):
            return x
        x = np.clip(x + rng.uniform(-JITTER, JITTER, size=x.shape), 0.0, 1.0)
    # fall back to a fresh random point; 100 jitters failing means the
    # design is pathologically dense around x
    while _is_duplicate(X, x):
        x = rng.random(x.shape[0])
    return x


def _maximize_ei(fit, target, bests, optimizer, opt_config, seed):
    cfg = dataclasses.replace(opt_config, rng_seed=seed)
    if optimizer == "bnb":
        res = bnb_maximize(fit, target, bests, cfg)
    elif optimizer == "ga":
        res = ga_maximize(fit, target, bests, cfg)
    else:
        raise ValueError(f"unknown optimizer {optimizer!r}")
    return res.xbest, res.ei_best


def run_sequential(
    sim: TestFunction,
    target: FeatureTarget,
    n0: int,
    n_new: int,
    optimizer: str,
    opt_config: BnbConfig | GaConfig,
    rng: np.random.Generator,
    contour_points: np.ndarray | None = None,
    lhd_candidates: int = DEFAULT_LHD_CANDIDATES,
    fit_restarts: int = 5,
) -> RunTrace:
    """Steps of the sequential loop, one new point per iteration.

    The trace record at k holds the k-th chosen point and simulator value
    (None at k = 0), running observed extremes, the max EI found when
    choosing that point, and, when ``contour_points`` is given, the
    contour divergence of the fit on the first n0 + k points.
    """
    d = sim.dim
    if n0 < d + 2:
        raise ValueError(f"n0 must be at least d + 2 = {d + 2}")
    if n_new < 0:
        raise ValueError("n_new must be nonnegative")

    X = maximin_lhd(n0, d, lhd_candidates, rng)
    y = np.asarray(sim(X), dtype=float)
    trace = RunTrace()
    pending_x, pending_y, pending_ei = None, None, None

    for k in range(n_new + 1):
        try:
            fit = fit_mle(DesignData(X, y), restarts=fit_restarts, rng=rng)
        except FitError:
            trace.failed = True
            return trace
        div = (
            contour_divergence(fit, contour_points, target.level_a)
            if contour_points is not None and target.kind.startswith("contour")
            else None
        )
        trace.records.append(
            TraceRecord(
                k=k,
                x=pending_x,
                y=pending_y,
                fmin_est=float(y.min()),
                fmax_est=float(y.max()),
                max_ei=pending_ei,
                divergence=div,
                n_evals=X.shape[0],
            )
        )
        if k == n_new:
            break

        bests = BestEstimates(fmin=float(y.min()), fmax=float(y.max()))
        if fit.degenerate:
            # EI is identically zero and so is s; fall back to a random
            # unsampled point
            x_new, ei_best = rng.random(d), 0.0
        else:
            seed = int(rng.integers(2**31 - 1))
            x_new, ei_best = _maximize_ei(fit, target, bests, optimizer, opt_config, seed)
        x_new = _deduplicate(X, np.asarray(x_new, dtype=float), rng)
        y_new = float(sim(x_new))
        X = np.vstack([X, x_new])
        y = np.append(y, y_new)
        pending_x, pending_y, pending_ei = x_new, y_new, float(ei_best)

    return trace


def static_baseline(
    sim: TestFunction,
    target: FeatureTarget,
    n0: int,
    k_values: list[int],
    rng: np.random.Generator,
    contour_points: np.ndarray | None = None,
    lhd_candidates: int = DEFAULT_LHD_CANDIDATES,
    fit_restarts: int = 5,
) -> StaticRun:
    """Independent maximin LHDs of size n0 + k for each requested k."""
    d = sim.dim
    run = StaticRun()
    for k in k_values:
        n = n0 + k
        if n < d + 2:
            raise ValueError(f"design size {n} below d + 2 = {d + 2}")
        X = maximin_lhd(n, d, lhd_candidates, rng)
        y = np.asarray(sim(X), dtype=float)
        try:
            fit = fit_mle(DesignData(X, y), restarts=fit_restarts, rng=rng)
        except FitError:
            run.records.append(
                StaticRecord(k, n, float(y.min()), float(y.max()), None, failed=True)
            )
            continue
        div = (
            contour_divergence(fit, contour_points, target.level_a)
            if contour_points is not None and target.kind.startswith("contour")
            else None
        )
        run.records.append(
            StaticRecord(k, n, float(y.min()), float(y.max()), div)
        )
    return run
