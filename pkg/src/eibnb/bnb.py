"""Stochastic branch and bound for maximizing an EI criterion over [0,1]^d.

The algorithm minimizes g = -EI with the classic branch / bound / prune
loop: pick the rectangle with the smallest lower bound, bisect it along a
longest edge, re-bound the children, and drop every rectangle whose lower
bound exceeds the list-wide smallest upper bound.

Bounds on the criterion come from interval bounds on (yhat, s) over each
rectangle.  By default those are *estimated* from sampled predictions
inside the rectangle (the stochastic variant), so the returned maximizer
is the best sampled point (incumbent), not a certified interval; the final
gap is reported as a diagnostic.  A deterministic bound provider (e.g. a
dense prediction grid) can be injected for oracle-mode runs where the
usual BNB guarantees apply relative to the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from eibnb.criteria import BestEstimates, FeatureTarget, PredBox, ei_bounds, ei_value
from eibnb.gp import GPFit, predict_many
from eibnb.sampling import lhd_in_box


class SplitError(ValueError):
    """Attempted to split a zero-volume rectangle."""


@dataclass(eq=False)
class Rectangle:
    """Axis-aligned box in [0,1]^d with cached bounds on min of g = -EI."""

    lower: np.ndarray
    upper: np.ndarray
    psi_lb: float = np.nan
    psi_ub: float = np.nan
    seq: int = 0

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if np.any(self.lower > self.upper):
            raise ValueError("rectangle needs lower <= upper")
        if np.any(self.lower < 0.0) or np.any(self.upper > 1.0):
            raise ValueError("rectangle must lie inside [0,1]^d")

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    @property
    def longest_edge(self) -> float:
        return float(np.max(self.upper - self.lower))


@dataclass(frozen=True)
class BnbConfig:
    """Budgets and tolerances for one bnb_maximize run.

    epsilon None means the relative default 1e-3 * |U_0|.  The EI budget is
    the total number of pointwise criterion evaluations (the quantity fixed
    at 500 / 3000 in the two- and four-dimensional comparisons).
    """

    ei_eval_budget: int = 500
    samples_per_rectangle: int = 10
    epsilon: float | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.ei_eval_budget < self.samples_per_rectangle:
            raise ValueError("budget must cover at least one rectangle's samples")
        if self.samples_per_rectangle < 1:
            raise ValueError("samples_per_rectangle must be positive")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class BnbIterationRecord:
    iteration: int
    list_size: int
    L: float
    U: float
    incumbent_ei: float
    evals_used: int
    pruned: int

    CSV_HEADER = ("iteration", "list_size", "L", "U", "incumbent_ei", "evals_used", "pruned")

    def csv_row(self) -> tuple:
        return (
            self.iteration,
            self.list_size,
            repr(self.L),
            repr(self.U),
            repr(self.incumbent_ei),
            self.evals_used,
            self.pruned,
        )


@dataclass
class BnbResult:
    xbest: np.ndarray
    ei_best: float
    gap: float
    trace: list[BnbIterationRecord] = field(default_factory=list)
    evals_used: int = 0
    live: list[Rectangle] = field(default_factory=list)
    pruned: list[Rectangle] = field(default_factory=list)


def split_rectangle(
    q: Rectangle, rng: np.random.Generator
) -> tuple[Rectangle, Rectangle]:
    """Bisect at the midpoint of a longest edge; ties break uniformly."""
    edges = q.upper - q.lower
    if q.volume <= 0.0:
        raise SplitError("cannot split a zero-volume rectangle")
    longest = edges.max()
    candidates = np.flatnonzero(edges == longest)
    axis = int(candidates[rng.integers(len(candidates))])
    mid = 0.5 * (q.lower[axis] + q.upper[axis])
    up1 = q.upper.copy()
    up1[axis] = mid
    lo2 = q.lower.copy()
    lo2[axis] = mid
    return (
        Rectangle(q.lower.copy(), up1),
        Rectangle(lo2, q.upper.copy()),
    )


def sample_points_in_rectangle(
    q: Rectangle, n_samples: int, rng: np.random.Generator, with_corners: bool = True
) -> np.ndarray:
    """Space-filling points in q: a stratified Latin hypercube, topped up
    with the 2^d corners when d <= 4 and the budget allows."""
    d = q.lower.shape[0]
    n_corners = 2**d if (with_corners and d <= 4 and n_samples > 2**d) else 0
    pts = []
    if n_corners:
        grids = np.meshgrid(*[(q.lower[k], q.upper[k]) for k in range(d)], indexing="ij")
        pts.append(np.column_stack([g.ravel() for g in grids]))
    n_lhs = n_samples - n_corners
    if n_lhs > 0:
        pts.append(lhd_in_box(q.lower, q.upper, n_lhs, rng))
    return np.vstack(pts)


def pred_box_from_predictions(yhat: np.ndarray, s2: np.ndarray) -> PredBox:
    s = np.sqrt(np.maximum(s2, 0.0))
    return PredBox(
        yhat_lb=float(yhat.min()),
        yhat_ub=float(yhat.max()),
        s_lb=float(s.min()),
        s_ub=float(s.max()),
    )


def estimate_pred_box(
    fit: GPFit, q: Rectangle, n_samples: int, rng: np.random.Generator
) -> PredBox:
    """Observed min/max of yhat and s over sampled predictions in q."""
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    pts = sample_points_in_rectangle(q, n_samples, rng)
    yhat, s2 = predict_many(fit, pts)
    return pred_box_from_predictions(yhat, s2)


# A bound provider maps a rectangle to (PredBox, points, yhat, s) where the
# points carry the pointwise predictions used for the incumbent.
BoundProvider = Callable[[Rectangle], tuple[PredBox, np.ndarray, np.ndarray, np.ndarray]]


def make_sampling_bound_provider(
    fit: GPFit, n_samples: int, rng: np.random.Generator
) -> BoundProvider:
    def provider(q: Rectangle):
        pts = sample_points_in_rectangle(q, n_samples, rng)
        yhat, s2 = predict_many(fit, pts)
        s = np.sqrt(np.maximum(s2, 0.0))
        return pred_box_from_predictions(yhat, s2), pts, yhat, s

    return provider


def make_grid_bound_provider(fit: GPFit, resolution: int) -> BoundProvider:
    """Deterministic bounds from a dense tensor prediction grid (oracle
    mode): exact min/max of yhat and s over the grid points inside each
    rectangle; rectangles holding no grid point fall back to their center."""
    d = fit.data.dim
    axes = np.linspace(0.0, 1.0, resolution)
    mesh = np.meshgrid(*([axes] * d), indexing="ij")
    grid_pts = np.column_stack([m.ravel() for m in mesh])
    g_yhat, g_s2 = predict_many(fit, grid_pts)
    g_yhat = g_yhat.reshape([resolution] * d)
    g_s = np.sqrt(np.maximum(g_s2, 0.0)).reshape([resolution] * d)

    def provider(q: Rectangle):
        sl = []
        empty = False
        for k in range(d):
            i0 = int(np.searchsorted(axes, q.lower[k] - 1e-12, side="left"))
            i1 = int(np.searchsorted(axes, q.upper[k] + 1e-12, side="right"))
            if i1 <= i0:
                empty = True
                break
            sl.append(slice(i0, i1))
        if empty:
            center = 0.5 * (q.lower + q.upper)
            yhat, s2 = predict_many(fit, center.reshape(1, -1))
            s = np.sqrt(np.maximum(s2, 0.0))
            return pred_box_from_predictions(yhat, s2), center.reshape(1, -1), yhat, s
        sub_y = g_yhat[tuple(sl)]
        sub_s = g_s[tuple(sl)]
        box = PredBox(
            yhat_lb=float(sub_y.min()),
            yhat_ub=float(sub_y.max()),
            s_lb=float(sub_s.min()),
            s_ub=float(sub_s.max()),
        )
        idx = np.meshgrid(*[axes[s_] for s_ in sl], indexing="ij")
        pts = np.column_stack([m.ravel() for m in idx])
        return box, pts, sub_y.ravel(), sub_s.ravel()

    return provider


_MIN_SPLIT_EDGE = 1e-12


def bnb_maximize(
    fit: GPFit,
    target: FeatureTarget,
    bests: BestEstimates,
    config: BnbConfig,
    bound_provider: BoundProvider | None = None,
) -> BnbResult:
    """Maximize the criterion by branch and bound on g = -EI.

    Stops when the list-wide gap U - L drops to epsilon or the EI
    evaluation budget is exhausted.  Returns the incumbent (best sampled
    point), its EI, the final gap, and a per-iteration trace.
    """
    d = fit.data.dim
    rng = np.random.default_rng(config.rng_seed)
    if bound_provider is None:
        bound_provider = make_sampling_bound_provider(
            fit, config.samples_per_rectangle, rng
        )

    evals_used = 0
    best_x, best_ei = None, -np.inf

    def bound(q: Rectangle):
        nonlocal evals_used, best_x, best_ei
        box, pts, yhat, s = bound_provider(q)
        evals_used += pts.shape[0]
        ei_pts = np.atleast_1d(ei_value(target, yhat, s, bests))
        i = int(np.argmax(ei_pts))
        if ei_pts[i] > best_ei:
            best_ei = float(ei_pts[i])
            best_x = pts[i].copy()
        lb, ub = ei_bounds(target, box, bests)
        q.psi_lb = -ub
        q.psi_ub = -lb

    root = Rectangle(np.zeros(d), np.ones(d), seq=0)
    bound(root)
    live: list[Rectangle] = [root]
    pruned: list[Rectangle] = []
    seq_counter = 1

    L = root.psi_lb
    U = root.psi_ub
    eps = config.epsilon if config.epsilon is not None else 1e-3 * abs(U)
    trace = [BnbIterationRecord(0, 1, L, U, best_ei, evals_used, 0)]

    k = 0
    while U - L > eps:
        if evals_used + 2 * config.samples_per_rectangle > config.ei_eval_budget:
            break
        # line 6: pick the rectangle attaining L_k; ties by larger volume,
        # then insertion order
        pick = min(live, key=lambda q: (q.psi_lb, -q.volume, q.seq))
        if pick.longest_edge <= _MIN_SPLIT_EDGE:
            break
        q1, q2 = split_rectangle(pick, rng)
        q1.seq, q2.seq = seq_counter, seq_counter + 1
        seq_counter += 2
        bound(q1)
        bound(q2)
        live.remove(pick)
        live.extend([q1, q2])
        L = min(q.psi_lb for q in live)
        U = min(q.psi_ub for q in live)
        dropped = [q for q in live if q.psi_lb > U]
        if dropped:
            live = [q for q in live if q.psi_lb <= U]
            pruned.extend(dropped)
        k += 1
        trace.append(
            BnbIterationRecord(k, len(live), L, U, best_ei, evals_used, len(dropped))
        )

    return BnbResult(
        xbest=best_x,
        ei_best=best_ei,
        gap=float(U - L),
        trace=trace,
        evals_used=evals_used,
        live=live,
        pruned=pruned,
    )
