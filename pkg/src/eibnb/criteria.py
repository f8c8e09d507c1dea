"""Improvement criteria and their rectangle bound rules.

Four expected-improvement criteria are provided, each the expectation of a
feature-specific improvement under y(x) ~ N(yhat, s^2):

* ``ei_min``          -- improvement toward the global minimum,
* ``ei_maxmin``       -- simultaneous improvement toward max and min,
* ``ei_contour_full`` -- contour (level-set) improvement, full form,
* ``ei_contour_mod``  -- contour improvement with the global-search
  integral term dropped, which makes it piecewise monotone in
  t = (a - yhat)/s and therefore boundable over rectangles.

``ei_bounds`` maps an interval box on (yhat, s) to an interval on the
criterion, which is what the branch-and-bound optimizer prunes with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_T_CLIP = 1e6  # t-range clip when an s lower bound approaches zero


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def norm_cdf(x):
    # erfc-based: accurate to ~1e-15 across the tails, unlike 0.5*(1+erf).
    x = np.asarray(x, dtype=float)
    return 0.5 * erfc(-x / _SQRT2)


class UnsupportedTargetError(ValueError):
    """Feature target has no rectangle bound rule (ContourFull under BNB)."""


@dataclass(frozen=True)
class FeatureTarget:
    """Which simulator feature drives the improvement criterion.

    kind is one of "min", "maxmin", "contour_full", "contour_mod";
    level_a and alpha apply to the contour kinds only.
    """

    kind: str
    level_a: float = math.nan
    alpha: float = 2.0

    _KINDS = ("min", "maxmin", "contour_full", "contour_mod")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}")
        if self.kind.startswith("contour"):
            if not math.isfinite(self.level_a):
                raise ValueError("contour targets need a finite level_a")
            if self.alpha <= 0.0:
                raise ValueError("alpha must be positive")

    @classmethod
    def minimum(cls) -> "FeatureTarget":
        return cls("min")

    @classmethod
    def max_min(cls) -> "FeatureTarget":
        return cls("maxmin")

    @classmethod
    def contour(cls, level_a: float, alpha: float = 2.0, modified: bool = True):
        return cls("contour_mod" if modified else "contour_full", level_a, alpha)


@dataclass(frozen=True)
class BestEstimates:
    """Observed response extremes, the running feature estimates."""

    fmin: float
    fmax: float

    def __post_init__(self):
        if self.fmin > self.fmax:
            raise ValueError("fmin must not exceed fmax")


@dataclass(frozen=True)
class PredBox:
    """Interval bounds on the predictor mean and standard error over a
    rectangle."""

    yhat_lb: float
    yhat_ub: float
    s_lb: float
    s_ub: float

    def __post_init__(self):
        if self.yhat_lb > self.yhat_ub:
            raise ValueError("yhat_lb must not exceed yhat_ub")
        if not 0.0 <= self.s_lb <= self.s_ub:
            raise ValueError("need 0 <= s_lb <= s_ub")

    @property
    def degenerate(self) -> bool:
        return self.yhat_lb == self.yhat_ub and self.s_lb == self.s_ub


def ei_min(yhat, s, fmin):
    """E[max(fmin - Y, 0)]; at s = 0 the deterministic improvement."""
    yhat = np.asarray(yhat, dtype=float)
    s = np.asarray(s, dtype=float)
    diff = fmin - yhat
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(s > 0, diff / np.where(s > 0, s, 1.0), 0.0)
    smooth = s * norm_pdf(u) + diff * norm_cdf(u)
    out = np.where(s > 0, smooth, np.maximum(diff, 0.0))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def ei_maxmin(yhat, s, bests: BestEstimates):
    """E[max(Y - fmax, fmin - Y, 0)]: the sum of the two one-sided EI
    criteria for the maximum and the minimum."""
    yhat = np.asarray(yhat, dtype=float)
    s = np.asarray(s, dtype=float)
    up = yhat - bests.fmax
    dn = bests.fmin - yhat
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(s > 0, s, 1.0)
        u1 = np.where(s > 0, up / safe, 0.0)
        u2 = np.where(s > 0, dn / safe, 0.0)
    smooth = (
        s * norm_pdf(u1) + up * norm_cdf(u1) + s * norm_pdf(u2) + dn * norm_cdf(u2)
    )
    out = np.where(s > 0, smooth, np.maximum(np.maximum(up, dn), 0.0))
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def _phi2_integral(w):
    """Antiderivative of w^2 phi(w): Phi(w) - w phi(w)."""
    return norm_cdf(w) - w * norm_pdf(w)


def ei_contour_full(yhat, s, a, alpha):
    """E[eps^2 - min((Y - a)^2, eps^2)] with eps = alpha*s.

    The quadratic-moment integral is oriented from the smaller to the
    larger limit so the subtracted global-search term is nonnegative.
    """
    yhat = np.asarray(yhat, dtype=float)
    s = np.asarray(s, dtype=float)
    diff = a - yhat
    eps = alpha * s
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(s > 0, s, 1.0)
        u1 = np.where(s > 0, (diff + eps) / safe, 0.0)
        u2 = np.where(s > 0, (diff - eps) / safe, 0.0)
    cdf_term = (eps**2 - diff**2) * (norm_cdf(u1) - norm_cdf(u2))
    pdf_term = -2.0 * diff * s * (norm_pdf(u1) - norm_pdf(u2))
    integral = _phi2_integral(u1) - _phi2_integral(u2)  # u1 >= u2
    out = np.where(s > 0, cdf_term + pdf_term - s**2 * integral, 0.0)
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def ei_contour_mod_ts(t, s, alpha):
    """Modified contour criterion in the (t, s) parameterization:
    s^2 (alpha^2 - t^2)[Phi(t+a) - Phi(t-a)] - 2 t s^2 [phi(t+a) - phi(t-a)].
    """
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    dPhi = norm_cdf(t + alpha) - norm_cdf(t - alpha)
    dphi = norm_pdf(t + alpha) - norm_pdf(t - alpha)
    out = s**2 * ((alpha**2 - t * t) * dPhi - 2.0 * t * dphi)
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def ei_contour_mod(yhat, s, a, alpha):
    """ei_contour_full with the global-search integral dropped; 0 at s = 0."""
    yhat = np.asarray(yhat, dtype=float)
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(s > 0, (a - yhat) / np.where(s > 0, s, 1.0), 0.0)
    out = np.where(s > 0, ei_contour_mod_ts(t, s, alpha), 0.0)
    return float(out) if out.ndim == 0 else out


def d_ei_maxmin(yhat, s, bests: BestEstimates) -> tuple[float, float]:
    """Partials of ei_maxmin: (d/ds, d/dyhat).

    d/ds = phi(u1) + phi(u2) >= 0; d/dyhat = Phi(u1) - Phi(u2), which
    changes sign at yhat = (fmax + fmin)/2.
    """
    if np.any(np.asarray(s) <= 0):
        raise ValueError("derivatives undefined at s = 0")
    yhat = np.asarray(yhat, dtype=float)
    s = np.asarray(s, dtype=float)
    u1 = (yhat - bests.fmax) / s
    u2 = (bests.fmin - yhat) / s
    d_ds = norm_pdf(u1) + norm_pdf(u2)
    d_dyhat = norm_cdf(u1) - norm_cdf(u2)
    if d_ds.ndim == 0:
        return float(d_ds), float(d_dyhat)
    return d_ds, d_dyhat


def d_ei_contour_mod_ts(t, s, alpha) -> tuple:
    """Partials of ei_contour_mod in the (t, s) parameterization: (d/ds, d/dt)."""
    if np.any(np.asarray(s) <= 0):
        raise ValueError("derivatives undefined at s = 0")
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    dPhi = norm_cdf(t + alpha) - norm_cdf(t - alpha)
    dphi = norm_pdf(t + alpha) - norm_pdf(t - alpha)
    sum_phi = norm_pdf(t + alpha) + norm_pdf(t - alpha)
    d_dt = s**2 * (
        -2.0 * t * dPhi + 2.0 * alpha * t * sum_phi + (alpha**2 + t * t - 2.0) * dphi
    )
    d_ds = 2.0 * s * (alpha**2 - t * t) * dPhi - 4.0 * t * s * dphi
    if d_dt.ndim == 0:
        return float(d_ds), float(d_dt)
    return d_ds, d_dt


def d_ei_contour_mod(yhat, s, a, alpha) -> tuple:
    """Partials of ei_contour_mod as (d/ds, d/dt), with t = (a - yhat)/s
    held fixed while differentiating in s."""
    if np.any(np.asarray(s) <= 0):
        raise ValueError("derivatives undefined at s = 0")
    t = (a - np.asarray(yhat, dtype=float)) / np.asarray(s, dtype=float)
    return d_ei_contour_mod_ts(t, s, alpha)


def ei_value(target: FeatureTarget, yhat, s, bests: BestEstimates):
    """Dispatch the pointwise criterion for a feature target."""
    if target.kind == "min":
        return ei_min(yhat, s, bests.fmin)
    if target.kind == "maxmin":
        return ei_maxmin(yhat, s, bests)
    if target.kind == "contour_full":
        return ei_contour_full(yhat, s, target.level_a, target.alpha)
    return ei_contour_mod(yhat, s, target.level_a, target.alpha)


def _t_interval(box: PredBox, a: float) -> tuple[float, float]:
    """Conservative range of t = (a - yhat)/s over the box: min/max of the
    four corner combinations, clipped when s_lb is (near) zero."""
    s_lo = max(box.s_lb, 1e-300)
    corners = []
    for yh in (box.yhat_lb, box.yhat_ub):
        for sv in (s_lo, box.s_ub if box.s_ub > 0 else s_lo):
            corners.append((a - yh) / sv)
    t_lb = max(min(corners), -_T_CLIP)
    t_ub = min(max(corners), _T_CLIP)
    return t_lb, t_ub


def ei_bounds(
    target: FeatureTarget, box: PredBox, bests: BestEstimates
) -> tuple[float, float]:
    """Lower/upper bounds on the criterion over a (yhat, s) box.

    Minimum uses the exact monotone rule; MaxMin uses the conservative
    endpoint rule (its lower bound can exceed the true infimum when the
    midpoint of (fmin, fmax) falls inside the yhat interval); ContourMod
    exploits unimodality in t: the upper bound is taken at the t in the
    interval nearest 0.
    """
    if target.kind == "min":
        lb = ei_min(box.yhat_ub, box.s_lb, bests.fmin)
        ub = ei_min(box.yhat_lb, box.s_ub, bests.fmin)
        return float(lb), float(ub)

    if target.kind == "maxmin":
        lb = min(
            ei_maxmin(box.yhat_lb, box.s_lb, bests),
            ei_maxmin(box.yhat_ub, box.s_lb, bests),
        )
        ub = max(
            ei_maxmin(box.yhat_lb, box.s_ub, bests),
            ei_maxmin(box.yhat_ub, box.s_ub, bests),
        )
        return float(lb), float(ub)

    if target.kind == "contour_mod":
        if box.s_ub == 0.0:
            return 0.0, 0.0
        a, alpha = target.level_a, target.alpha
        t_lb, t_ub = _t_interval(box, a)
        lb = min(
            ei_contour_mod_ts(t_lb, box.s_lb, alpha),
            ei_contour_mod_ts(t_ub, box.s_lb, alpha),
        )
        t_peak = 0.0 if t_lb <= 0.0 <= t_ub else (t_lb if abs(t_lb) < abs(t_ub) else t_ub)
        ub = ei_contour_mod_ts(t_peak, box.s_ub, alpha)
        return float(lb), float(ub)

    raise UnsupportedTargetError(
        "no rectangle bound rule exists for the full contour criterion"
    )
