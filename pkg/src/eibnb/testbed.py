"""Test functions on the unit cube, discretized contours, and grid oracles.

All functions take inputs in [0,1]^d and rescale internally to the native
box of each benchmark.  Points outside the unit cube are rejected, never
clamped, so the caller is forced to be explicit about its domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

CONTOUR_TOL = 1e-8


class DomainError(ValueError):
    """Input point lies outside the unit cube."""


class LevelNotAttainedError(ValueError):
    """Requested contour level is outside the function's observed range."""


@dataclass(frozen=True)
class TestFunction:
    """A deterministic simulator stand-in defined on [0,1]^d.

    ``native_eval`` operates on the original (unscaled) coordinates;
    ``__call__`` validates unit-cube membership, maps affinely to
    ``native_box``, and evaluates.
    """

    name: str
    dim: int
    native_box: tuple[tuple[float, float], ...]
    native_eval: Callable[[np.ndarray], np.ndarray]

    def to_native(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo = np.array([b[0] for b in self.native_box])
        hi = np.array([b[1] for b in self.native_box])
        return lo + x * (hi - lo)

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate at one point (shape (d,)) or a batch (shape (m, d))."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = np.atleast_2d(x)
        if pts.shape[1] != self.dim:
            raise DomainError(
                f"{self.name}: expected dimension {self.dim}, got {pts.shape[1]}"
            )
        if np.any(pts < 0.0) or np.any(pts > 1.0):
            raise DomainError(f"{self.name}: input outside [0,1]^{self.dim}")
        vals = self.native_eval(self.to_native(pts))
        return float(vals[0]) if single else vals


def _branin_native(p: np.ndarray) -> np.ndarray:
    x1, x2 = p[:, 0], p[:, 1]
    return (
        (x2 - 5.1 * x1**2 / (4 * np.pi**2) + 5 * x1 / np.pi - 6) ** 2
        + 10 * (1 - 1 / (8 * np.pi)) * np.cos(x1)
        + 10
    )


def branin_function() -> TestFunction:
    """Branin on [0,5]^2, rescaled to the unit square."""
    return TestFunction(
        name="branin",
        dim=2,
        native_box=((0.0, 5.0), (0.0, 5.0)),
        native_eval=_branin_native,
    )


# Final-term constant in the Levy function; with 1 the global minimum is
# exactly 0 at w = 1 (all coordinates 0.55 on the unit cube).
LEVY_FINAL_TERM_CONSTANT = 1.0


def _sinpi(w: np.ndarray) -> np.ndarray:
    """sin(pi * w) with argument reduction so integer w gives exactly 0."""
    k = np.round(w)
    return np.where(k % 2 == 0, 1.0, -1.0) * np.sin(np.pi * (w - k))


def _levy_native(p: np.ndarray) -> np.ndarray:
    w = 1 + (p - 1) / 4
    head = _sinpi(w[:, 0]) ** 2
    mid = np.sum(
        (w[:, :-1] - 1) ** 2 * (1 + 10 * np.sin(np.pi * w[:, :-1] + 1) ** 2),
        axis=1,
    )
    tail = (w[:, -1] - LEVY_FINAL_TERM_CONSTANT) ** 2
    return head + mid + tail


def levy_function(dim: int) -> TestFunction:
    """Levy on [-10,10]^d, rescaled to the unit cube; requires d >= 2."""
    if dim < 2:
        raise ValueError(f"levy requires dim >= 2, got {dim}")
    return TestFunction(
        name=f"levy{dim}d",
        dim=dim,
        native_box=tuple(((-10.0, 10.0),) * dim),
        native_eval=_levy_native,
    )


def _bisect_on_segment(
    f: TestFunction, a: float, p_lo: np.ndarray, p_hi: np.ndarray, tol: float
) -> np.ndarray | None:
    """Root of f - a on the segment [p_lo, p_hi], assuming a sign change."""
    f_lo = f(p_lo) - a
    f_hi = f(p_hi) - a
    if f_lo == 0.0:
        return p_lo
    if f_hi == 0.0:
        return p_hi
    if np.sign(f_lo) == np.sign(f_hi):
        return None
    lo, hi = p_lo.copy(), p_hi.copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid) - a
        if abs(f_mid) <= tol:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return mid if abs(f(mid) - a) <= tol else None


def discretize_contour(
    f: TestFunction,
    a: float,
    resolution: int = 201,
    tol: float = CONTOUR_TOL,
    rng: np.random.Generator | None = None,
    n_points: int = 500,
) -> np.ndarray:
    """Points on the level set {x : f(x) = a}, each within ``tol`` of it.

    d = 2: locate sign changes of f - a along the edges of a
    resolution x resolution grid and refine each crossing by bisection.
    d > 2: draw random segments between sampled points with opposite
    signs of f - a and bisect along each (1-D line search).
    """
    if f.dim == 2:
        axes = np.linspace(0.0, 1.0, resolution)
        g1, g2 = np.meshgrid(axes, axes, indexing="ij")
        pts = np.column_stack([g1.ravel(), g2.ravel()])
        vals = (f(pts) - a).reshape(resolution, resolution)
        found = []
        sign = np.sign(vals)
        # horizontal edges: (i, j) - (i+1, j); vertical: (i, j) - (i, j+1)
        for (di, dj) in ((1, 0), (0, 1)):
            s0 = sign[: resolution - di, : resolution - dj]
            s1 = sign[di:, dj:]
            ii, jj = np.nonzero((s0 * s1 < 0) | (s0 == 0))
            for i, j in zip(ii, jj):
                p_lo = np.array([axes[i], axes[j]])
                p_hi = np.array([axes[i + di], axes[j + dj]])
                root = _bisect_on_segment(f, a, p_lo, p_hi, tol)
                if root is not None:
                    found.append(root)
        if not found:
            raise LevelNotAttainedError(
                f"{f.name}: no grid edge crosses level {a}"
            )
        return np.array(found)

    rng = rng if rng is not None else np.random.default_rng(0)
    cand = rng.random((max(4 * n_points, 4000), f.dim))
    vals = f(cand) - a
    neg = cand[vals < 0]
    pos = cand[vals > 0]
    if len(neg) == 0 or len(pos) == 0:
        raise LevelNotAttainedError(
            f"{f.name}: level {a} not bracketed by {len(cand)} samples"
        )
    found = []
    for k in range(n_points):
        p_lo = neg[rng.integers(len(neg))]
        p_hi = pos[rng.integers(len(pos))]
        root = _bisect_on_segment(f, a, p_lo, p_hi, tol)
        if root is not None:
            found.append(root)
    if not found:
        raise LevelNotAttainedError(f"{f.name}: refinement found no point at {a}")
    return np.array(found)


def grid_feature_oracle(
    f: TestFunction, feature: str, resolution: int
) -> tuple[float, np.ndarray]:
    """Brute-force extremum over the tensor grid.

    ``feature`` is "min" or "max".  Ties break to the lexicographically
    smallest grid index (numpy's first occurrence in C order).
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if feature not in ("min", "max"):
        raise ValueError(f"feature must be 'min' or 'max', got {feature!r}")
    axes = [np.linspace(0.0, 1.0, resolution)] * f.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    vals = f(pts)
    idx = int(np.argmin(vals) if feature == "min" else np.argmax(vals))
    return float(vals[idx]), pts[idx].copy()


def sampled_feature_oracle(
    f: TestFunction, feature: str, n_points: int, rng: np.random.Generator
) -> tuple[float, np.ndarray]:
    """Extremum over a random space-filling sample; refines grid oracles in
    dimensions where a dense tensor grid is infeasible."""
    if feature not in ("min", "max"):
        raise ValueError(f"feature must be 'min' or 'max', got {feature!r}")
    best_val = np.inf if feature == "min" else -np.inf
    best_pt = np.full(f.dim, np.nan)
    chunk = 200_000
    remaining = n_points
    while remaining > 0:
        m = min(chunk, remaining)
        pts = rng.random((m, f.dim))
        vals = f(pts)
        idx = int(np.argmin(vals) if feature == "min" else np.argmax(vals))
        if (feature == "min" and vals[idx] < best_val) or (
            feature == "max" and vals[idx] > best_val
        ):
            best_val = float(vals[idx])
            best_pt = pts[idx].copy()
        remaining -= m
    return best_val, best_pt
