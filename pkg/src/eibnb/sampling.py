"""Latin-hypercube sampling utilities shared by the designs and optimizers."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist


def random_lhd(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Random Latin hypercube on [0,1]^d: one point per axis stratum,
    uniform within the stratum."""
    u = np.empty((n, d))
    for k in range(d):
        u[:, k] = (rng.permutation(n) + rng.random(n)) / n
    return u


def maximin_lhd(
    n: int, d: int, n_candidates: int, rng: np.random.Generator
) -> np.ndarray:
    """Best of ``n_candidates`` random Latin hypercubes by minimum pairwise
    Euclidean distance."""
    if n < 2:
        raise ValueError("maximin design needs n >= 2")
    best, best_dist = None, -np.inf
    for _ in range(n_candidates):
        cand = random_lhd(n, d, rng)
        dist = float(pdist(cand).min())
        if dist > best_dist:
            best, best_dist = cand, dist
    return best


def lhd_in_box(
    lower: np.ndarray, upper: np.ndarray, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Stratified Latin hypercube inside an axis-aligned box."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if n == 1:
        return (0.5 * (lower + upper)).reshape(1, -1)
    u = random_lhd(n, lower.shape[0], rng)
    return lower + u * (upper - lower)
