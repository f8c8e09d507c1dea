"""Genetic-algorithm baseline for maximizing an EI criterion.

Multistart population search: each generation mutates the population,
augments, crosses over the augmented pool, augments again, evaluates the
criterion on every candidate and keeps the best n_init.  Augmentation
before truncation makes the per-generation best monotone (elitism).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from eibnb.criteria import BestEstimates, FeatureTarget, ei_value
from eibnb.gp import GPFit, predict_many
from eibnb.sampling import random_lhd

# Each generation evaluates n_init parents + n_init mutants + 2*n_init
# crossover offspring.
POOL_FACTOR = 4


@dataclass(frozen=True)
class GaConfig:
    n_init: int = 25
    n_generations: int = 5
    n_multistarts: int = 1
    mutation_fraction: float = 0.05
    ei_eval_budget: int = 500
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_init < 1 or self.n_generations < 1 or self.n_multistarts < 1:
            raise ValueError("population, generations and multistarts must be >= 1")
        if not 0.0 < self.mutation_fraction <= 0.05:
            raise ValueError("mutation_fraction must be in (0, 0.05]")
        total = self.n_multistarts * self.n_generations * POOL_FACTOR * self.n_init
        if total > self.ei_eval_budget:
            raise ValueError(
                f"configured evaluations ({total}) exceed budget "
                f"({self.ei_eval_budget})"
            )


@dataclass
class GaGenerationRecord:
    multistart: int
    generation: int
    best_ei: float
    evals_used: int

    CSV_HEADER = ("multistart", "generation", "best_ei", "evals_used")

    def csv_row(self) -> tuple:
        return (self.multistart, self.generation, repr(self.best_ei), self.evals_used)


@dataclass
class GaResult:
    xbest: np.ndarray
    ei_best: float
    trace: list[GaGenerationRecord] = field(default_factory=list)
    evals_used: int = 0


def mutate(
    pop: np.ndarray, rng: np.random.Generator, fraction: float = 0.05
) -> np.ndarray:
    """Multiplicative perturbation of every coordinate by +/- fraction,
    clamped to [0,1].  Coordinates at 0 are fixed points of the scaling."""
    factors = 1.0 + rng.uniform(-fraction, fraction, size=pop.shape)
    return np.clip(pop * factors, 0.0, 1.0)


def crossover(pop: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Swap a random nonempty coordinate subset between random disjoint
    pairs; an odd leftover member passes through unchanged."""
    m, d = pop.shape
    out = pop.copy()
    if m < 2:
        return out
    perm = rng.permutation(m)
    for i in range(0, m - 1, 2):
        a, b = perm[i], perm[i + 1]
        mask = rng.random(d) < 0.5
        if not mask.any():
            mask[rng.integers(d)] = True
        out[a, mask], out[b, mask] = pop[b, mask], pop[a, mask]
    return out


def ga_maximize(
    fit: GPFit,
    target: FeatureTarget,
    bests: BestEstimates,
    config: GaConfig,
) -> GaResult:
    """Run the multistart GA; total EI evaluations never exceed the budget."""
    d = fit.data.dim
    per_generation = POOL_FACTOR * config.n_init
    if per_generation > config.ei_eval_budget:
        raise ValueError("budget too small for a single generation")
    rng = np.random.default_rng(config.rng_seed)

    evals_used = 0
    best_x, best_ei = None, -np.inf
    trace: list[GaGenerationRecord] = []

    for ms in range(config.n_multistarts):
        pop = random_lhd(config.n_init, d, rng)
        for gen in range(config.n_generations):
            if evals_used + per_generation > config.ei_eval_budget:
                break
            aug = np.vstack([pop, mutate(pop, rng, config.mutation_fraction)])
            aug = np.vstack([aug, crossover(aug, rng)])
            yhat, s2 = predict_many(fit, aug)
            ei = np.atleast_1d(
                ei_value(target, yhat, np.sqrt(np.maximum(s2, 0.0)), bests)
            )
            evals_used += aug.shape[0]
            order = np.argsort(-ei, kind="stable")
            pop = aug[order[: config.n_init]]
            gen_best = float(ei[order[0]])
            if gen_best > best_ei:
                best_ei = gen_best
                best_x = aug[order[0]].copy()
            trace.append(GaGenerationRecord(ms, gen, gen_best, evals_used))

    return GaResult(xbest=best_x, ei_best=best_ei, trace=trace, evals_used=evals_used)
