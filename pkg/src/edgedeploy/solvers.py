"""Deployment decision makers.

``ga_decide`` is the genetic search over binary deployment vectors,
``brute_force_decide`` the exhaustive oracle used to validate it for small
catalogs, and ``baseline_decide`` the per-miss eviction policies (Rand, FIFO,
LRU, LFU).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .catalog import Catalog, CostWeights, EdgeConfig
from .cost import BatchCost, SlotCostBreakdown, check_beta, slot_cost
from .feasibility import as_bits, feasible_rows, is_feasible

BRUTE_FORCE_MAX_M = 20
BASELINES = ("rand", "fifo", "lru", "lfu")


class SolverError(RuntimeError):
    pass


class OracleGuardError(SolverError):
    """Catalog too large for exhaustive enumeration."""


@dataclass(frozen=True)
class GaParams:
    population_k: int = 50
    max_generations_n: int = 200
    crossover_p1: float = 0.8
    mutation_p2: float = 0.05
    patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.population_k < 2:
            raise ValueError("population_k must be >= 2")
        if self.max_generations_n < 1:
            raise ValueError("max_generations_n must be >= 1")
        if not (0 <= self.crossover_p1 <= 1 and 0 <= self.mutation_p2 <= 1):
            raise ValueError("crossover_p1 and mutation_p2 must lie in [0, 1]")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True, eq=False)
class DecisionContext:
    a_prev: np.ndarray
    beta: np.ndarray
    catalog: Catalog
    edge: EdgeConfig
    weights: CostWeights
    # Models that missed in the triggering slot. Used for tie-breaking and,
    # when force_admit_missed is set, as a hard inclusion constraint.
    missed: tuple[int, ...] = ()
    force_admit_missed: bool = False

    def __post_init__(self):
        m = len(self.catalog)
        object.__setattr__(self, "a_prev", as_bits(self.a_prev, m))
        object.__setattr__(self, "beta", check_beta(self.beta, m))
        missed = tuple(dict.fromkeys(int(i) for i in self.missed))
        if any(not 0 <= i < m for i in missed):
            raise ValueError(f"missed ids must lie in [0, {m})")
        object.__setattr__(self, "missed", missed)

    @property
    def m(self) -> int:
        return len(self.catalog)

    def missed_mask(self) -> np.ndarray:
        mask = np.zeros(self.m, dtype=bool)
        mask[list(self.missed)] = True
        return mask

    def forced_mask(self) -> np.ndarray:
        """Missed models that must be deployed, added greedily while they fit together."""
        mask = np.zeros(self.m, dtype=bool)
        if not self.force_admit_missed:
            return mask
        for i in self.missed:
            mask[i] = True
            if not is_feasible(mask, self.catalog, self.edge):
                mask[i] = False
        return mask

    def cost_fn(self) -> BatchCost:
        return BatchCost(self.a_prev, self.catalog, self.edge, self.beta, self.weights)


def fitness_from_costs(costs: np.ndarray) -> np.ndarray:
    """Squared min-max normalisation; the cheapest individual scores 1, the dearest 0."""
    c_max, c_min = costs.max(), costs.min()
    if c_max == c_min:
        return np.ones_like(costs)
    return ((c_max - costs) / (c_max - c_min)) ** 2


def repair(pop: np.ndarray, catalog: Catalog, edge: EdgeConfig, rng: np.random.Generator,
           locked: np.ndarray | None = None) -> np.ndarray:
    """Clear random set bits of infeasible rows (in place) until every row is feasible.

    Bits set in ``locked`` are never cleared; the locked set itself must be feasible.
    """
    bad = np.flatnonzero(~feasible_rows(pop, catalog, edge))
    for k in bad:
        row = pop[k]
        free = np.flatnonzero(row & ~locked) if locked is not None else np.flatnonzero(row)
        rng.shuffle(free)
        for i in free:
            row[i] = False
            if is_feasible(row, catalog, edge):
                break
        else:
            if not is_feasible(row, catalog, edge):
                raise SolverError("locked models alone violate the edge budgets")
    return pop


def _best_index(costs: np.ndarray, coverage: np.ndarray) -> int:
    # lowest cost, then most missed models retained, then lowest index
    return int(np.lexsort((-coverage, costs))[0])


GenerationObserver = Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]


def ga_decide(ctx: DecisionContext, params: GaParams = GaParams(),
              observer: GenerationObserver | None = None) -> tuple[np.ndarray, SlotCostBreakdown, int]:
    """Genetic search for the cheapest feasible deployment vector.

    Every individual is kept feasible by :func:`repair`. Selection is
    roulette-wheel on the squared normalised fitness, followed by single-point
    crossover with probability ``crossover_p1`` and per-gene flips with
    probability ``mutation_p2``; the best individual so far survives unchanged.
    Stops after ``max_generations_n`` generations or once the best cost has
    not improved for ``patience`` generations.

    ``observer(generation, population, costs, fitness)`` is called once per
    generation, generation 0 being the initial population.

    Returns the decision, its cost breakdown and the number of generations run.
    """
    rng = np.random.default_rng(params.seed)
    k, m = params.population_k, ctx.m
    catalog, edge = ctx.catalog, ctx.edge
    locked = ctx.forced_mask()
    missed = ctx.missed_mask().astype(float)
    cost_fn = ctx.cost_fn()

    pop = ctx.a_prev[None, :] ^ (rng.random((k, m)) < 0.5)
    pop[0] = ctx.a_prev
    pop |= locked
    repair(pop, catalog, edge, rng, locked)
    costs = cost_fn(pop)
    fitness = fitness_from_costs(costs)
    if observer:
        observer(0, pop.copy(), costs.copy(), fitness.copy())

    i = _best_index(costs, pop @ missed)
    best, best_cost, best_cov = pop[i].copy(), costs[i], float(pop[i] @ missed)

    stall = 0
    gen = 0
    while gen < params.max_generations_n:
        gen += 1
        parents = pop[rng.choice(k, size=k, p=fitness / fitness.sum())]
        children = parents.copy()
        if m > 1:
            for j in range(0, k - 1, 2):
                if rng.random() < params.crossover_p1:
                    cut = rng.integers(1, m)
                    children[j, cut:] = parents[j + 1, cut:]
                    children[j + 1, cut:] = parents[j, cut:]
        children ^= rng.random((k, m)) < params.mutation_p2
        children |= locked
        repair(children, catalog, edge, rng, locked)
        children[0] = best

        pop = children
        costs = cost_fn(pop)
        fitness = fitness_from_costs(costs)
        if observer:
            observer(gen, pop.copy(), costs.copy(), fitness.copy())

        cov = pop @ missed
        i = _best_index(costs, cov)
        if costs[i] < best_cost or (costs[i] == best_cost and cov[i] > best_cov):
            best, best_cost, best_cov = pop[i].copy(), costs[i], float(cov[i])
            stall = 0
        else:
            stall += 1
            if stall >= params.patience:
                break

    return best, slot_cost(ctx.a_prev, best, catalog, edge, ctx.beta, ctx.weights), gen


def enumerate_vectors(m: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows are the binary numbers ``start..stop-1``; column 0 is the most significant bit."""
    stop = 2 ** m if stop is None else stop
    n = np.arange(start, stop, dtype=np.int64)
    return ((n[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(bool)


def brute_force_decide(ctx: DecisionContext, chunk: int = 1 << 16) -> tuple[np.ndarray, SlotCostBreakdown]:
    """Exact argmin of the slot objective over all feasible vectors.

    Ties go to the smallest binary value of the bit string.
    """
    m = ctx.m
    if m > BRUTE_FORCE_MAX_M:
        raise OracleGuardError(f"brute force limited to {BRUTE_FORCE_MAX_M} models, catalog has {m}")
    cost_fn = ctx.cost_fn()
    locked = ctx.forced_mask()
    best, best_cost = None, np.inf
    for start in range(0, 2 ** m, chunk):
        rows = enumerate_vectors(m, start, min(start + chunk, 2 ** m))
        ok = feasible_rows(rows, ctx.catalog, ctx.edge) & (rows | ~locked).all(axis=1)
        if not ok.any():
            continue
        rows = rows[ok]
        costs = cost_fn(rows)
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best, best_cost = rows[i].copy(), costs[i]
    if best is None:
        raise SolverError("no feasible deployment vector")
    return best, slot_cost(ctx.a_prev, best, ctx.catalog, ctx.edge, ctx.beta, ctx.weights)


@dataclass
class PolicyState:
    deployed: set[int] = field(default_factory=set)
    fifo_order: dict[int, int] = field(default_factory=dict)
    last_access: dict[int, int] = field(default_factory=dict)
    freq: dict[int, int] = field(default_factory=dict)
    admissions: int = 0

    def record_request(self, model: int, index: int) -> None:
        self.last_access[model] = index
        self.freq[model] = self.freq.get(model, 0) + 1

    def vector(self, m: int) -> np.ndarray:
        a = np.zeros(m, dtype=bool)
        a[sorted(self.deployed)] = True
        return a


def _pick_victim(policy: str, state: PolicyState, candidates: list[int], rng) -> int:
    if policy == "rand":
        return int(rng.choice(candidates))
    if policy == "fifo":
        return min(candidates, key=lambda i: (state.fifo_order[i], i))
    if policy == "lru":
        return min(candidates, key=lambda i: (state.last_access.get(i, -1), i))
    if policy == "lfu":
        return min(candidates, key=lambda i: (state.freq.get(i, 0), state.last_access.get(i, -1), i))
    raise ValueError(f"unknown baseline policy {policy!r}")


def baseline_decide(policy: str, state: PolicyState, missed_model: int, ctx: DecisionContext,
                    rng: np.random.Generator | None = None) -> PolicyState:
    """Admit ``missed_model``, evicting victims one at a time until the budgets hold.

    A model that cannot fit even on an empty edge is served on demand and the
    state is left untouched. ``state`` is updated in place and returned.
    """
    if policy not in BASELINES:
        raise ValueError(f"unknown baseline policy {policy!r}")
    m = ctx.m
    if not 0 <= missed_model < m:
        raise ValueError(f"model id {missed_model} out of range for {m} models")
    if missed_model in state.deployed:
        raise ValueError(f"model {missed_model} is already deployed")
    if policy == "rand" and rng is None:
        raise ValueError("rand policy needs an rng")

    alone = np.zeros(m, dtype=bool)
    alone[missed_model] = True
    if not is_feasible(alone, ctx.catalog, ctx.edge):
        return state

    state.deployed.add(missed_model)
    state.fifo_order[missed_model] = state.admissions
    state.admissions += 1
    while not is_feasible(state.vector(m), ctx.catalog, ctx.edge):
        candidates = sorted(state.deployed - {missed_model})
        victim = _pick_victim(policy, state, candidates, rng)
        state.deployed.discard(victim)
        state.fifo_order.pop(victim, None)
    return state


def sample_context(rng: np.random.Generator, catalog: Catalog, edge: EdgeConfig, weights: CostWeights,
                   rate_range: tuple[float, float] = (0.05, 2.0),
                   a_prev: Sequence[int] | None = None, beta: Sequence[float] | None = None) -> DecisionContext:
    """Random decision context: a feasible incumbent and active cycles from random rates."""
    m = len(catalog)
    if a_prev is None:
        prev = rng.random((1, m)) < 0.5
        repair(prev, catalog, edge, rng)
        a_prev = prev[0]
    if beta is None:
        beta = 1.0 / rng.uniform(*rate_range, size=m)
    return DecisionContext(np.asarray(a_prev), np.asarray(beta, dtype=float), catalog, edge, weights)
