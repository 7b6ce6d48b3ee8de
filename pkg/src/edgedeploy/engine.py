"""Time-slotted simulation of one edge server under a deployment policy."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import Scenario
from .cost import SlotCostBreakdown, slot_cost, transmission_s
from .feasibility import bits_str, is_feasible
from .solvers import (BASELINES, BRUTE_FORCE_MAX_M, DecisionContext, GaParams, OracleGuardError,
                      PolicyState, SolverError, baseline_decide, brute_force_decide, ga_decide)
from .workload import ActiveCycleEstimator, RequestTrace, derive_rng, derive_seed, oracle_beta

POLICIES = ("ga", "brute", *BASELINES)
BETA_MODES = ("estimated", "oracle")
SLOT_CSV_COLUMNS = ("slot", "policy", "decision_bits", "l1_s", "l2_s", "l3_s", "switching",
                    "r1_gb", "r2_gb", "resource", "total", "misses", "evictions")


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    decision: str
    cost: SlotCostBreakdown
    requests: int
    misses: int
    evictions: int
    admissions: int
    service_delay_s: float


@dataclass(frozen=True)
class SummaryMetrics:
    avg_cost: float
    miss_rate: float
    avg_service_delay_s: float
    evictions: int
    admissions: int
    requests: int
    slots: int

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimulationRun:
    policy: str
    beta_mode: str
    trace: RequestTrace
    per_slot: tuple[SlotRecord, ...]
    metrics: SummaryMetrics


def _summarize(records: Sequence[SlotRecord]) -> SummaryMetrics:
    n_req = sum(r.requests for r in records)
    n_miss = sum(r.misses for r in records)
    delay = sum(r.service_delay_s for r in records)
    return SummaryMetrics(
        avg_cost=sum(r.cost.total for r in records) / len(records),
        miss_rate=n_miss / n_req if n_req else 0.0,
        avg_service_delay_s=delay / n_req if n_req else 0.0,
        evictions=sum(r.evictions for r in records),
        admissions=sum(r.admissions for r in records),
        requests=n_req,
        slots=len(records),
    )


def run(scenario: Scenario, trace: RequestTrace, policy: str, params: GaParams | None = None,
        seed: int = 0, beta_mode: str = "estimated", force_admit_missed: bool = False,
        smoothing: float = 1.0) -> SimulationRun:
    """Simulate ``trace`` slot by slot starting from an empty edge.

    Every request is served against the deployment in force when it arrives:
    a hit costs the inference delay, a miss adds the cloud transfer and
    preloading delay. Baseline policies react to each miss immediately; the
    ``ga`` and ``brute`` policies take one decision at the end of any slot
    that had a miss. The slot objective is charged on the transition between
    consecutive end-of-slot deployments.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    if beta_mode not in BETA_MODES:
        raise ValueError(f"unknown beta mode {beta_mode!r}")
    catalog, edge, weights = scenario.catalog, scenario.edge, scenario.weights
    m = len(catalog)
    if trace.n_models != m:
        raise ValueError(f"trace covers {trace.n_models} models, scenario has {m}")
    if policy == "brute" and m > BRUTE_FORCE_MAX_M:
        raise OracleGuardError(f"brute force limited to {BRUTE_FORCE_MAX_M} models, scenario has {m}")
    params = params or GaParams()

    miss_delay = transmission_s(catalog, edge) + catalog.io_delay + catalog.infer_delay
    hit_delay = catalog.infer_delay
    oracle = oracle_beta(trace.rates) if beta_mode == "oracle" else None
    est = ActiveCycleEstimator.fresh(m, smoothing)
    state = PolicyState()
    rand_rng = derive_rng(seed, 1)

    a_prev = np.zeros(m, dtype=bool)
    records = []
    req_index = 0
    for t, reqs in enumerate(trace.slots):
        beta = oracle if oracle is not None else est.estimate()
        ctx = DecisionContext(a_prev, beta, catalog, edge, weights)
        misses = 0
        delay = 0.0
        missed_ids = []
        if policy in BASELINES:
            for r in reqs:
                state.record_request(r, req_index)
                req_index += 1
                if r in state.deployed:
                    delay += hit_delay[r]
                else:
                    misses += 1
                    delay += miss_delay[r]
                    baseline_decide(policy, state, r, ctx, rand_rng)
            a_now = state.vector(m)
        else:
            for r in reqs:
                if a_prev[r]:
                    delay += hit_delay[r]
                else:
                    misses += 1
                    delay += miss_delay[r]
                    missed_ids.append(r)
            if misses:
                ctx = replace(ctx, missed=tuple(missed_ids), force_admit_missed=force_admit_missed)
                if policy == "ga":
                    slot_params = replace(params, seed=derive_seed(seed, params.seed, t))
                    a_now, _, _ = ga_decide(ctx, slot_params)
                else:
                    a_now, _ = brute_force_decide(ctx)
            else:
                a_now = a_prev.copy()

        if not is_feasible(a_now, catalog, edge):
            raise SolverError(f"{policy} produced an infeasible deployment in slot {t}")
        cost = slot_cost(a_prev, a_now, catalog, edge, beta, weights)
        records.append(SlotRecord(
            slot=t + 1,
            decision=bits_str(a_now),
            cost=cost,
            requests=len(reqs),
            misses=misses,
            evictions=int((a_prev & ~a_now).sum()),
            admissions=int((a_now & ~a_prev).sum()),
            service_delay_s=float(delay),
        ))
        est = est.observe(reqs)
        a_prev = a_now

    return SimulationRun(policy, beta_mode, trace, tuple(records), _summarize(records))


def compare(scenario: Scenario, trace: RequestTrace, policies: Sequence[str], params: GaParams | None = None,
            seed: int = 0, **kwargs) -> list[SimulationRun]:
    """Run every policy against the same trace; one run per entry, in order."""
    if not policies:
        raise ValueError("need at least one policy")
    return [run(scenario, trace, p, params, seed, **kwargs) for p in policies]


def write_slot_csv(runs: Sequence[SimulationRun], path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SLOT_CSV_COLUMNS)
        for r in runs:
            for rec in r.per_slot:
                c = rec.cost
                writer.writerow([rec.slot, r.policy, rec.decision, c.l1_s, c.l2_s, c.l3_s, c.switching,
                                 c.r1_gb, c.r2_gb, c.resource, c.total, rec.misses, rec.evictions])
    return path


def summary_rows(runs: Sequence[SimulationRun]) -> list[dict]:
    return [{"policy": r.policy, "beta_mode": r.beta_mode, **r.metrics.as_dict()} for r in runs]


def write_summary_json(runs: Sequence[SimulationRun], path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(summary_rows(runs), indent=2) + "\n")
    return path
