import csv
import json

import numpy as np
import pytest

from edgedeploy.catalog import Catalog, CostWeights, EdgeConfig, Scenario, sample_catalog
from edgedeploy.engine import (POLICIES, SLOT_CSV_COLUMNS, compare, run, write_slot_csv, write_summary_json)
from edgedeploy.feasibility import is_feasible
from edgedeploy.solvers import GaParams, OracleGuardError
from edgedeploy.workload import RequestTrace, generate_trace, load_trace, save_trace, zipf_rates


@pytest.fixture(scope="module")
def reference():
    return Scenario(sample_catalog(10, seed=2024), EdgeConfig(120, 12, 1, 0.3, 10), CostWeights())


@pytest.fixture(scope="module")
def trace():
    return generate_trace(zipf_rates(10, 5.0), 100, seed=17)


@pytest.fixture(scope="module")
def all_runs(reference, trace):
    return {r.policy: r for r in compare(reference, trace, POLICIES, seed=3)}


def single_model():
    cat = Catalog.from_records([dict(name="sd", size_gb=38, gpu_mem_gb=2.58, energy_kw=0.2, io_delay_s=20,
                                     infer_delay_s=3)])
    return Scenario(cat, EdgeConfig(120, 12, 1, 0.3, 10), CostWeights(1, 1, 0))


@pytest.mark.parametrize("policy", POLICIES)
def test_empty_trace(reference, policy):
    tr = generate_trace([0.0] * 10, 20, seed=0)
    r = run(reference, tr, policy)
    assert r.metrics.avg_cost == 0 and r.metrics.miss_rate == 0
    assert all(rec.decision == "0" * 10 for rec in r.per_slot)


def test_single_model_kept_under_zero_resource_weight():
    tr = RequestTrace(tuple((0,) for _ in range(30)), (1.0,))
    r = run(single_model(), tr, "ga", seed=5)
    assert r.per_slot[0].slot == 1 and r.per_slot[0].decision == "1"
    assert all(rec.decision == "1" for rec in r.per_slot)
    assert r.metrics.miss_rate == pytest.approx(1 / 30)
    assert r.metrics.admissions == 1 and r.metrics.evictions == 0
    assert r.metrics.avg_cost == 0


def test_service_delay_accounting():
    sc = single_model()
    tr = RequestTrace(((0, 0), (0,)), (1.0,))
    r = run(sc, tr, "lru")
    # first request misses (38*8/10 + 20 + 3), the rest hit (3)
    assert r.metrics.avg_service_delay_s == pytest.approx((30.4 + 20 + 3 + 3 + 3) / 3)
    g = run(sc, tr, "ga")
    # the GA decides at slot end, so both slot-1 requests miss
    assert g.metrics.avg_service_delay_s == pytest.approx((2 * 53.4 + 3) / 3)


def test_ga_beats_baselines(all_runs):
    ga = all_runs["ga"].metrics.avg_cost
    for p in ("rand", "fifo", "lru", "lfu"):
        assert ga < all_runs[p].metrics.avg_cost


def test_oracle_dominance(all_runs):
    worst = max(all_runs[p].metrics.avg_cost for p in ("rand", "fifo", "lru", "lfu"))
    assert all_runs["brute"].metrics.avg_cost <= all_runs["ga"].metrics.avg_cost <= worst


def test_every_slot_feasible_and_consistent(reference, all_runs):
    for r in all_runs.values():
        assert len(r.per_slot) == 100
        for rec in r.per_slot:
            assert is_feasible([c == "1" for c in rec.decision], reference.catalog, reference.edge)
        totals = [rec.cost.total for rec in r.per_slot]
        assert r.metrics.avg_cost == pytest.approx(np.mean(totals), rel=1e-12)
        assert 0 <= r.metrics.miss_rate <= 1


def test_forced_admission_keeps_missed_models(reference, trace):
    r = run(reference, trace, "ga", force_admit_missed=True, seed=1)
    for rec, reqs in zip(r.per_slot, trace.slots):
        if rec.misses:
            assert any(rec.decision[m] == "1" for m in reqs)


def test_compare_rows(reference, trace):
    one = compare(reference, trace, ["ga"], seed=2)
    assert one[0].metrics == run(reference, trace, "ga", seed=2).metrics
    twice = compare(reference, trace, ["lfu", "lfu"])
    assert twice[0].metrics == twice[1].metrics
    with pytest.raises(ValueError):
        compare(reference, trace, [])


def test_replay_is_bit_identical(tmp_path, reference, trace):
    p = save_trace(trace, tmp_path / "trace.json")
    a = compare(reference, trace, ["ga", "rand"], GaParams(seed=4), seed=9)
    b = compare(reference, load_trace(p), ["ga", "rand"], GaParams(seed=4), seed=9)
    assert [x.per_slot for x in a] == [x.per_slot for x in b]
    write_slot_csv(a, tmp_path / "a.csv")
    write_slot_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_oracle_beta_mode(reference, trace):
    r = run(reference, trace, "ga", beta_mode="oracle")
    assert r.beta_mode == "oracle"
    with pytest.raises(ValueError):
        run(reference, generate_trace([0.0] + [1.0] * 9, 5, seed=0), "ga", beta_mode="oracle")


def test_errors(reference, trace):
    with pytest.raises(ValueError):
        run(reference, trace, "mru")
    with pytest.raises(ValueError):
        run(reference, generate_trace([1.0] * 3, 5, seed=0), "ga")
    big = Scenario(sample_catalog(25, seed=0), EdgeConfig(120, 12, 1, 0.3, 10))
    with pytest.raises(OracleGuardError):
        run(big, generate_trace([0.1] * 25, 5, seed=0), "brute")


def test_exports(tmp_path, all_runs):
    runs = list(all_runs.values())
    p = write_slot_csv(runs, tmp_path / "slots.csv")
    with p.open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == SLOT_CSV_COLUMNS
    assert len(rows) == 1 + 100 * len(runs)
    s = json.loads(write_summary_json(runs, tmp_path / "summary.json").read_text())
    assert [r["policy"] for r in s] == list(all_runs)
    assert set(s[0]) >= {"avg_cost", "miss_rate", "avg_service_delay_s", "evictions", "admissions"}
