import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edgedeploy.catalog import Catalog, EdgeConfig, sample_catalog
from edgedeploy.feasibility import check, feasible_rows

from oracles import catalog_dicts, naive_feasible

EDGE = EdgeConfig(120, 12, 1, 0.3, 10)


def one(size, gpu, energy=0.1):
    return dict(size_gb=size, gpu_mem_gb=gpu, energy_kw=energy, io_delay_s=1, infer_delay_s=1)


def test_empty_deployment():
    cat = sample_catalog(5, seed=1)
    rep = check([0] * 5, cat, EDGE)
    assert rep.feasible
    assert rep.power_used_kw == 0.3
    assert rep.storage_used_gb == rep.gpu_used_gb == 0


def test_energy_violation():
    cat = Catalog.from_records([one(2, 1, 0.5), one(2, 1, 0.5)])
    rep = check([1, 1], cat, EDGE)
    assert not rep.feasible
    assert rep.power_used_kw == pytest.approx(1.3)


def test_boundary_is_inclusive():
    cat = Catalog.from_records([one(10, 2)])
    rep = check([1], cat, EdgeConfig(10, 2, 1, 0.3, 10))
    assert rep.feasible


def test_boundary_rounding_tolerated():
    cat = Catalog.from_records([one(0.1, 1), one(0.2, 1)])
    # 0.1 + 0.2 != 0.3 in floating point
    assert check([1, 1], cat, EdgeConfig(0.3, 2, 1, 0.3, 10)).feasible


def test_length_mismatch():
    with pytest.raises(ValueError):
        check([1, 0], sample_catalog(3, seed=0), EDGE)


def test_report_fields():
    cat = sample_catalog(4, seed=3)
    rep = check([1, 0, 1, 0], cat, EDGE)
    assert rep.storage_used_gb == pytest.approx(cat[0].size_gb + cat[2].size_gb)
    assert rep.gpu_used_gb == pytest.approx(cat[0].gpu_mem_gb + cat[2].gpu_mem_gb)
    assert (rep.storage_cap_gb, rep.gpu_cap_gb, rep.power_cap_kw) == (120, 12, 1)
    assert rep.feasible == (rep.storage_used_gb <= 120 and rep.gpu_used_gb <= 12 and rep.power_used_kw <= 1)


bits8 = st.lists(st.booleans(), min_size=8, max_size=8)


@settings(max_examples=200, deadline=None)
@given(bits=bits8, seed=st.integers(0, 2**16))
def test_matches_naive_and_rows(bits, seed):
    cat = sample_catalog(8, seed=seed)
    expected = naive_feasible(bits, catalog_dicts(cat), 120, 12, 1, 0.3)
    assert check(bits, cat, EDGE).feasible == expected
    assert feasible_rows(np.array([bits]), cat, EDGE)[0] == expected


@settings(max_examples=200, deadline=None)
@given(bits=bits8, seed=st.integers(0, 2**16), drop=st.integers(0, 7))
def test_clearing_a_bit_keeps_feasibility(bits, seed, drop):
    cat = sample_catalog(8, seed=seed)
    if check(bits, cat, EDGE).feasible:
        cleared = list(bits)
        cleared[drop] = False
        assert check(cleared, cat, EDGE).feasible


@settings(max_examples=100, deadline=None)
@given(bits=bits8, seed=st.integers(0, 2**16), perm=st.permutations(range(8)))
def test_order_independent(bits, seed, perm):
    cat = sample_catalog(8, seed=seed)
    recs = cat.to_records()
    shuffled = Catalog.from_records([recs[i] for i in perm])
    a = check(bits, cat, EDGE)
    b = check([bits[i] for i in perm], shuffled, EDGE)
    assert a.feasible == b.feasible
    assert a.storage_used_gb == pytest.approx(b.storage_used_gb)
    assert a.power_used_kw == pytest.approx(b.power_used_kw)
