"""Switching cost, resource cost and the weighted per-slot objective."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .catalog import Catalog, CostWeights, EdgeConfig
from .feasibility import as_bits

BITS_PER_BYTE = 8.0


@dataclass(frozen=True)
class SlotCostBreakdown:
    l1_s: float
    l2_s: float
    l3_s: float
    switching: float
    r1_gb: float
    r2_gb: float
    resource: float
    total: float

    def as_dict(self) -> dict:
        return asdict(self)


ZERO_COST = SlotCostBreakdown(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def check_beta(beta, m: int) -> np.ndarray:
    b = np.asarray(beta, dtype=float)
    if b.shape != (m,):
        raise ValueError(f"beta has shape {b.shape}, expected ({m},)")
    if not (np.isfinite(b).all() and (b > 0).all()):
        raise ValueError("active cycles must be positive and finite")
    return b


def transmission_s(catalog: Catalog, edge: EdgeConfig) -> np.ndarray:
    """Per-model cloud-to-edge transfer time: GB * 8 / Gbps."""
    return catalog.sizes * BITS_PER_BYTE / edge.bandwidth_gbps


def evicted_set(a_prev, a_now) -> set[int]:
    prev = as_bits(a_prev)
    now = as_bits(a_now, prev.shape[0])
    return {int(i) for i in np.flatnonzero(prev & ~now)}


def switching_cost(a_prev, a_now, catalog: Catalog, edge: EdgeConfig, beta) -> tuple[float, float, float, float]:
    """Return ``(l1_s, l2_s, l3_s, switching)`` charged for models evicted between two decisions.

    ``switching`` is the summed delays over the summed active cycles of the
    evicted models, or 0 when nothing is evicted.
    """
    m = len(catalog)
    prev = as_bits(a_prev, m)
    now = as_bits(a_now, m)
    b = check_beta(beta, m)
    ev = prev & ~now
    if not ev.any():
        return 0.0, 0.0, 0.0, 0.0
    l1 = float(transmission_s(catalog, edge)[ev].sum())
    l2 = float(catalog.io_delay[ev].sum())
    l3 = float(catalog.infer_delay[ev].sum())
    return l1, l2, l3, (l1 + l2 + l3) / float(b[ev].sum())


def resource_cost(a_now, catalog: Catalog, weights: CostWeights) -> tuple[float, float, float]:
    now = as_bits(a_now, len(catalog))
    r1 = float(catalog.sizes[now].sum())
    r2 = float(catalog.gpu[now].sum())
    return r1, r2, r1 + weights.w * r2


def slot_cost(a_prev, a_now, catalog: Catalog, edge: EdgeConfig, beta, weights: CostWeights) -> SlotCostBreakdown:
    l1, l2, l3, sw = switching_cost(a_prev, a_now, catalog, edge, beta)
    r1, r2, res = resource_cost(a_now, catalog, weights)
    return SlotCostBreakdown(l1, l2, l3, sw, r1, r2, res, weights.mu_l * sw + weights.mu_r * res)


class BatchCost:
    """Objective values for many candidate decisions sharing one ``a_prev``.

    Used by the solvers; agrees with :func:`slot_cost` row by row.
    """

    def __init__(self, a_prev, catalog: Catalog, edge: EdgeConfig, beta, weights: CostWeights):
        m = len(catalog)
        self.prev = as_bits(a_prev, m)
        self.beta = check_beta(beta, m)
        self.weights = weights
        self.delay = transmission_s(catalog, edge) + catalog.io_delay + catalog.infer_delay
        self.unit_resource = catalog.sizes + weights.w * catalog.gpu

    def __call__(self, pop: np.ndarray) -> np.ndarray:
        now = np.atleast_2d(np.asarray(pop, dtype=bool))
        ev = (self.prev & ~now).astype(float)
        den = ev @ self.beta
        num = ev @ self.delay
        sw = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
        res = now.astype(float) @ self.unit_resource
        return self.weights.mu_l * sw + self.weights.mu_r * res
