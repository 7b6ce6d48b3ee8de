"""Storage, GPU memory and power constraints on a deployment vector."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import Catalog, EdgeConfig

# Relative slack on the inclusive comparisons, absorbs summation rounding.
REL_TOL = 1e-9


def as_bits(a, m: int | None = None) -> np.ndarray:
    """Coerce a 0/1 sequence to a boolean vector, checking length against ``m``."""
    bits = np.asarray(a)
    if bits.ndim != 1:
        raise ValueError(f"deployment vector must be 1-D, got shape {bits.shape}")
    if bits.dtype != bool:
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("deployment vector entries must be 0 or 1")
        bits = bits.astype(bool)
    if m is not None and bits.shape[0] != m:
        raise ValueError(f"deployment vector has length {bits.shape[0]}, catalog has {m} models")
    return bits


def bits_str(a) -> str:
    return "".join("1" if b else "0" for b in np.asarray(a, dtype=bool))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    storage_used_gb: float
    storage_cap_gb: float
    gpu_used_gb: float
    gpu_cap_gb: float
    power_used_kw: float
    power_cap_kw: float


def _within(used, cap):
    return used <= cap * (1.0 + REL_TOL)


def check(a, catalog: Catalog, edge: EdgeConfig) -> FeasibilityReport:
    bits = as_bits(a, len(catalog))
    storage = float(catalog.sizes[bits].sum())
    gpu = float(catalog.gpu[bits].sum())
    power = edge.static_kw + float(catalog.energy[bits].sum())
    ok = _within(storage, edge.storage_gb) and _within(gpu, edge.gpu_gb) and _within(power, edge.energy_kw)
    return FeasibilityReport(
        feasible=bool(ok),
        storage_used_gb=storage,
        storage_cap_gb=edge.storage_gb,
        gpu_used_gb=gpu,
        gpu_cap_gb=edge.gpu_gb,
        power_used_kw=power,
        power_cap_kw=edge.energy_kw,
    )


def is_feasible(a, catalog: Catalog, edge: EdgeConfig) -> bool:
    return check(a, catalog, edge).feasible


def feasible_rows(pop: np.ndarray, catalog: Catalog, edge: EdgeConfig) -> np.ndarray:
    """Row-wise feasibility for a (K, M) 0/1 matrix."""
    x = np.asarray(pop, dtype=float)
    return (
        _within(x @ catalog.sizes, edge.storage_gb)
        & _within(x @ catalog.gpu, edge.gpu_gb)
        & _within(edge.static_kw + x @ catalog.energy, edge.energy_kw)
    )
