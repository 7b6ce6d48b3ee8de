"""Poisson request traces and active-cycle estimation."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np


def derive_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, stream...)``; insensitive to call order."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def derive_seed(seed: int, *stream: int) -> int:
    return int(np.random.SeedSequence([int(seed), *map(int, stream)]).generate_state(1, np.uint32)[0])


@dataclass(frozen=True)
class RequestTrace:
    slots: tuple[tuple[int, ...], ...]
    rates: tuple[float, ...]
    seed: int | None = None

    def __post_init__(self):
        if len(self.slots) < 1:
            raise ValueError("trace needs at least one slot")
        m = len(self.rates)
        for t, reqs in enumerate(self.slots):
            for r in reqs:
                if not 0 <= r < m:
                    raise ValueError(f"slot {t}: model id {r} out of range for {m} models")

    @property
    def t_slots(self) -> int:
        return len(self.slots)

    @property
    def n_models(self) -> int:
        return len(self.rates)

    @property
    def n_requests(self) -> int:
        return sum(len(s) for s in self.slots)

    def truncated(self, t_slots: int) -> "RequestTrace":
        return replace(self, slots=self.slots[:t_slots])

    def to_dict(self) -> dict:
        return {"rates": list(self.rates), "seed": self.seed, "slots": [list(s) for s in self.slots]}

    @classmethod
    def from_dict(cls, doc: dict) -> "RequestTrace":
        unknown = set(doc) - {"rates", "seed", "slots"}
        if unknown:
            raise ValueError(f"trace has unknown keys {sorted(unknown)}")
        return cls(
            slots=tuple(tuple(int(r) for r in s) for s in doc["slots"]),
            rates=tuple(float(r) for r in doc["rates"]),
            seed=doc.get("seed"),
        )


def trace_json(trace: RequestTrace) -> str:
    return json.dumps(trace.to_dict(), separators=(",", ":")) + "\n"


def save_trace(trace: RequestTrace, path) -> Path:
    path = Path(path)
    path.write_text(trace_json(trace))
    return path


def load_trace(path) -> RequestTrace:
    return RequestTrace.from_dict(json.loads(Path(path).read_text()))


def uniform_rates(m: int, total_rate: float) -> tuple[float, ...]:
    return tuple([total_rate / m] * m)


def zipf_rates(m: int, total_rate: float, exponent: float = 1.0) -> tuple[float, ...]:
    """Popularity-skewed rates: model k gets weight 1/(k+1)**exponent, scaled to ``total_rate``."""
    if m < 1 or total_rate < 0 or exponent < 0:
        raise ValueError("need m >= 1, total_rate >= 0, exponent >= 0")
    w = 1.0 / np.arange(1, m + 1, dtype=float) ** exponent
    return tuple(float(x) for x in total_rate * w / w.sum())


def generate_trace(rates: Sequence[float], t_slots: int, seed: int) -> RequestTrace:
    """Per slot and model draw a Poisson(rate) request count, then shuffle the slot.

    Slots are drawn sequentially from one stream, so a shorter trace with the
    same seed is a prefix of a longer one.
    """
    lam = np.asarray(rates, dtype=float)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("rates must be a non-empty 1-D sequence")
    if (lam < 0).any() or not np.isfinite(lam).all():
        raise ValueError("rates must be finite and >= 0")
    if t_slots < 1:
        raise ValueError("t_slots must be >= 1")
    rng = np.random.default_rng(seed)
    ids = np.arange(lam.size)
    slots = []
    for _ in range(t_slots):
        counts = rng.poisson(lam)
        reqs = np.repeat(ids, counts)
        rng.shuffle(reqs)
        slots.append(tuple(int(r) for r in reqs))
    return RequestTrace(tuple(slots), tuple(float(x) for x in lam), seed)


@dataclass(frozen=True)
class ActiveCycleEstimator:
    counts: tuple[int, ...]
    slots_seen: int = 0
    smoothing: float = 1.0

    def __post_init__(self):
        if self.smoothing <= 0:
            raise ValueError("smoothing must be > 0")
        if self.slots_seen < 0 or any(c < 0 for c in self.counts):
            raise ValueError("counts and slots_seen must be >= 0")

    @classmethod
    def fresh(cls, m: int, smoothing: float = 1.0) -> "ActiveCycleEstimator":
        return cls((0,) * m, 0, smoothing)

    def observe(self, slot_requests: Sequence[int]) -> "ActiveCycleEstimator":
        return observe(self, slot_requests)

    def estimate(self) -> np.ndarray:
        return estimate_beta(self)


def observe(est: ActiveCycleEstimator, slot_requests: Sequence[int]) -> ActiveCycleEstimator:
    m = len(est.counts)
    reqs = np.asarray(slot_requests, dtype=int)
    if reqs.size and (reqs.min() < 0 or reqs.max() >= m):
        raise ValueError(f"request ids must lie in [0, {m})")
    counts = np.asarray(est.counts, dtype=np.int64) + np.bincount(reqs, minlength=m)
    return replace(est, counts=tuple(int(c) for c in counts), slots_seen=est.slots_seen + 1)


def estimate_beta(est: ActiveCycleEstimator) -> np.ndarray:
    """beta_m = 1 / rate_m with rate_m = (count_m + a) / (slots_seen + a)."""
    a = est.smoothing
    rate = (np.asarray(est.counts, dtype=float) + a) / (est.slots_seen + a)
    return 1.0 / rate


def oracle_beta(rates: Sequence[float]) -> np.ndarray:
    lam = np.asarray(rates, dtype=float)
    if not (lam > 0).all():
        raise ValueError("oracle active cycles need strictly positive rates")
    return 1.0 / lam
