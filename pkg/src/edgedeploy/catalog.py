"""Model catalog, edge budgets, objective weights and the scenario file format."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

PROFILE_FIELDS = ("size_gb", "gpu_mem_gb", "energy_kw", "io_delay_s", "infer_delay_s")
EDGE_FIELDS = ("storage_gb", "gpu_gb", "energy_kw", "static_kw", "bandwidth_gbps")
WEIGHT_FIELDS = ("w", "mu_l", "mu_r")

# Reference ranges for generative model profiles (min, max).
REFERENCE_RANGES: dict[str, tuple[float, float]] = {
    "size_gb": (2.0, 50.0),
    "gpu_mem_gb": (1.0, 6.0),
    "energy_kw": (0.0025, 0.5),
    "io_delay_s": (0.3, 60.0),
    "infer_delay_s": (0.05, 30.0),
}

DEFAULT_EDGE = dict(storage_gb=120.0, gpu_gb=12.0, energy_kw=1.0, static_kw=0.3, bandwidth_gbps=10.0)


class ScenarioError(ValueError):
    """A scenario violates a schema rule or a domain invariant."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class RangeWarning(UserWarning):
    pass


def _positive_finite(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where} must be a number, got {value!r}", where)
    value = float(value)
    if not math.isfinite(value) or value <= 0:
        raise ScenarioError(f"{where} must be positive and finite, got {value!r}", where)
    return value


@dataclass(frozen=True)
class ModelProfile:
    id: int
    name: str
    size_gb: float
    gpu_mem_gb: float
    energy_kw: float
    io_delay_s: float
    infer_delay_s: float

    def __post_init__(self):
        for f in PROFILE_FIELDS:
            object.__setattr__(self, f, _positive_finite(getattr(self, f), f"models[{self.id}].{f}"))

    def out_of_range(self, ranges: Mapping[str, tuple[float, float]] = REFERENCE_RANGES) -> list[str]:
        """Names of fields falling outside ``ranges``."""
        return [f for f, (lo, hi) in ranges.items() if not lo <= getattr(self, f) <= hi]


@dataclass(frozen=True)
class Catalog:
    models: tuple[ModelProfile, ...]

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if not self.models:
            raise ScenarioError("catalog must contain at least one model", "models")
        for i, m in enumerate(self.models):
            if m.id != i:
                raise ScenarioError(f"model ids must be 0..M-1 in order; position {i} has id {m.id}", "models")
        names = [m.name for m in self.models]
        if len(set(names)) != len(names):
            raise ScenarioError("model names must be unique", "models")

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def __getitem__(self, i):
        return self.models[i]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(m, name) for m in self.models], dtype=float)

    @cached_property
    def sizes(self) -> np.ndarray:
        return self.column("size_gb")

    @cached_property
    def gpu(self) -> np.ndarray:
        return self.column("gpu_mem_gb")

    @cached_property
    def energy(self) -> np.ndarray:
        return self.column("energy_kw")

    @cached_property
    def io_delay(self) -> np.ndarray:
        return self.column("io_delay_s")

    @cached_property
    def infer_delay(self) -> np.ndarray:
        return self.column("infer_delay_s")

    @classmethod
    def from_records(cls, records: Sequence[Mapping]) -> "Catalog":
        models = []
        for i, rec in enumerate(records):
            rec = dict(rec)
            rec.pop("id", None)
            name = rec.pop("name", f"model-{i}")
            if not isinstance(name, str):
                raise ScenarioError(f"models[{i}].name must be a string", f"models[{i}].name")
            unknown = set(rec) - set(PROFILE_FIELDS)
            if unknown:
                raise ScenarioError(f"models[{i}] has unknown keys {sorted(unknown)}", f"models[{i}]")
            missing = set(PROFILE_FIELDS) - set(rec)
            if missing:
                raise ScenarioError(f"models[{i}] is missing {sorted(missing)}", f"models[{i}]")
            models.append(ModelProfile(id=i, name=name, **rec))
        return cls(tuple(models))

    def to_records(self) -> list[dict]:
        return [{"name": m.name, **{f: getattr(m, f) for f in PROFILE_FIELDS}} for m in self.models]


@dataclass(frozen=True)
class EdgeConfig:
    storage_gb: float
    gpu_gb: float
    energy_kw: float
    static_kw: float
    bandwidth_gbps: float

    def __post_init__(self):
        for f in EDGE_FIELDS:
            object.__setattr__(self, f, _positive_finite(getattr(self, f), f"edge.{f}"))
        if self.static_kw >= self.energy_kw:
            raise ScenarioError(
                f"edge.static_kw ({self.static_kw}) must be below edge.energy_kw ({self.energy_kw})",
                "edge.static_kw",
            )


@dataclass(frozen=True)
class CostWeights:
    w: float = 1.0
    mu_l: float = 1.0
    mu_r: float = 1.0

    def __post_init__(self):
        for f in WEIGHT_FIELDS:
            v = getattr(self, f)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ScenarioError(f"weights.{f} must be a finite number >= 0, got {v!r}", f"weights.{f}")
            object.__setattr__(self, f, float(v))
        if self.mu_l + self.mu_r <= 0:
            raise ScenarioError("weights.mu_l + weights.mu_r must be positive", "weights")


@dataclass(frozen=True)
class Scenario:
    catalog: Catalog
    edge: EdgeConfig
    weights: CostWeights = field(default_factory=CostWeights)
    arrival_rates: tuple[float, ...] | None = None
    slot_s: float | None = None

    def __post_init__(self):
        if self.arrival_rates is not None:
            rates = tuple(float(r) for r in self.arrival_rates)
            if len(rates) != len(self.catalog):
                raise ScenarioError(
                    f"arrival_rates has {len(rates)} entries for {len(self.catalog)} models", "arrival_rates"
                )
            if any(not math.isfinite(r) or r < 0 for r in rates):
                raise ScenarioError("arrival_rates must be finite and >= 0", "arrival_rates")
            object.__setattr__(self, "arrival_rates", rates)
        if self.slot_s is not None:
            object.__setattr__(self, "slot_s", _positive_finite(self.slot_s, "slot_s"))

    def replace(self, **changes) -> "Scenario":
        """Copy with top-level fields or edge/weight fields overridden by name."""
        edge = {k: changes.pop(k) for k in list(changes) if k in EDGE_FIELDS}
        weights = {k: changes.pop(k) for k in list(changes) if k in WEIGHT_FIELDS}
        out = dict(
            catalog=self.catalog,
            edge=EdgeConfig(**{**self.edge.__dict__, **edge}),
            weights=CostWeights(**{**self.weights.__dict__, **weights}),
            arrival_rates=self.arrival_rates,
            slot_s=self.slot_s,
        )
        out.update(changes)
        return Scenario(**out)

    def rates_per_second(self) -> tuple[float, ...] | None:
        if self.arrival_rates is None or self.slot_s is None:
            return None
        return tuple(r / self.slot_s for r in self.arrival_rates)


_TOP_KEYS = {"models", "edge", "weights", "arrival_rates", "slot_s"}


def scenario_from_dict(doc: Mapping) -> Scenario:
    if not isinstance(doc, Mapping):
        raise ScenarioError("scenario document must be a JSON object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown top-level keys {sorted(unknown)}", sorted(unknown)[0])
    for key in ("models", "edge"):
        if key not in doc:
            raise ScenarioError(f"missing required key {key!r}", key)
    if not isinstance(doc["models"], list):
        raise ScenarioError("models must be an array", "models")
    catalog = Catalog.from_records(doc["models"])

    edge_doc = doc["edge"]
    if not isinstance(edge_doc, Mapping):
        raise ScenarioError("edge must be an object", "edge")
    unknown = set(edge_doc) - set(EDGE_FIELDS)
    missing = set(EDGE_FIELDS) - set(edge_doc)
    if unknown:
        raise ScenarioError(f"edge has unknown keys {sorted(unknown)}", "edge")
    if missing:
        raise ScenarioError(f"edge is missing {sorted(missing)}", "edge")
    edge = EdgeConfig(**edge_doc)

    weights_doc = doc.get("weights") or {}
    if not isinstance(weights_doc, Mapping):
        raise ScenarioError("weights must be an object", "weights")
    unknown = set(weights_doc) - set(WEIGHT_FIELDS)
    if unknown:
        raise ScenarioError(f"weights has unknown keys {sorted(unknown)}", "weights")
    weights = CostWeights(**weights_doc)

    rates = doc.get("arrival_rates")
    if rates is not None and not isinstance(rates, list):
        raise ScenarioError("arrival_rates must be an array", "arrival_rates")

    for m in catalog:
        bad = m.out_of_range()
        if bad:
            warnings.warn(f"model {m.name!r} outside reference ranges for {bad}", RangeWarning, stacklevel=3)

    return Scenario(catalog, edge, weights, None if rates is None else tuple(rates), doc.get("slot_s"))


def scenario_to_dict(scenario: Scenario) -> dict:
    doc = {
        "models": scenario.catalog.to_records(),
        "edge": {f: getattr(scenario.edge, f) for f in EDGE_FIELDS},
        "weights": {f: getattr(scenario.weights, f) for f in WEIGHT_FIELDS},
    }
    if scenario.arrival_rates is not None:
        doc["arrival_rates"] = list(scenario.arrival_rates)
    if scenario.slot_s is not None:
        doc["slot_s"] = scenario.slot_s
    return doc


def load_scenario(path) -> Scenario:
    """Read and validate a scenario JSON file.

    Raises ``ScenarioError`` for malformed JSON or any violated invariant;
    the error's ``field`` attribute names the offending key.
    """
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"{path}: not valid JSON ({e})") from e
    return scenario_from_dict(doc)


def write_scenario(scenario: Scenario, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")
    return path


def sample_catalog(m: int, ranges: Mapping[str, tuple[float, float]] | None = None, seed: int = 0) -> Catalog:
    """Draw ``m`` profiles with every field uniform in its range.

    Pure in (m, ranges, seed). Missing fields in ``ranges`` fall back to the
    reference ranges.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    ranges = {**REFERENCE_RANGES, **(ranges or {})}
    for f in PROFILE_FIELDS:
        lo, hi = ranges[f]
        if not (0 < lo <= hi) or not math.isfinite(hi):
            raise ValueError(f"invalid range for {f}: ({lo}, {hi})")
    rng = np.random.default_rng(seed)
    cols = {f: rng.uniform(ranges[f][0], ranges[f][1], size=m) for f in PROFILE_FIELDS}
    models = []
    for i in range(m):
        vals = {f: float(np.clip(cols[f][i], *ranges[f])) for f in PROFILE_FIELDS}
        models.append(ModelProfile(id=i, name=f"model-{i}", **vals))
    return Catalog(tuple(models))
