"""Constrained model selection over profiled candidates.

One dimension is optimized (minimize latency, energy, or memory; maximize
accuracy) while the others act as constraints: a floor on accuracy and
ceilings on latency, energy, and memory.  Device budgets for energy and
memory always apply; query thresholds can only tighten them, never relax
them, because those two ceilings are what the edge physically provides.

The shipped search is exhaustive: at realistic registry sizes the candidate
table is at most a few hundred rows, so exact scanning is both fast and
testable against an independent oracle.  ``feasible_set`` and ``rank`` are
the extension points for alternative search strategies.

Ties are broken deterministically: objective value, then accuracy
descending, then latency/energy/memory ascending (skipping the objective
dimension), then (model_id, package_id) lexicographically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .capability import AlemProfile
from .errors import Infeasible, UnknownDevice
from .registry import DeviceSpec, ModelEntry, Registry

log = logging.getLogger(__name__)

OBJECTIVES = ("latency", "accuracy", "energy", "memory")

# maps each objective to the query field that would constrain the same
# dimension; that field must stay unset when the dimension is the objective
_OWN_CONSTRAINT = {
    "accuracy": "min_accuracy",
    "latency": "max_latency_ms",
    "energy": "max_energy_mj",
    "memory": "max_memory_bytes",
}


@dataclass(frozen=True)
class SelectionQuery:
    scenario: str
    task: str
    objective: str
    device_id: str
    min_accuracy: float | None = None
    max_latency_ms: float | None = None
    max_energy_mj: float | None = None
    max_memory_bytes: float | None = None

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective {self.objective!r} not in {OBJECTIVES}")
        own = _OWN_CONSTRAINT[self.objective]
        if getattr(self, own) is not None:
            raise ValueError(
                f"objective {self.objective!r} cannot also carry the {own!r} constraint"
            )
        for name in ("min_accuracy", "max_latency_ms", "max_energy_mj", "max_memory_bytes"):
            value = getattr(self, name)
            if value is None:
                continue
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be finite and positive, got {value}")
        if self.min_accuracy is not None and self.min_accuracy > 1.0:
            raise ValueError("min_accuracy must be in (0, 1]")


@dataclass(frozen=True)
class SelectionResult:
    model_id: str
    package_id: str
    objective: str
    objective_value: float
    feasible_count: int
    profile: AlemProfile

    def satisfies(self, query: SelectionQuery, device: DeviceSpec) -> bool:
        """Post-hoc feasibility check of the chosen profile."""
        return not _violations(self.profile, query, device)


def _violations(profile: AlemProfile, query: SelectionQuery, device: DeviceSpec) -> list[str]:
    bad = []
    if query.min_accuracy is not None and profile.accuracy < query.min_accuracy:
        bad.append("accuracy")
    if query.max_latency_ms is not None and profile.latency_ms > query.max_latency_ms:
        bad.append("latency")
    energy_cap = device.energy_budget_mj
    if query.max_energy_mj is not None:
        energy_cap = min(energy_cap, query.max_energy_mj)
    if profile.energy_mj > energy_cap:
        bad.append("energy")
    memory_cap = float(device.memory_budget_bytes)
    if query.max_memory_bytes is not None:
        memory_cap = min(memory_cap, query.max_memory_bytes)
    if profile.memory_bytes > memory_cap:
        bad.append("memory")
    return bad


def feasible_set(
    candidates: list[tuple[ModelEntry, AlemProfile]],
    query: SelectionQuery,
    device: DeviceSpec,
) -> list[tuple[ModelEntry, AlemProfile]]:
    """Candidates whose profile satisfies every active constraint and budget."""
    return [
        (entry, profile)
        for entry, profile in candidates
        if not _violations(profile, query, device)
    ]


def violation_counts(
    candidates: list[tuple[ModelEntry, AlemProfile]],
    query: SelectionQuery,
    device: DeviceSpec,
) -> dict[str, int]:
    counts = {"accuracy": 0, "latency": 0, "energy": 0, "memory": 0}
    for _, profile in candidates:
        for dimension in _violations(profile, query, device):
            counts[dimension] += 1
    return counts


def _sort_key(entry: ModelEntry, profile: AlemProfile, objective: str):
    primary = -profile.accuracy if objective == "accuracy" else profile.value(objective)
    key = [primary, -profile.accuracy]
    for dimension in ("latency", "energy", "memory"):
        if dimension != objective:
            key.append(profile.value(dimension))
    key.append(entry.model_id)
    key.append(entry.package_id)
    return tuple(key)


def rank(
    candidates: list[tuple[ModelEntry, AlemProfile]], objective: str
) -> list[tuple[ModelEntry, AlemProfile]]:
    """Total order by objective then the deterministic tie-break chain."""
    if objective not in OBJECTIVES:
        raise ValueError(f"objective {objective!r} not in {OBJECTIVES}")
    return sorted(candidates, key=lambda pair: _sort_key(pair[0], pair[1], objective))


def select(
    query: SelectionQuery, registry: Registry, device: DeviceSpec | None
) -> SelectionResult:
    """Pick the best feasible candidate for the query's device.

    Candidates lacking a profile for the device are excluded with a warning;
    profiling on demand is a CLI workflow, not a selector side effect.
    Raises Infeasible (with per-constraint violation counts) when nothing
    qualifies, and UnknownDevice when the device is not supplied.
    """
    if device is None:
        raise UnknownDevice(f"device {query.device_id!r} is not known")
    entries = registry.lookup(query.scenario, query.task)
    candidates: list[tuple[ModelEntry, AlemProfile]] = []
    missing = 0
    for entry in entries:
        profile = entry.profiles.get(query.device_id)
        if profile is None:
            missing += 1
            log.warning(
                "candidate %s/%s has no profile for device %s; excluded",
                entry.model_id,
                entry.package_id,
                query.device_id,
            )
            continue
        candidates.append((entry, profile))
    feasible = feasible_set(candidates, query, device)
    if not feasible:
        counts = violation_counts(candidates, query, device)
        raise Infeasible(
            f"no feasible candidate for {query.scenario}/{query.task} "
            f"on {query.device_id} (of {len(candidates)} profiled, {missing} unprofiled)",
            violations=counts,
            candidates=len(candidates),
        )
    ordered = rank(feasible, query.objective)
    entry, profile = ordered[0]
    return SelectionResult(
        model_id=entry.model_id,
        package_id=entry.package_id,
        objective=query.objective,
        objective_value=profile.value(query.objective),
        feasible_count=len(feasible),
        profile=profile,
    )
