"""Capability profiling: measure what a model costs on a given device.

A profile is the four-element tuple (accuracy, latency, energy, memory)
measured for one (model, executor, device) combination.  Units are fixed
project-wide: accuracy is a fraction in [0, 1], latency is milliseconds,
energy is millijoules per inference, memory is peak bytes.

Latency is wall time around the executor call only; input pre-processing is
deliberately outside the measurement.  Energy is pluggable through a meter
interface; the default meter is a cost model (device watts times measured
milliseconds, i.e. millijoules per inference), leaving room for hardware
counters later.  Memory is executor-self-reported so results are
deterministic across platforms.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Callable, NamedTuple, Protocol, Sequence

from .errors import (
    CorruptFile,
    EmptyWorkload,
    ExecutorFailure,
    MeterUnavailable,
    ReportUnavailable,
)

DEFAULT_WARMUP_RUNS = 5
DEFAULT_MEASURED_RUNS = 50


class Sample(NamedTuple):
    payload: object
    label: str


def exact_match(output, label) -> bool:
    return output == label


@dataclass(frozen=True)
class Workload:
    """A labeled evaluation workload.

    ``match`` is the task-specific rule deciding whether an output counts as
    correct; the shipped default is exact-label match.
    """

    id: str
    samples: tuple[Sample, ...]
    payload_size: int = 0
    match: Callable[[object, str], bool] = exact_match

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(Sample(*s) for s in self.samples))
        if not self.samples:
            raise EmptyWorkload(f"workload {self.id!r} has no samples")
        for i, sample in enumerate(self.samples):
            if sample.label is None:
                raise ValueError(f"workload {self.id!r} sample {i} has no label")


@dataclass(frozen=True)
class MeasurementConfig:
    warmup_runs: int = DEFAULT_WARMUP_RUNS
    measured_runs: int = DEFAULT_MEASURED_RUNS
    workload_id: str = ""

    def __post_init__(self):
        if self.measured_runs < 1:
            raise ValueError("measured_runs must be >= 1")
        if self.warmup_runs < 0:
            raise ValueError("warmup_runs must be >= 0")


@dataclass(frozen=True)
class AlemProfile:
    """One measured capability tuple, plus the context it was measured in."""

    accuracy: float
    latency_ms: float
    energy_mj: float
    memory_bytes: int
    model_id: str = ""
    device_id: str = ""
    package_id: str = ""
    workload_id: str = ""
    measured_at: int = 0  # epoch milliseconds

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy {self.accuracy} outside [0, 1]")
        if self.latency_ms <= 0:
            raise ValueError("latency_ms must be > 0 for a completed measurement")
        if self.energy_mj < 0:
            raise ValueError("energy_mj must be >= 0")
        if self.memory_bytes <= 0:
            raise ValueError("memory_bytes must be > 0 for a completed measurement")

    def value(self, dimension: str) -> float:
        return {
            "accuracy": self.accuracy,
            "latency": self.latency_ms,
            "energy": self.energy_mj,
            "memory": float(self.memory_bytes),
        }[dimension]

    def to_record(self) -> dict:
        return {
            "model_id": self.model_id,
            "device_id": self.device_id,
            "package_id": self.package_id,
            "accuracy": self.accuracy,
            "latency_ms": self.latency_ms,
            "energy_mj": self.energy_mj,
            "memory_bytes": self.memory_bytes,
            "workload_id": self.workload_id,
            "measured_at": self.measured_at,
        }

    @classmethod
    def from_record(cls, record: dict) -> "AlemProfile":
        return cls(
            accuracy=float(record["accuracy"]),
            latency_ms=float(record["latency_ms"]),
            energy_mj=float(record["energy_mj"]),
            memory_bytes=int(record["memory_bytes"]),
            model_id=record.get("model_id", ""),
            device_id=record.get("device_id", ""),
            package_id=record.get("package_id", ""),
            workload_id=record.get("workload_id", ""),
            measured_at=int(record.get("measured_at", 0)),
        )


class EnergyMeter(Protocol):
    """Pluggable per-inference energy source."""

    def measure(self, executor, model_id, workload, config) -> float: ...


@dataclass(frozen=True)
class CostModelMeter:
    """Default meter: energy = device power rating x measured latency.

    Watts times milliseconds gives millijoules, so the budget comparison in
    the selector is dimensionally coherent.
    """

    power_rating_w: float

    def measure(self, executor, model_id, workload, config) -> float:
        latency = measure_latency(executor, model_id, workload, config)
        return self.from_latency(latency)

    def from_latency(self, latency_ms: float) -> float:
        return self.power_rating_w * latency_ms


def _infer_sample(executor, payload):
    try:
        return executor.infer(payload)
    except ExecutorFailure:
        raise
    except Exception as exc:
        raise ExecutorFailure(f"executor crashed mid-run: {exc}") from exc


def measure_latency(executor, model_id, workload: Workload, config: MeasurementConfig) -> float:
    """Mean wall time per inference call in milliseconds.

    Runs ``warmup_runs + measured_runs`` calls, discarding the warmups;
    every call processes one workload sample, round-robin.
    """
    samples = workload.samples
    if not samples:
        raise EmptyWorkload(f"workload {workload.id!r} has no samples")
    total = 0.0
    n = len(samples)
    for i in range(config.warmup_runs + config.measured_runs):
        payload = samples[i % n].payload
        start = time.perf_counter()
        _infer_sample(executor, payload)
        elapsed = time.perf_counter() - start
        if i >= config.warmup_runs:
            total += elapsed
    return total * 1000.0 / config.measured_runs


def measure_memory(executor, model_id, workload: Workload) -> int:
    """Peak self-reported footprint (bytes) across one full workload pass."""
    for sample in workload.samples:
        _infer_sample(executor, sample.payload)
    report = getattr(executor, "resource_report", None)
    if report is None:
        raise ReportUnavailable(
            f"executor {getattr(executor, 'package_id', '?')!r} does not implement resource_report"
        )
    try:
        peak = report()
    except Exception as exc:
        raise ReportUnavailable(f"resource report failed: {exc}") from exc
    if peak is None:
        raise ReportUnavailable("executor returned no resource report")
    return int(peak)


def measure_energy(
    meter: EnergyMeter, executor, model_id, workload: Workload, config: MeasurementConfig
) -> float:
    """Per-inference energy in millijoules, as attributed by the meter."""
    if meter is None:
        raise MeterUnavailable("no energy meter configured")
    try:
        return float(meter.measure(executor, model_id, workload, config))
    except (MeterUnavailable, ExecutorFailure, EmptyWorkload):
        raise
    except Exception as exc:
        raise MeterUnavailable(f"energy meter failed: {exc}") from exc


def measure_accuracy(executor, model_id, workload: Workload) -> float:
    """Fraction of samples whose output matches the label under the workload's rule."""
    correct = 0
    for sample in workload.samples:
        output = _infer_sample(executor, sample.payload)
        if workload.match(output, sample.label):
            correct += 1
    return correct / len(workload.samples)


def profile_model(
    executor,
    model_id: str,
    workload: Workload,
    config: MeasurementConfig,
    device,
    meter: EnergyMeter | None = None,
) -> AlemProfile:
    """Measure all four dimensions in one session; all-or-nothing.

    The energy figure reuses the latency measurement when the default cost
    model is in play, so ``energy == power x latency`` holds exactly.  Any
    sub-measurement error propagates and no partial profile is produced.
    """
    accuracy = measure_accuracy(executor, model_id, workload)
    latency = measure_latency(executor, model_id, workload, config)
    if meter is None:
        meter = CostModelMeter(device.power_rating_w)
    if isinstance(meter, CostModelMeter):
        energy = meter.from_latency(latency)
    else:
        energy = measure_energy(meter, executor, model_id, workload, config)
    memory = measure_memory(executor, model_id, workload)
    return AlemProfile(
        accuracy=accuracy,
        latency_ms=latency,
        energy_mj=energy,
        memory_bytes=memory,
        model_id=model_id,
        device_id=device.device_id,
        package_id=getattr(executor, "package_id", ""),
        workload_id=workload.id,
        measured_at=int(time.time() * 1000),
    )


def write_profiles(path, profiles: Sequence[AlemProfile]) -> None:
    """Append profile records to a ``.alem.jsonl`` file, one document per line."""
    with open(path, "a", encoding="utf-8") as fh:
        for profile in profiles:
            fh.write(json.dumps(profile.to_record(), sort_keys=True) + "\n")


def read_profiles(path) -> list[AlemProfile]:
    profiles = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                profiles.append(AlemProfile.from_record(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise CorruptFile(path, line_number, f"bad profile record: {exc}")
    return profiles
