"""Cloud-edge and edge-edge collaboration over a simulated network.

The network is simulated in-process with a logical clock: a link is
(one-way latency, bandwidth, loss rate) and a transfer of n bytes costs
``n / bandwidth + latency``.  Loss is drawn from a seeded RNG and bounded
by a retry budget of three attempts, which keeps every collaboration test
hermetic and deterministic.

Covered flows: model sync (cloud to edge), retrained-model upload with
staging, sample-count-weighted parameter merge (one concrete instantiation
of "combine retrained models into a global one"), capacity-proportional
task splitting via the largest-remainder method, and the three end-to-end
dataflows (cloud inference, edge inference, edge retraining) with full
byte accounting.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    EmptyStage,
    FixtureParse,
    NoCapacity,
    ShapeMismatch,
    SimulatedDrop,
    StaleVersion,
)
from .executors import ReferenceModel
from .registry import DeviceSpec, Registry
from .runtime import artifact_ref_inline

RETRY_BUDGET = 3


@dataclass(frozen=True)
class SimLink:
    latency_ms: float
    bandwidth_bytes_per_s: float
    loss_rate: float = 0.0

    def __post_init__(self):
        if self.latency_ms < 0:
            raise ValueError("latency_ms must be >= 0")
        if not self.bandwidth_bytes_per_s > 0:
            raise ValueError("bandwidth_bytes_per_s must be > 0")
        if not 0.0 <= self.loss_rate <= 1.0:
            raise ValueError("loss_rate must be in [0, 1]")

    def transfer_time_s(self, nbytes: float) -> float:
        return nbytes / self.bandwidth_bytes_per_s + self.latency_ms / 1000.0


@dataclass(frozen=True)
class TransferReport:
    model_id: str
    bytes_moved: int
    transfer_time_s: float
    attempts: int


@dataclass(frozen=True)
class MergeWeight:
    edge_id: str
    sample_count: int

    def __post_init__(self):
        if not self.edge_id:
            raise ValueError("edge_id must be non-empty")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1 for a contributing edge")


@dataclass(frozen=True)
class StagedUpload:
    edge_id: str
    params: tuple[float, ...]
    weight: MergeWeight
    version: int


@dataclass
class TaskAllocation:
    shares: dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.shares.values())


def simulate_transfer(
    link: SimLink, nbytes: int, rng: random.Random | None = None
) -> tuple[float, int]:
    """One transfer with retries; returns (total simulated seconds, attempts).

    A dropped attempt still costs its transfer time before the retry.
    """
    rng = rng or random.Random(0)
    per_attempt = link.transfer_time_s(nbytes)
    total = 0.0
    for attempt in range(1, RETRY_BUDGET + 1):
        total += per_attempt
        if rng.random() >= link.loss_rate:
            return total, attempt
    raise SimulatedDrop(
        f"transfer of {nbytes} bytes dropped {RETRY_BUDGET} times "
        f"(loss_rate={link.loss_rate})"
    )


def artifact_size_bytes(entry) -> int:
    """Simulated wire size of a model artifact.

    Declared memory is the stand-in for artifact bytes (actual byte storage
    is out of scope); entries without it fall back to the size of their
    serialized form so accounting never invents zero-cost transfers for
    real payloads.
    """
    if entry.declared_memory_bytes is not None:
        return entry.declared_memory_bytes
    return len(entry.artifact_ref.encode("utf-8"))


def sync_model(
    cloud_registry: Registry,
    edge_registry: Registry,
    model_id: str,
    link: SimLink,
    *,
    cloud_artifacts: dict | None = None,
    edge_artifacts: dict | None = None,
    rng: random.Random | None = None,
) -> TransferReport:
    """Download the newest cloud entry (and artifact) to the edge."""
    entry = cloud_registry.get(model_id)  # raises UnknownModel
    size = artifact_size_bytes(entry)
    elapsed, attempts = simulate_transfer(link, size, rng)
    edge_version = edge_registry.latest_version(model_id)
    if edge_version is None or entry.version > edge_version:
        edge_registry.register(replace(entry, profiles=dict(entry.profiles)))
    if cloud_artifacts is not None and edge_artifacts is not None:
        if model_id in cloud_artifacts:
            edge_artifacts[model_id] = cloud_artifacts[model_id]
    return TransferReport(
        model_id=model_id, bytes_moved=size, transfer_time_s=elapsed, attempts=attempts
    )


def upload_retrained(
    edge_registry: Registry,
    cloud_registry: Registry,
    model_id: str,
    version: int,
    weight: MergeWeight,
    link: SimLink,
    stage: dict[str, StagedUpload],
    *,
    params=None,
    rng: random.Random | None = None,
) -> TransferReport:
    """Ship a retrained version to the cloud staging area for the next merge.

    ``params`` defaults to the weights of the edge entry's inline artifact;
    pass them explicitly for models whose artifact_ref is opaque.
    """
    entry = edge_registry.get(model_id)
    if entry.version < version:
        raise ValueError(
            f"edge registry holds version {entry.version} of {model_id!r}, not {version}"
        )
    cloud_version = cloud_registry.latest_version(model_id)
    if cloud_version is not None and version <= cloud_version:
        raise StaleVersion(
            f"version {version} of {model_id!r} is not newer than cloud version {cloud_version}"
        )
    if params is None:
        params = _params_from_ref(entry.artifact_ref)
    size = artifact_size_bytes(entry)
    elapsed, attempts = simulate_transfer(link, size, rng)
    stage[weight.edge_id] = StagedUpload(
        edge_id=weight.edge_id,
        params=tuple(float(p) for p in params),
        weight=weight,
        version=version,
    )
    return TransferReport(
        model_id=model_id, bytes_moved=size, transfer_time_s=elapsed, attempts=attempts
    )


def _params_from_ref(artifact_ref: str) -> tuple[float, ...]:
    if artifact_ref.startswith("inline:"):
        payload = json.loads(artifact_ref[len("inline:"):])
        weights = payload.get("weights")
        if weights is not None:
            return tuple(float(w) for w in weights)
    raise ShapeMismatch(
        "no parameter vector available; pass params= for non-inline artifacts"
    )


def merge_models(staged) -> np.ndarray:
    """Parameter-wise weighted average; weights are sample_count / total."""
    staged = list(staged)
    if not staged:
        raise EmptyStage("nothing staged for merging")
    arrays = []
    weights = []
    for params, weight in staged:
        arrays.append(np.asarray(params, dtype=float))
        weights.append(weight.sample_count)
    shape = arrays[0].shape
    for arr in arrays[1:]:
        if arr.shape != shape:
            raise ShapeMismatch(f"parameter shapes differ: {shape} vs {arr.shape}")
    if sum(weights) <= 0:
        raise EmptyStage("total sample count is zero")
    return np.average(np.stack(arrays), axis=0, weights=weights)


def merge_staged(
    cloud_registry: Registry, model_id: str, stage: dict[str, StagedUpload]
) -> tuple[int, np.ndarray]:
    """Merge everything staged for a model and register the next cloud version."""
    if not stage:
        raise EmptyStage(f"no uploads staged for {model_id!r}")
    merged = merge_models((s.params, s.weight) for s in stage.values())
    entry = cloud_registry.get(model_id)
    artifact = ReferenceModel.linear(merged.tolist())
    new_entry = replace(
        entry,
        version=entry.version + 1,
        artifact_ref=artifact_ref_inline(artifact),
        profiles=dict(entry.profiles),
    )
    cloud_registry.register(new_entry)
    stage.clear()
    return new_entry.version, merged


def split_task(total_units: int, edges) -> TaskAllocation:
    """Apportion work units proportionally to compute capacity.

    Largest-remainder integerization: floors of the exact proportions, then
    leftover units to the largest fractional remainders, ties by edge id.
    Accepts DeviceSpec objects or (edge_id, capacity) pairs; zero-capacity
    edges are allowed and always receive 0.
    """
    if total_units < 0:
        raise ValueError("total_units must be >= 0")
    pairs = []
    for edge in edges:
        if isinstance(edge, DeviceSpec):
            pairs.append((edge.device_id, float(edge.compute_capacity)))
        else:
            edge_id, capacity = edge
            capacity = float(capacity)
            if capacity < 0:
                raise ValueError(f"capacity for {edge_id!r} must be >= 0")
            pairs.append((str(edge_id), capacity))
    if not pairs:
        raise NoCapacity("no edges supplied")
    capacity_sum = sum(capacity for _, capacity in pairs)
    if capacity_sum <= 0:
        raise NoCapacity("all edge capacities are zero")

    shares: dict[str, int] = {}
    remainders: list[tuple[float, str]] = []
    assigned = 0
    for edge_id, capacity in pairs:
        exact = total_units * capacity / capacity_sum
        base = math.floor(exact)
        shares[edge_id] = base
        assigned += base
        remainders.append((exact - base, edge_id))
    leftover = total_units - assigned
    remainders.sort(key=lambda item: (-item[0], item[1]))
    for i in range(leftover):
        shares[remainders[i][1]] += 1
    return TaskAllocation(shares=shares)


# --- end-to-end dataflow simulation ------------------------------------

DATAFLOWS = ("cloud_inference", "edge_inference", "edge_retrain")


@dataclass(frozen=True)
class ScenarioFixture:
    """Everything a dataflow run needs: devices, link, model, workload costs."""

    link: SimLink
    model_id: str
    model_size_bytes: int
    sample_count: int
    payload_size_bytes: int
    result_size_bytes: int
    cloud_infer_ms: float
    edge_infer_ms: float
    retrain_ms_per_pass: float
    retrain_passes: int
    edges: tuple[DeviceSpec, ...] = ()

    def __post_init__(self):
        for name in ("model_size_bytes", "sample_count", "payload_size_bytes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.result_size_bytes < 0:
            raise ValueError("result_size_bytes must be >= 0")
        if self.retrain_passes < 1:
            raise ValueError("retrain_passes must be >= 1")


@dataclass(frozen=True)
class StepMetric:
    step: str
    latency_s: float
    bytes_moved: int


@dataclass(frozen=True)
class DataflowReport:
    flow: str
    steps: tuple[StepMetric, ...]
    data_bytes: int
    model_bytes: int
    result_bytes: int

    @property
    def total_latency_s(self) -> float:
        return sum(step.latency_s for step in self.steps)

    @property
    def total_bytes(self) -> int:
        return self.data_bytes + self.model_bytes + self.result_bytes

    def to_dict(self) -> dict:
        return {
            "flow": self.flow,
            "total_latency_s": self.total_latency_s,
            "bytes": {
                "data": self.data_bytes,
                "model": self.model_bytes,
                "results": self.result_bytes,
                "total": self.total_bytes,
            },
            "steps": [
                {"step": s.step, "latency_s": s.latency_s, "bytes_moved": s.bytes_moved}
                for s in self.steps
            ],
        }


def run_dataflow(flow: str, fixture: ScenarioFixture) -> DataflowReport:
    """Execute one dataflow on the logical clock and account every byte.

    Flow cloud_inference ships the raw data up and the results back; flow
    edge_inference downloads the model once and runs locally; flow
    edge_retrain trains locally and uploads only the model, so no raw data
    leaves the edge.
    """
    if flow not in DATAFLOWS:
        raise ValueError(f"flow {flow!r} not in {DATAFLOWS}")
    link = fixture.link
    n = fixture.sample_count
    if flow == "cloud_inference":
        data_bytes = n * fixture.payload_size_bytes
        result_bytes = n * fixture.result_size_bytes
        steps = (
            StepMetric("upload_data", link.transfer_time_s(data_bytes), data_bytes),
            StepMetric("cloud_inference", n * fixture.cloud_infer_ms / 1000.0, 0),
            StepMetric(
                "download_results", link.transfer_time_s(result_bytes), result_bytes
            ),
        )
        return DataflowReport(flow, steps, data_bytes, 0, result_bytes)
    if flow == "edge_inference":
        model_bytes = fixture.model_size_bytes
        steps = (
            StepMetric("download_model", link.transfer_time_s(model_bytes), model_bytes),
            StepMetric("edge_inference", n * fixture.edge_infer_ms / 1000.0, 0),
        )
        return DataflowReport(flow, steps, 0, model_bytes, 0)
    model_bytes = fixture.model_size_bytes
    steps = (
        StepMetric(
            "edge_retrain",
            fixture.retrain_passes * fixture.retrain_ms_per_pass / 1000.0,
            0,
        ),
        StepMetric("upload_model", link.transfer_time_s(model_bytes), model_bytes),
    )
    return DataflowReport(flow, steps, 0, model_bytes, 0)


def load_fixture(source) -> ScenarioFixture:
    """Parse a scenario fixture from a path or an already-decoded mapping."""
    if isinstance(source, dict):
        raw = source
    else:
        try:
            with open(source, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise FixtureParse(f"cannot read fixture {source}: {exc}")
        except json.JSONDecodeError as exc:
            raise FixtureParse(f"fixture {source} is not valid JSON: {exc.msg}")
    try:
        link_raw = raw["link"]
        link = SimLink(
            latency_ms=float(link_raw["latency_ms"]),
            bandwidth_bytes_per_s=float(link_raw["bandwidth_bytes_per_s"]),
            loss_rate=float(link_raw.get("loss_rate", 0.0)),
        )
        edges = tuple(
            DeviceSpec.from_record(record) for record in raw.get("edges", [])
        )
        model = raw["model"]
        workload = raw["workload"]
        return ScenarioFixture(
            link=link,
            model_id=model.get("model_id", "model"),
            model_size_bytes=int(model["size_bytes"]),
            sample_count=int(workload["sample_count"]),
            payload_size_bytes=int(workload["payload_size_bytes"]),
            result_size_bytes=int(workload.get("result_size_bytes", 0)),
            cloud_infer_ms=float(raw.get("cloud_infer_ms", 1.0)),
            edge_infer_ms=float(raw.get("edge_infer_ms", 10.0)),
            retrain_ms_per_pass=float(raw.get("retrain_ms_per_pass", 100.0)),
            retrain_passes=int(raw.get("retrain_passes", 1)),
            edges=edges,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FixtureParse(f"bad fixture: {exc}")
