"""Versioned model registry with per-device capability profiles.

Entries are keyed by (model, package); the hardware axis is attached as one
profile per device rather than a third key, which flattens the three-way
combination space into queryable records.  Storage is line-delimited JSON
(one entry per line, all versions retained) so files stay append-friendly
and diffable; no database dependency.

Writes are serialized and, when the registry is bound to a path, persisted
atomically (write temp, rename) before the mutating call returns.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass, field

from .capability import AlemProfile
from .errors import CorruptFile, DuplicateId, UnknownModel, VersionRegression

SCENARIOS = ("vehicles", "safety", "home", "health")


@dataclass(frozen=True)
class DeviceSpec:
    """What an edge provides: budgets the selector must respect."""

    device_id: str
    memory_budget_bytes: int
    energy_budget_mj: float
    power_rating_w: float
    compute_capacity: float

    def __post_init__(self):
        if not self.device_id:
            raise ValueError("device_id must be non-empty")
        if self.memory_budget_bytes <= 0:
            raise ValueError("memory_budget_bytes must be > 0")
        if self.energy_budget_mj <= 0:
            raise ValueError("energy_budget_mj must be > 0")
        if self.power_rating_w <= 0:
            raise ValueError("power_rating_w must be > 0")
        if self.compute_capacity <= 0:
            raise ValueError("compute_capacity must be > 0")

    def to_record(self) -> dict:
        return {
            "device_id": self.device_id,
            "memory_budget_bytes": self.memory_budget_bytes,
            "energy_budget_mj": self.energy_budget_mj,
            "power_rating_w": self.power_rating_w,
            "compute_capacity": self.compute_capacity,
        }

    @classmethod
    def from_record(cls, record: dict) -> "DeviceSpec":
        return cls(
            device_id=record["device_id"],
            memory_budget_bytes=int(record["memory_budget_bytes"]),
            energy_budget_mj=float(record["energy_budget_mj"]),
            power_rating_w=float(record["power_rating_w"]),
            compute_capacity=float(record["compute_capacity"]),
        )


@dataclass
class ModelEntry:
    """A registered model artifact with scenario/task tags and executor binding."""

    model_id: str
    scenario: str
    task: str
    package_id: str
    version: int = 1
    artifact_ref: str = ""
    declared_memory_bytes: int | None = None
    profiles: dict[str, AlemProfile] = field(default_factory=dict)

    def __post_init__(self):
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if self.scenario not in SCENARIOS:
            raise ValueError(
                f"scenario {self.scenario!r} not in {SCENARIOS}; "
                "unknown scenarios would break URI routing"
            )
        if self.version < 1:
            raise ValueError("version must be >= 1")

    def to_record(self) -> dict:
        return {
            "model_id": self.model_id,
            "scenario": self.scenario,
            "task": self.task,
            "package_id": self.package_id,
            "version": self.version,
            "artifact_ref": self.artifact_ref,
            "declared_memory_bytes": self.declared_memory_bytes,
            "profiles": {
                device_id: profile.to_record()
                for device_id, profile in sorted(self.profiles.items())
            },
        }

    @classmethod
    def from_record(cls, record: dict) -> "ModelEntry":
        return cls(
            model_id=record["model_id"],
            scenario=record["scenario"],
            task=record["task"],
            package_id=record["package_id"],
            version=int(record["version"]),
            artifact_ref=record.get("artifact_ref", ""),
            declared_memory_bytes=(
                int(record["declared_memory_bytes"])
                if record.get("declared_memory_bytes") is not None
                else None
            ),
            profiles={
                device_id: AlemProfile.from_record(raw)
                for device_id, raw in record.get("profiles", {}).items()
            },
        )


class Registry:
    """In-memory model index over an append-style JSONL log.

    Many readers, one writer: mutations take the lock and, when a backing
    path is set, rewrite the file atomically before returning.
    """

    def __init__(self, path=None):
        self.path = os.fspath(path) if path is not None else None
        self._entries: list[ModelEntry] = []
        self._lock = threading.RLock()

    # the full insert log, oldest first (all versions)
    def entries(self) -> list[ModelEntry]:
        with self._lock:
            return list(self._entries)

    def __len__(self) -> int:
        with self._lock:
            return len({e.model_id for e in self._entries})

    def _latest(self, model_id: str) -> ModelEntry | None:
        best = None
        for entry in self._entries:
            if entry.model_id == model_id:
                if best is None or entry.version > best.version:
                    best = entry
        return best

    def register(self, entry: ModelEntry) -> str:
        """Add an entry; re-registration requires a strictly greater version."""
        with self._lock:
            current = self._latest(entry.model_id)
            if current is not None:
                if entry.version == current.version:
                    raise DuplicateId(
                        f"model {entry.model_id!r} version {entry.version} already registered"
                    )
                if entry.version < current.version:
                    raise VersionRegression(
                        f"model {entry.model_id!r} version {entry.version} "
                        f"is older than stored version {current.version}"
                    )
            self._entries.append(entry)
            self._persist()
        return entry.model_id

    def get(self, model_id: str) -> ModelEntry:
        with self._lock:
            entry = self._latest(model_id)
        if entry is None:
            raise UnknownModel(f"model {model_id!r} not registered")
        return entry

    def latest_version(self, model_id: str) -> int | None:
        with self._lock:
            entry = self._latest(model_id)
        return None if entry is None else entry.version

    def lookup(self, scenario: str, task: str) -> list[ModelEntry]:
        """All matching entries, newest version per model_id, ordered by model_id."""
        with self._lock:
            newest: dict[str, ModelEntry] = {}
            for entry in self._entries:
                if entry.scenario != scenario or entry.task != task:
                    continue
                kept = newest.get(entry.model_id)
                if kept is None or entry.version > kept.version:
                    newest[entry.model_id] = entry
            return [newest[model_id] for model_id in sorted(newest)]

    def attach_profile(self, model_id: str, device_id: str, profile: AlemProfile) -> None:
        """Attach (or overwrite) the profile for one device on the newest entry."""
        with self._lock:
            entry = self._latest(model_id)
            if entry is None:
                raise UnknownModel(f"model {model_id!r} not registered")
            entry.profiles[device_id] = profile
            self._persist()

    # --- persistence ----------------------------------------------------

    def _persist(self) -> None:
        if self.path is not None:
            _write_jsonl(self.path, [e.to_record() for e in self._entries])

    def save(self, path=None) -> None:
        target = os.fspath(path) if path is not None else self.path
        if target is None:
            raise ValueError("registry has no backing path; pass one to save()")
        with self._lock:
            _write_jsonl(target, [e.to_record() for e in self._entries])

    @classmethod
    def load(cls, path) -> "Registry":
        registry = cls()
        registry.path = os.fspath(path)
        for line_number, record in _read_jsonl(path):
            try:
                registry._entries.append(ModelEntry.from_record(record))
            except (KeyError, TypeError, ValueError) as exc:
                raise CorruptFile(path, line_number, f"bad registry entry: {exc}")
        return registry


def _write_jsonl(path, records) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".registry-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                record = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise CorruptFile(path, line_number, f"invalid JSON: {exc.msg}")
            if not isinstance(record, dict):
                raise CorruptFile(path, line_number, "expected a JSON object")
            yield line_number, record


def save_devices(path, devices) -> None:
    """Persist device specs as JSONL, one device per line."""
    _write_jsonl(path, [d.to_record() for d in devices])


def load_devices(path) -> dict[str, DeviceSpec]:
    devices: dict[str, DeviceSpec] = {}
    for line_number, record in _read_jsonl(path):
        try:
            spec = DeviceSpec.from_record(record)
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptFile(path, line_number, f"bad device record: {exc}")
        devices[spec.device_id] = spec
    return devices
