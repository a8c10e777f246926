"""Seed a runnable demo node: config, devices, registry, workload, sensor data.

Usage: ``python -m openei.demo DIR`` then point the CLI at DIR/config.json.
This is sample-data tooling for trying the service out, not part of the
operator surface.
"""

from __future__ import annotations

import json
import os
import sys

from .capability import MeasurementConfig, Sample, Workload, profile_model
from .datastore import DataStore, SensorRecord
from .executors import ReferenceExecutor, ReferenceModel
from .registry import DeviceSpec, ModelEntry, Registry, save_devices
from .runtime import artifact_ref_inline

DEMO_DEVICE = DeviceSpec(
    device_id="edge0",
    memory_budget_bytes=512 * 1024 * 1024,
    energy_budget_mj=1000.0,
    power_rating_w=5.0,
    compute_capacity=2.0,
)


def build_demo(directory: str) -> str:
    os.makedirs(directory, exist_ok=True)

    workload = Workload(
        id="frames-demo",
        samples=(
            Sample("frame-001", "person"),
            Sample("frame-002", "vehicle"),
            Sample("frame-003", "person"),
            Sample("frame-004", "bicycle"),
        ),
        payload_size=64,
    )
    workload_path = os.path.join(directory, "workload.json")
    with open(workload_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "id": workload.id,
                "payload_size": workload.payload_size,
                "samples": [{"input": s.payload, "label": s.label} for s in workload.samples],
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    registry = Registry(path=os.path.join(directory, "registry.jsonl"))
    models = [
        ("detector-fast", 2.0, 48 * 1024 * 1024, (0,)),  # quick but misses one frame
        ("detector-heavy", 9.0, 200 * 1024 * 1024, ()),  # accurate and slow
    ]
    executor = ReferenceExecutor("reference")
    for model_id, delay_ms, working_set, mask in models:
        artifact = ReferenceModel.for_workload(
            workload,
            error_mask=mask,
            delay_ms=delay_ms,
            working_set_bytes=working_set,
        )
        entry = ModelEntry(
            model_id=model_id,
            scenario="safety",
            task="detection",
            package_id="reference",
            version=1,
            artifact_ref=artifact_ref_inline(artifact),
            declared_memory_bytes=working_set,
        )
        registry.register(entry)
        executor.load(artifact)
        profile = profile_model(
            executor,
            model_id,
            workload,
            MeasurementConfig(warmup_runs=1, measured_runs=5, workload_id=workload.id),
            DEMO_DEVICE,
        )
        registry.attach_profile(model_id, DEMO_DEVICE.device_id, profile)

    save_devices(os.path.join(directory, "devices.jsonl"), [DEMO_DEVICE])

    store = DataStore(data_dir=os.path.join(directory, "data"))
    for i, (payload, _) in enumerate(workload.samples):
        store.ingest(
            SensorRecord(
                sensor_id="camera1",
                timestamp=1_700_000_000_000 + i * 1000,
                payload=str(payload).encode("utf-8"),
                content_type="text/plain",
            )
        )

    config_path = os.path.join(directory, "config.json")
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "bind_host": "127.0.0.1",
                "bind_port": 8080,
                "registry_path": "registry.jsonl",
                "devices_path": "devices.jsonl",
                "data_dir": "data",
                "default_objective": "accuracy",
                "device_id": "edge0",
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    return config_path


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "demo"
    path = build_demo(target)
    print(f"demo node written; start it with: openei --config {path} serve")
