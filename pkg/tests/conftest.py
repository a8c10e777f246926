import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable

from openei.capability import AlemProfile, Sample, Workload
from openei.registry import DeviceSpec, ModelEntry, Registry


def make_profile(
    accuracy=0.9,
    latency_ms=10.0,
    energy_mj=50.0,
    memory_bytes=64 * 1024 * 1024,
    **context,
):
    return AlemProfile(
        accuracy=accuracy,
        latency_ms=latency_ms,
        energy_mj=energy_mj,
        memory_bytes=memory_bytes,
        **context,
    )


def make_entry(model_id, scenario="safety", task="detection", package_id="reference", **kwargs):
    return ModelEntry(
        model_id=model_id,
        scenario=scenario,
        task=task,
        package_id=package_id,
        **kwargs,
    )


def make_device(
    device_id="edge0",
    memory_budget_bytes=512 * 1024 * 1024,
    energy_budget_mj=1000.0,
    power_rating_w=5.0,
    compute_capacity=2.0,
):
    return DeviceSpec(
        device_id=device_id,
        memory_budget_bytes=memory_budget_bytes,
        energy_budget_mj=energy_budget_mj,
        power_rating_w=power_rating_w,
        compute_capacity=compute_capacity,
    )


def make_workload(n=4, label_prefix="label"):
    samples = tuple(Sample(f"input-{i}", f"{label_prefix}-{i}") for i in range(n))
    return Workload(id="test-workload", samples=samples, payload_size=32)


@pytest.fixture
def device():
    return make_device()


@pytest.fixture
def workload():
    return make_workload()


@pytest.fixture
def registry():
    return Registry()


@pytest.fixture
def rng():
    return random.Random(0x5EED)
