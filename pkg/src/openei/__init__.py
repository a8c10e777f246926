"""OpenEI: equip an edge node with profiled, selectable, servable models.

The pieces compose in one direction: profiles describe what a model costs
on a device, the registry stores models plus their profiles, the selector
picks the best feasible model for a device, the runtime executes it under
priority scheduling, the resource API exposes algorithms and sensor data
over four-field URIs, and the collaboration layer simulates the cloud/edge
exchanges around all of that.
"""

from .capability import (
    AlemProfile,
    CostModelMeter,
    MeasurementConfig,
    Sample,
    Workload,
    measure_accuracy,
    measure_energy,
    measure_latency,
    measure_memory,
    profile_model,
)
from .datastore import DataStore, SensorRecord
from .executors import ReferenceExecutor, ReferenceModel, RetrainConfig
from .registry import DeviceSpec, ModelEntry, Registry
from .runtime import InferenceTask, Runtime
from .selector import SelectionQuery, SelectionResult, feasible_set, rank, select
from .uris import ResourceUri, format_uri, parse_uri

__version__ = "0.1.0"

__all__ = [
    "AlemProfile",
    "CostModelMeter",
    "DataStore",
    "DeviceSpec",
    "InferenceTask",
    "MeasurementConfig",
    "ModelEntry",
    "ReferenceExecutor",
    "ReferenceModel",
    "Registry",
    "ResourceUri",
    "RetrainConfig",
    "Runtime",
    "Sample",
    "SelectionQuery",
    "SelectionResult",
    "SensorRecord",
    "Workload",
    "feasible_set",
    "format_uri",
    "measure_accuracy",
    "measure_energy",
    "measure_latency",
    "measure_memory",
    "parse_uri",
    "profile_model",
    "rank",
    "select",
]
