"""Service configuration: one JSON file, overridable per field via OPENEI_* env vars.

All state paths (registry, data directory) come from the same config so the
serve, profile, and select commands operate on the same registry.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .registry import DeviceSpec

ENV_PREFIX = "OPENEI_"


@dataclass
class ServiceConfig:
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080
    registry_path: str = "registry.jsonl"
    devices_path: str = "devices.jsonl"
    data_dir: str = "data"
    # the walkthrough default for algorithm calls; override per request
    # with an objective= argument or service-wide here
    default_objective: str = "accuracy"
    ring_capacity: int = 1024
    device_id: str = "edge0"
    queue_capacity: int = 256
    workers: int = 1
    devices: list[dict] = field(default_factory=list)

    def resolve_path(self, value: str) -> str:
        base = getattr(self, "_base_dir", "")
        if base and not os.path.isabs(value):
            return os.path.join(base, value)
        return value

    def device_specs(self) -> dict[str, DeviceSpec]:
        specs = {}
        for record in self.devices:
            try:
                spec = DeviceSpec.from_record(record)
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad device record in config: {exc}")
            specs[spec.device_id] = spec
        return specs


_INT_FIELDS = {"bind_port", "ring_capacity", "queue_capacity", "workers"}


def _apply_env(config: ServiceConfig, environ) -> None:
    for spec_field in fields(ServiceConfig):
        if spec_field.name == "devices":
            continue
        env_name = ENV_PREFIX + spec_field.name.upper()
        if env_name not in environ:
            continue
        raw = environ[env_name]
        if spec_field.name in _INT_FIELDS:
            try:
                value = int(raw)
            except ValueError:
                raise ConfigError(f"{env_name} must be an integer, got {raw!r}")
        else:
            value = raw
        setattr(config, spec_field.name, value)


def load_config(path: str | None = None, environ=None) -> ServiceConfig:
    """Load config from a JSON file, then layer OPENEI_* overrides on top.

    With no path, defaults plus environment are used.  Paths inside the file
    resolve relative to the file's directory.
    """
    environ = os.environ if environ is None else environ
    config = ServiceConfig()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc.msg}")
        if not isinstance(raw, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        known = {spec_field.name for spec_field in fields(ServiceConfig)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"config {path} has unknown keys: {unknown}")
        for key, value in raw.items():
            setattr(config, key, value)
        config._base_dir = os.path.dirname(os.path.abspath(path))
    _apply_env(config, environ)
    if config.default_objective not in ("latency", "accuracy", "energy", "memory"):
        raise ConfigError(
            f"default_objective {config.default_objective!r} is not a selection objective"
        )
    return config
