"""Resource-oriented HTTP surface: algorithms and data behind four-field URIs.

GET serves data reads and algorithm calls whose input is referenced by
arguments; POST carries the input payload in the request body.  Algorithm
calls run selection first (objective and thresholds from arguments, budgets
from the serving device), then submit an inference task; ``urgent=true``
maps to realtime priority.  Every algorithm response carries a selection
trace whose chosen model is re-checked against the request's constraints at
this layer.

Error payloads are structured: {"code", "message", "detail"}.
"""

from __future__ import annotations

import base64
import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .config import ServiceConfig
from .datastore import DataStore, SensorRecord
from .errors import (
    BindFailure,
    Infeasible,
    MissingArg,
    OpenEIError,
    UnknownAlgorithm,
    UnsupportedArg,
)
from .registry import DeviceSpec, Registry
from .runtime import InferenceTask, Runtime
from .selector import SelectionQuery, SelectionResult, select
from .uris import ResourceUri, parse_uri

# argument keys consumed by the service itself; anything else on an
# algorithm call is treated as an input reference
RESERVED_ARGS = frozenset(
    {
        "objective",
        "min_accuracy",
        "max_latency",
        "max_energy",
        "max_memory",
        "urgent",
        "priority",
        "device",
        "deadline_ms",
        "sensor",
        "timestamp",
        "start",
        "end",
    }
)

_HTTP_STATUS = {
    "malformed_uri": 400,
    "missing_arg": 400,
    "unsupported_arg": 400,
    "invalid_range": 400,
    "config_error": 400,
    "unknown_sensor": 404,
    "no_data": 404,
    "unknown_algorithm": 404,
    "unknown_model": 404,
    "unknown_device": 404,
    "infeasible": 409,
    "queue_full": 503,
}


@dataclass
class ApiResponse:
    status: str  # "ok" | "error"
    body: dict
    selection_trace: dict | None = None

    def to_dict(self) -> dict:
        payload = {"status": self.status, "body": self.body}
        if self.selection_trace is not None:
            payload["selection_trace"] = self.selection_trace
        return payload

    @classmethod
    def ok(cls, body: dict, selection_trace: dict | None = None) -> "ApiResponse":
        return cls(status="ok", body=body, selection_trace=selection_trace)

    @classmethod
    def from_error(cls, exc: OpenEIError) -> "ApiResponse":
        return cls(
            status="error",
            body={"code": exc.code, "message": str(exc), "detail": exc.detail},
        )


def _record_body(record: SensorRecord) -> dict:
    return {
        "sensor_id": record.sensor_id,
        "timestamp": record.timestamp,
        "content_type": record.content_type,
        "payload_b64": base64.b64encode(record.payload).decode("ascii"),
    }


def _trace(result: SelectionResult) -> dict:
    return {
        "model_id": result.model_id,
        "package_id": result.package_id,
        "objective": result.objective,
        "objective_value": result.objective_value,
        "feasible_count": result.feasible_count,
    }


def _float_arg(uri: ResourceUri, key: str) -> float | None:
    raw = uri.arg(key)
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        raise UnsupportedArg(f"argument {key}={raw!r} is not a number")


def _int_arg(uri: ResourceUri, key: str) -> int:
    raw = uri.arg(key)
    if raw is None:
        raise MissingArg(key)
    try:
        return int(raw)
    except ValueError:
        raise UnsupportedArg(f"argument {key}={raw!r} is not an integer")


class Api:
    """Routes parsed resource URIs onto the datastore, selector, and runtime."""

    def __init__(
        self,
        registry: Registry,
        datastore: DataStore,
        runtime: Runtime,
        devices: dict[str, DeviceSpec],
        config: ServiceConfig,
    ):
        self.registry = registry
        self.datastore = datastore
        self.runtime = runtime
        self.devices = devices
        self.config = config

    def dispatch(self, method: str, path_and_query: str, body: bytes) -> ApiResponse:
        try:
            uri = parse_uri(path_and_query)
            if uri.resource_kind == "ei_data":
                return self.handle_data(uri)
            return self.handle_algorithm(uri, body if method == "POST" else None)
        except OpenEIError as exc:
            return ApiResponse.from_error(exc)

    # --- data -------------------------------------------------------------

    def handle_data(self, uri: ResourceUri) -> ApiResponse:
        if uri.data_type == "realtime":
            stamp = uri.arg("timestamp")
            if stamp is not None and stamp != "present_time":
                # reinterpreting arbitrary timestamps as "latest" would hide
                # caller bugs; only the documented spelling is accepted
                raise UnsupportedArg(
                    f"realtime supports timestamp=present_time only, got {stamp!r}"
                )
            record = self.datastore.query_realtime(uri.name)
            return ApiResponse.ok(_record_body(record))
        start = _int_arg(uri, "start")
        end = _int_arg(uri, "end")
        records = self.datastore.query_historical(uri.name, start, end)
        return ApiResponse.ok(
            {"count": len(records), "records": [_record_body(r) for r in records]}
        )

    # --- algorithms -------------------------------------------------------

    def _build_query(self, uri: ResourceUri) -> SelectionQuery:
        objective = uri.arg("objective", self.config.default_objective)
        device_id = uri.arg("device", self.config.device_id)
        try:
            return SelectionQuery(
                scenario=uri.scenario,
                task=uri.name,
                objective=objective,
                device_id=device_id,
                min_accuracy=_float_arg(uri, "min_accuracy"),
                max_latency_ms=_float_arg(uri, "max_latency"),
                max_energy_mj=_float_arg(uri, "max_energy"),
                max_memory_bytes=_float_arg(uri, "max_memory"),
            )
        except ValueError as exc:
            raise UnsupportedArg(str(exc))

    def _resolve_input(self, uri: ResourceUri, body: bytes | None) -> bytes:
        if body is not None and len(body) > 0:
            return body
        sensor = uri.arg("sensor")
        if sensor is not None:
            return self.datastore.query_realtime(sensor).payload
        for key, value in uri.args:
            if key not in RESERVED_ARGS:
                return value.encode("utf-8")
        raise MissingArg("input")

    def handle_algorithm(self, uri: ResourceUri, body: bytes | None) -> ApiResponse:
        query = self._build_query(uri)
        if not self.registry.lookup(uri.scenario, uri.name):
            raise UnknownAlgorithm(
                f"no models registered for {uri.scenario}/{uri.name}"
            )
        device = self.devices.get(query.device_id)
        result = select(query, self.registry, device)
        if not result.satisfies(query, device):  # pragma: no cover - selector guarantees this
            raise Infeasible(
                "selected model fails the post-check", violations={}, candidates=0
            )
        payload = self._resolve_input(uri, body)
        priority = uri.arg("priority", "normal")
        if uri.arg("urgent") in ("true", "1", "yes"):
            priority = "realtime"
        task = InferenceTask(
            model_id=result.model_id,
            package_id=result.package_id,
            payload=payload,
            priority=priority,
            deadline_ms=_float_arg(uri, "deadline_ms"),
        )
        handle = self.runtime.submit(task)
        task_result = handle.result(timeout=30.0)
        return ApiResponse.ok(
            {
                "output": task_result.output,
                "task_id": task_result.task_id,
                "priority": priority,
                "deadline_missed": task_result.deadline_missed,
            },
            selection_trace=_trace(result),
        )


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def _respond(self, status_code: int, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status_code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _serve(self, method: str) -> None:
        api: Api = self.server.api  # type: ignore[attr-defined]
        if self.path == "/stats":
            self._respond(200, {"status": "ok", "body": api.runtime.telemetry.snapshot()})
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        try:
            response = api.dispatch(method, self.path, body)
        except Exception as exc:  # last-resort guard: a request must never kill the worker
            self._respond(
                500,
                {
                    "status": "error",
                    "body": {"code": "internal", "message": str(exc), "detail": {}},
                },
            )
            return
        if response.status == "ok":
            self._respond(200, response.to_dict())
        else:
            code = response.body.get("code", "internal")
            self._respond(_HTTP_STATUS.get(code, 500), response.to_dict())

    def do_GET(self) -> None:  # noqa: N802 - http.server naming
        self._serve("GET")

    def do_POST(self) -> None:  # noqa: N802
        self._serve("POST")

    def log_message(self, format, *args):  # silence default stderr chatter
        pass


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True


class EdgeService:
    """A bound, running service; ``stop`` drains in-flight tasks before exit."""

    def __init__(self, api: Api, host: str, port: int):
        try:
            self._server = _Server((host, port), _Handler)
        except OSError as exc:
            raise BindFailure(f"cannot bind {host}:{port}: {exc}")
        self._server.api = api  # type: ignore[attr-defined]
        self.api = api
        self._thread = threading.Thread(
            target=self._server.serve_forever, name="openei-http", daemon=True
        )

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> "EdgeService":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._thread.join(timeout=5.0)
        self._server.server_close()
        self.api.runtime.shutdown(drain=True)


def serve(api: Api, host: str, port: int) -> EdgeService:
    """Bind and start serving; returns the running service."""
    return EdgeService(api, host, port).start()


def wire_from_config(config: ServiceConfig) -> Api:
    """Assemble registry, datastore, runtime, and devices per the config.

    Missing registry/devices files mean an empty service, not an error: the
    point of deploy-and-play is that a fresh node still answers requests.
    The reference executor is always registered.
    """
    import os

    from .executors import ReferenceExecutor
    from .registry import load_devices

    registry_path = config.resolve_path(config.registry_path)
    if os.path.exists(registry_path):
        registry = Registry.load(registry_path)
    else:
        registry = Registry(path=registry_path)

    devices = config.device_specs()
    devices_path = config.resolve_path(config.devices_path)
    if os.path.exists(devices_path):
        devices.update(load_devices(devices_path))

    datastore = DataStore(
        data_dir=config.resolve_path(config.data_dir), ring_capacity=config.ring_capacity
    )
    runtime = Runtime(
        registry,
        queue_capacity=config.queue_capacity,
        workers=config.workers,
    )
    runtime.register_executor(ReferenceExecutor())
    # every package id named by a registered model gets a reference adapter
    for entry in registry.entries():
        if entry.package_id not in runtime.packages():
            runtime.register_executor(ReferenceExecutor(entry.package_id))
    return Api(registry, datastore, runtime, devices, config)
