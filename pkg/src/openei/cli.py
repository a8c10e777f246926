"""Operator command line: serve, profile, select, ingest, simulate, stats.

Exit codes are a stable scripting contract: 0 success, 1 usage or config
problems, 2 infeasible selection, 3 runtime/IO failures.  Every subcommand
validates its inputs before touching any state, so a parse error never
leaves partial writes behind.
"""

from __future__ import annotations

import argparse
import base64
import json
import signal
import sys
import time
import urllib.error
import urllib.request
from importlib import resources

from . import collab, reporting
from .api import serve, wire_from_config
from .capability import MeasurementConfig, Sample, Workload, profile_model
from .config import load_config
from .errors import (
    ConfigError,
    FixtureParse,
    Infeasible,
    OpenEIError,
    UnknownDevice,
    WorkloadParse,
)
from .executors import ReferenceExecutor
from .registry import Registry, load_devices
from .runtime import resolve_artifact_ref
from .selector import OBJECTIVES, SelectionQuery, select

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_RUNTIME = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the CLI contract reserves 2 for
    # infeasible selections, so usage problems exit 1 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="openei", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="path to the service config JSON")
    parser.add_argument(
        "--output",
        choices=("table", "json"),
        default="table",
        help="human table or machine JSON",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("serve", help="run the resource API service until interrupted")

    p = sub.add_parser("profile", help="measure a model on a device and store the profile")
    p.add_argument("model_id")
    p.add_argument("device_id")
    p.add_argument("workload_path")
    p.add_argument("--warmup-runs", type=int, default=None)
    p.add_argument("--measured-runs", type=int, default=None)

    p = sub.add_parser("select", help="pick the best feasible model for a device")
    p.add_argument("scenario")
    p.add_argument("task")
    p.add_argument("--objective", choices=OBJECTIVES, default=None)
    p.add_argument("--device", default=None)
    p.add_argument("--min-accuracy", type=float, default=None)
    p.add_argument("--max-latency", type=float, default=None)
    p.add_argument("--max-energy", type=float, default=None)
    p.add_argument("--max-memory", type=float, default=None)

    p = sub.add_parser("ingest", help="append sensor records to the local store")
    p.add_argument("--file", help="JSONL file of records")
    p.add_argument("--sensor", help="sensor id for a single record")
    p.add_argument("--payload", help="payload text for a single record")
    p.add_argument("--timestamp", type=int, default=None, help="epoch ms; defaults to now")
    p.add_argument("--content-type", default="text/plain")

    p = sub.add_parser("simulate", help="run a collaboration dataflow on a fixture")
    p.add_argument(
        "--fixture",
        default="slow-link",
        help="fixture path, or 'slow-link' for the bundled one",
    )
    p.add_argument("--flow", choices=collab.DATAFLOWS + ("all",), required=True)
    p.add_argument("--out-dir", help="write report.json, metrics.csv and figures here")

    sub.add_parser("stats", help="query telemetry from a running service")
    return parser


def _load_workload(path) -> Workload:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        samples = tuple(
            Sample(item["input"], item["label"]) for item in raw["samples"]
        )
        return Workload(
            id=raw.get("id", "workload"),
            samples=samples,
            payload_size=int(raw.get("payload_size", 0)),
        )
    except OSError as exc:
        raise WorkloadParse(f"cannot read workload {path}: {exc}")
    except (KeyError, TypeError, ValueError) as exc:
        raise WorkloadParse(f"bad workload file {path}: {exc}")


def _emit(args, table_text: str, payload: dict) -> None:
    if args.output == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(table_text)


def _devices_for(config) -> dict:
    devices = config.device_specs()
    devices_path = config.resolve_path(config.devices_path)
    try:
        devices.update(load_devices(devices_path))
    except FileNotFoundError:
        pass
    return devices


def cmd_serve(args, config) -> int:
    api = wire_from_config(config)
    service = serve(api, config.bind_host, config.bind_port)
    host, port = service.address
    print(f"serving on http://{host}:{port}", flush=True)

    stop = {"requested": False}

    def _signal_handler(signum, frame):
        stop["requested"] = True

    signal.signal(signal.SIGINT, _signal_handler)
    signal.signal(signal.SIGTERM, _signal_handler)
    try:
        while not stop["requested"]:
            time.sleep(0.2)
    finally:
        service.stop()
        print("shut down cleanly", flush=True)
    return EXIT_OK


def cmd_profile(args, config) -> int:
    registry = Registry.load(config.resolve_path(config.registry_path))
    devices = _devices_for(config)
    device = devices.get(args.device_id)
    if device is None:
        raise UnknownDevice(f"device {args.device_id!r} is not configured")
    workload = _load_workload(args.workload_path)
    entry = registry.get(args.model_id)
    artifact = resolve_artifact_ref(entry.artifact_ref)
    if artifact is None:
        raise OpenEIError(
            f"artifact for {args.model_id!r} is not resolvable from {entry.artifact_ref!r}"
        )
    executor = ReferenceExecutor(entry.package_id)
    executor.load(artifact)
    kwargs = {}
    if args.warmup_runs is not None:
        kwargs["warmup_runs"] = args.warmup_runs
    if args.measured_runs is not None:
        kwargs["measured_runs"] = args.measured_runs
    mconfig = MeasurementConfig(workload_id=workload.id, **kwargs)
    profile = profile_model(executor, args.model_id, workload, mconfig, device)
    registry.attach_profile(args.model_id, args.device_id, profile)
    _emit(args, reporting.profile_table([profile]), profile.to_record())
    return EXIT_OK


def cmd_select(args, config) -> int:
    registry = Registry.load(config.resolve_path(config.registry_path))
    devices = _devices_for(config)
    device_id = args.device or config.device_id
    query = SelectionQuery(
        scenario=args.scenario,
        task=args.task,
        objective=args.objective or config.default_objective,
        device_id=device_id,
        min_accuracy=args.min_accuracy,
        max_latency_ms=args.max_latency,
        max_energy_mj=args.max_energy,
        max_memory_bytes=args.max_memory,
    )
    result = select(query, registry, devices.get(device_id))
    payload = {
        "model_id": result.model_id,
        "package_id": result.package_id,
        "objective": result.objective,
        "objective_value": result.objective_value,
        "feasible_count": result.feasible_count,
    }
    _emit(args, reporting.selection_table(result), payload)
    return EXIT_OK


def cmd_ingest(args, config) -> int:
    from .datastore import DataStore, SensorRecord

    records = []
    if args.file:
        try:
            with open(args.file, encoding="utf-8") as fh:
                for line_number, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    raw = json.loads(line)
                    payload = (
                        base64.b64decode(raw["payload_b64"])
                        if "payload_b64" in raw
                        else str(raw.get("payload", "")).encode("utf-8")
                    )
                    records.append(
                        SensorRecord(
                            sensor_id=raw["sensor_id"],
                            timestamp=int(raw["timestamp"]),
                            payload=payload,
                            content_type=raw.get("content_type", "text/plain"),
                        )
                    )
        except OSError as exc:
            raise ConfigError(f"cannot read {args.file}: {exc}")
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad record in {args.file}: {exc}")
    elif args.sensor and args.payload is not None:
        timestamp = args.timestamp if args.timestamp is not None else int(time.time() * 1000)
        records.append(
            SensorRecord(
                sensor_id=args.sensor,
                timestamp=timestamp,
                payload=args.payload.encode("utf-8"),
                content_type=args.content_type,
            )
        )
    else:
        raise ConfigError("ingest needs --file or both --sensor and --payload")

    store = DataStore(
        data_dir=config.resolve_path(config.data_dir), ring_capacity=config.ring_capacity
    )
    for record in records:
        store.ingest(record)
    _emit(
        args,
        f"ingested {len(records)} record(s)",
        {"ingested": len(records)},
    )
    return EXIT_OK


def _load_named_fixture(name: str):
    if name == "slow-link":
        ref = resources.files("openei").joinpath("fixtures/slow_link.json")
        return collab.load_fixture(json.loads(ref.read_text(encoding="utf-8")))
    return collab.load_fixture(name)


def cmd_simulate(args, config) -> int:
    fixture = _load_named_fixture(args.fixture)
    flows = collab.DATAFLOWS if args.flow == "all" else (args.flow,)
    reports = [collab.run_dataflow(flow, fixture) for flow in flows]
    payload = {"flows": [r.to_dict() for r in reports]}
    written = {}
    if args.out_dir:
        written = reporting.write_dataflow_outputs(reports, args.out_dir)
    _emit(args, reporting.dataflow_table(reports), payload)
    if written and args.output == "table":
        for kind, path in sorted(written.items()):
            print(f"wrote {kind}: {path}")
    return EXIT_OK


def cmd_stats(args, config) -> int:
    url = f"http://{config.bind_host}:{config.bind_port}/stats"
    try:
        with urllib.request.urlopen(url, timeout=5.0) as response:
            payload = json.loads(response.read().decode("utf-8"))
    except (urllib.error.URLError, OSError) as exc:
        raise OpenEIError(f"cannot reach service at {url}: {exc}")
    snapshot = payload.get("body", {})
    _emit(args, reporting.stats_table(snapshot), snapshot)
    return EXIT_OK


_COMMANDS = {
    "serve": cmd_serve,
    "profile": cmd_profile,
    "select": cmd_select,
    "ingest": cmd_ingest,
    "simulate": cmd_simulate,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"openei: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args, config)
    except Infeasible as exc:
        print(f"openei: infeasible: {exc}", file=sys.stderr)
        print(f"  violations: {exc.violations}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, WorkloadParse, FixtureParse) as exc:
        print(f"openei: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OpenEIError as exc:
        print(f"openei: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"openei: io error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
