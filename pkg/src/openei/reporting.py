"""Report rendering: aligned text tables, CSV/JSON files, and figures.

The simulate report path writes a JSON document, a CSV of the step metrics,
and PNG charts next to each other in one output directory, so a run leaves
both machine-diffable and glanceable artifacts behind.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")  # file rendering only; never require a display

import matplotlib.pyplot as plt

from .collab import DataflowReport


def format_table(headers, rows) -> str:
    """Plain aligned columns; numbers are right-aligned."""
    cells = [[str(h) for h in headers]]
    for row in rows:
        cells.append(["" if v is None else str(v) for v in row])
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    numeric = [
        all(_looks_numeric(row[i]) for row in cells[1:]) if len(cells) > 1 else False
        for i in range(len(headers))
    ]
    lines = []
    for r, row in enumerate(cells):
        parts = []
        for i, value in enumerate(row):
            if numeric[i] and r > 0:
                parts.append(value.rjust(widths[i]))
            else:
                parts.append(value.ljust(widths[i]))
        lines.append("  ".join(parts).rstrip())
        if r == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _looks_numeric(text: str) -> bool:
    if not text:
        return True
    try:
        float(text)
        return True
    except ValueError:
        return False


def dataflow_rows(reports: list[DataflowReport]) -> list[list]:
    rows = []
    for report in reports:
        for step in report.steps:
            rows.append(
                [report.flow, step.step, f"{step.latency_s:.6f}", step.bytes_moved]
            )
        rows.append(
            [
                report.flow,
                "TOTAL",
                f"{report.total_latency_s:.6f}",
                report.total_bytes,
            ]
        )
    return rows


def dataflow_table(reports: list[DataflowReport]) -> str:
    return format_table(["flow", "step", "latency_s", "bytes_moved"], dataflow_rows(reports))


def write_dataflow_outputs(reports: list[DataflowReport], out_dir) -> dict[str, str]:
    """Write report.json, metrics.csv, and charts; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    report_path = os.path.join(out_dir, "report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump({"flows": [r.to_dict() for r in reports]}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["report"] = report_path

    csv_path = os.path.join(out_dir, "metrics.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["flow", "step", "latency_s", "bytes_moved"])
        for report in reports:
            for step in report.steps:
                writer.writerow([report.flow, step.step, step.latency_s, step.bytes_moved])
    paths["csv"] = csv_path

    paths["latency_figure"] = _latency_figure(reports, out_dir)
    paths["bytes_figure"] = _bytes_figure(reports, out_dir)
    return paths


def _latency_figure(reports: list[DataflowReport], out_dir) -> str:
    fig, ax = plt.subplots(figsize=(7, 4))
    flows = [r.flow for r in reports]
    bottoms = [0.0] * len(reports)
    step_names = []
    for r in reports:
        for s in r.steps:
            if s.step not in step_names:
                step_names.append(s.step)
    for step_name in step_names:
        heights = []
        for report in reports:
            heights.append(
                sum(s.latency_s for s in report.steps if s.step == step_name)
            )
        ax.bar(flows, heights, bottom=bottoms, label=step_name)
        bottoms = [b + h for b, h in zip(bottoms, heights)]
    ax.set_ylabel("latency (s)")
    ax.set_title("End-to-end latency by dataflow")
    ax.legend(fontsize=8)
    path = os.path.join(out_dir, "latency_by_flow.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _bytes_figure(reports: list[DataflowReport], out_dir) -> str:
    fig, ax = plt.subplots(figsize=(7, 4))
    flows = [r.flow for r in reports]
    categories = [
        ("data", [r.data_bytes for r in reports]),
        ("model", [r.model_bytes for r in reports]),
        ("results", [r.result_bytes for r in reports]),
    ]
    bottoms = [0.0] * len(reports)
    for label, values in categories:
        ax.bar(flows, values, bottom=bottoms, label=label)
        bottoms = [b + v for b, v in zip(bottoms, values)]
    ax.set_ylabel("bytes moved")
    ax.set_title("Network traffic by dataflow")
    ax.legend(fontsize=8)
    path = os.path.join(out_dir, "bytes_by_flow.png")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def profile_row(profile) -> list:
    return [
        profile.model_id,
        profile.device_id,
        f"{profile.accuracy:.4f}",
        f"{profile.latency_ms:.3f}",
        f"{profile.energy_mj:.3f}",
        profile.memory_bytes,
    ]


def profile_table(profiles) -> str:
    return format_table(
        ["model_id", "device_id", "accuracy", "latency_ms", "energy_mj", "memory_bytes"],
        [profile_row(p) for p in profiles],
    )


def selection_table(result) -> str:
    return format_table(
        ["model_id", "package_id", "objective", "objective_value", "feasible_count"],
        [
            [
                result.model_id,
                result.package_id,
                result.objective,
                f"{result.objective_value:.6g}",
                result.feasible_count,
            ]
        ],
    )


def stats_table(snapshot: dict) -> str:
    rows = []
    for priority, depth in sorted(snapshot.get("queue_depth", {}).items()):
        rows.append([f"queue_depth.{priority}", depth])
    for priority, count in sorted(snapshot.get("dispatched", {}).items()):
        rows.append([f"dispatched.{priority}", count])
    rows.append(["completed", snapshot.get("completed", 0)])
    rows.append(["failed", snapshot.get("failed", 0)])
    rows.append(["deadline_misses", snapshot.get("deadline_misses", 0)])
    for model_id, info in sorted(snapshot.get("latency", {}).items()):
        rows.append([f"latency.{model_id}.mean_ms", f"{info['mean_ms']:.3f}"])
    return format_table(["counter", "value"], rows)
