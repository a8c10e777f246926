"""Independent reference implementations the tests check the package against.

Everything here is deliberately written from the contracts, not from the
package code: plain dict rows, linear scans, and explicit comparison
cascades instead of the library's sort keys.
"""

from __future__ import annotations

import numpy as np

# --- constrained selection ------------------------------------------------
#
# Rows are dicts: model_id, package_id, accuracy, latency, energy, memory.
# Constraints: min_accuracy, max_latency, max_energy, max_memory (None = unset).
# Budgets: device energy/memory ceilings, always active.


def row_feasible(row, constraints, budgets) -> bool:
    if constraints.get("min_accuracy") is not None:
        if row["accuracy"] < constraints["min_accuracy"]:
            return False
    if constraints.get("max_latency") is not None:
        if row["latency"] > constraints["max_latency"]:
            return False
    energy_cap = budgets["energy_budget"]
    if constraints.get("max_energy") is not None:
        energy_cap = min(energy_cap, constraints["max_energy"])
    if row["energy"] > energy_cap:
        return False
    memory_cap = budgets["memory_budget"]
    if constraints.get("max_memory") is not None:
        memory_cap = min(memory_cap, constraints["max_memory"])
    if row["memory"] > memory_cap:
        return False
    return True


def row_violations(row, constraints, budgets) -> list[str]:
    bad = []
    if constraints.get("min_accuracy") is not None and row["accuracy"] < constraints["min_accuracy"]:
        bad.append("accuracy")
    if constraints.get("max_latency") is not None and row["latency"] > constraints["max_latency"]:
        bad.append("latency")
    energy_cap = budgets["energy_budget"]
    if constraints.get("max_energy") is not None:
        energy_cap = min(energy_cap, constraints["max_energy"])
    if row["energy"] > energy_cap:
        bad.append("energy")
    memory_cap = budgets["memory_budget"]
    if constraints.get("max_memory") is not None:
        memory_cap = min(memory_cap, constraints["max_memory"])
    if row["memory"] > memory_cap:
        bad.append("memory")
    return bad


def _beats(a, b, objective) -> bool:
    """True when row a should be picked over row b (documented tie-break chain)."""
    if objective == "accuracy":
        if a["accuracy"] != b["accuracy"]:
            return a["accuracy"] > b["accuracy"]
    else:
        if a[objective] != b[objective]:
            return a[objective] < b[objective]
    if a["accuracy"] != b["accuracy"]:
        return a["accuracy"] > b["accuracy"]
    for dim in ("latency", "energy", "memory"):
        if dim == objective:
            continue
        if a[dim] != b[dim]:
            return a[dim] < b[dim]
    if a["model_id"] != b["model_id"]:
        return a["model_id"] < b["model_id"]
    return a["package_id"] < b["package_id"]


def exhaustive_select(rows, objective, constraints, budgets):
    """Literal scan of the optimization: returns (best row or None, feasible count,
    per-dimension violation counts)."""
    feasible = [row for row in rows if row_feasible(row, constraints, budgets)]
    best = None
    for row in feasible:
        if best is None or _beats(row, best, objective):
            best = row
    counts = {"accuracy": 0, "latency": 0, "energy": 0, "memory": 0}
    for row in rows:
        for dim in row_violations(row, constraints, budgets):
            counts[dim] += 1
    return best, len(feasible), counts


# --- scheduling ----------------------------------------------------------

PRIORITY_ORDER = {"realtime": 0, "high": 1, "normal": 2, "low": 3}


def reference_dispatch_order(submissions):
    """Expected dispatch order for (task_id, priority) pairs submitted in
    sequence: priority descending, then submission order (stable sort)."""
    indexed = list(enumerate(submissions))
    indexed.sort(key=lambda item: (PRIORITY_ORDER[item[1][1]], item[0]))
    return [task_id for _, (task_id, _) in indexed]


# --- datastore -------------------------------------------------------------


def brute_force_range(ingests, sensor_id, start, end):
    """Filter the raw ingest log; ingests are (sensor_id, timestamp, payload)
    in arrival order. Returns (timestamp, payload) pairs in result order."""
    matched = [
        (timestamp, payload)
        for sid, timestamp, payload in ingests
        if sid == sensor_id and start <= timestamp <= end
    ]
    matched.sort(key=lambda pair: pair[0])  # stable: arrival order on ties
    return matched


# --- proportional allocation ---------------------------------------------


def largest_remainder(total_units, capacities):
    """Hand-rolled largest-remainder apportionment over (edge_id, capacity)."""
    cap_sum = sum(c for _, c in capacities)
    exact = {eid: total_units * c / cap_sum for eid, c in capacities}
    shares = {eid: int(np.floor(v)) for eid, v in exact.items()}
    leftover = total_units - sum(shares.values())
    order = sorted(exact, key=lambda eid: (-(exact[eid] - shares[eid]), eid))
    for eid in order[:leftover]:
        shares[eid] += 1
    return shares


# --- linear retraining ------------------------------------------------


def gradient_descent_losses(w0, inputs, targets, learning_rate, passes):
    """Re-implementation of the full-batch update rule; returns the loss per
    pass including the initial loss."""
    X = np.asarray(inputs, dtype=float)
    y = np.asarray(targets, dtype=float)
    w = np.asarray(w0, dtype=float).copy()
    n = len(y)

    def loss(weights):
        r = X @ weights - y
        return float(np.mean(r * r))

    losses = [loss(w)]
    for _ in range(passes):
        w = w - learning_rate * (2.0 / n) * (X.T @ (X @ w - y))
        losses.append(loss(w))
    return w, losses
