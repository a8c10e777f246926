"""Exception hierarchy shared across the toolkit.

Every error carries a short machine-readable ``code`` so the HTTP layer and
the CLI can map failures onto structured payloads and exit codes without
matching on message text. ``detail`` holds optional structured context
(violation counts, offending line numbers, field names).
"""

from __future__ import annotations


class OpenEIError(Exception):
    """Base class for all toolkit errors."""

    code = "internal"

    def __init__(self, message: str, detail: dict | None = None):
        super().__init__(message)
        self.detail: dict = dict(detail or {})


# --- capability / profiling ---------------------------------------------


class ExecutorFailure(OpenEIError):
    code = "executor_failure"


class EmptyWorkload(OpenEIError):
    code = "empty_workload"


class ReportUnavailable(OpenEIError):
    code = "report_unavailable"


class MeterUnavailable(OpenEIError):
    code = "meter_unavailable"


# --- registry -------------------------------------------------------------


class DuplicateId(OpenEIError):
    code = "duplicate_id"


class VersionRegression(OpenEIError):
    code = "version_regression"


class UnknownModel(OpenEIError):
    code = "unknown_model"


class CorruptFile(OpenEIError):
    """Raised when a persisted file fails to parse; names the offending line."""

    code = "corrupt_file"

    def __init__(self, path, line_number: int, message: str):
        super().__init__(
            f"{path}:{line_number}: {message}",
            detail={"path": str(path), "line_number": line_number},
        )
        self.path = str(path)
        self.line_number = line_number


# --- selector ---------------------------------------------------------


class Infeasible(OpenEIError):
    """No candidate satisfies the active constraints.

    ``violations`` counts, per constraint dimension, how many candidates
    failed it (a candidate can violate several dimensions at once).
    """

    code = "infeasible"

    def __init__(self, message: str, violations: dict[str, int], candidates: int = 0):
        super().__init__(
            message, detail={"violations": dict(violations), "candidates": candidates}
        )
        self.violations = dict(violations)
        self.candidates = candidates


class UnknownDevice(OpenEIError):
    code = "unknown_device"


class MissingProfile(OpenEIError):
    code = "missing_profile"


# --- runtime ------------------------------------------------------------


class UnknownPackage(OpenEIError):
    code = "unknown_package"


class QueueFull(OpenEIError):
    code = "queue_full"


class ArtifactMissing(OpenEIError):
    code = "artifact_missing"


class RetrainUnsupported(OpenEIError):
    code = "retrain_unsupported"


class EmptyDataset(OpenEIError):
    code = "empty_dataset"


# --- datastore ------------------------------------------------------------


class UnknownSensor(OpenEIError):
    code = "unknown_sensor"


class NoData(OpenEIError):
    code = "no_data"


class InvalidRange(OpenEIError):
    code = "invalid_range"


# --- resource API -----------------------------------------------------


class MalformedUri(OpenEIError):
    """URI does not match the four-field grammar; ``field`` names the culprit."""

    code = "malformed_uri"

    def __init__(self, field: str, message: str):
        super().__init__(message, detail={"field": field})
        self.field = field


class MissingArg(OpenEIError):
    code = "missing_arg"

    def __init__(self, name: str):
        super().__init__(f"missing required argument {name!r}", detail={"arg": name})
        self.arg = name


class UnsupportedArg(OpenEIError):
    code = "unsupported_arg"


class UnknownAlgorithm(OpenEIError):
    code = "unknown_algorithm"


class BindFailure(OpenEIError):
    code = "bind_failure"


# --- collaboration ----------------------------------------------------


class SimulatedDrop(OpenEIError):
    code = "simulated_drop"


class StaleVersion(OpenEIError):
    code = "stale_version"


class ShapeMismatch(OpenEIError):
    code = "shape_mismatch"


class EmptyStage(OpenEIError):
    code = "empty_stage"


class NoCapacity(OpenEIError):
    code = "no_capacity"


# --- CLI / config -----------------------------------------------------


class ConfigError(OpenEIError):
    code = "config_error"


class WorkloadParse(OpenEIError):
    code = "workload_parse"


class FixtureParse(OpenEIError):
    code = "fixture_parse"
