"""Deterministic reference executor standing in for production inference packages.

Two artifact kinds exist:

* ``classifier`` -- answers come from a lookup table built from a labeled
  workload.  An error mask marks sample positions that get a deliberately
  wrong answer, so programmed accuracies are exact and reproducible.
* ``linear`` -- a weight vector; inference is a dot product and retraining
  runs full-batch gradient descent on mean squared loss.

Both kinds honor a programmed per-inference delay (busy-wait, so measured
wall time tracks the programmed value tightly even under scheduler noise)
and a declared working set surfaced through ``resource_report``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import EmptyDataset, ExecutorFailure, RetrainUnsupported

# Peak reports never drop below this floor: it models interpreter/dispatch
# overhead and keeps the memory invariant (> 0 bytes) true for no-op models.
DISPATCH_BASELINE_BYTES = 64 * 1024

# Answer returned for masked (deliberately wrong) or unknown inputs. Distinct
# from any real label as long as workloads avoid the sentinel.
WRONG_ANSWER = "__wrong__"


@runtime_checkable
class Executor(Protocol):
    """Contract every inference package adapter must satisfy.

    ``load`` binds a model artifact; ``infer`` must be deterministic for the
    reference executor given (artifact, input).  ``resource_report`` returns
    the peak bytes allocated while running; executors that cannot report
    raise instead.  ``retrain`` may raise RetrainUnsupported.
    """

    package_id: str

    def load(self, artifact) -> None: ...

    def infer(self, payload): ...

    def retrain(self, dataset, config): ...

    def resource_report(self) -> int: ...


@dataclass
class RetrainConfig:
    """Local-retraining parameters; ``sample_count`` is recorded for merge weighting."""

    passes: int = 1
    learning_rate: float = 0.01
    sample_count: int = 0

    def __post_init__(self):
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class ReferenceModel:
    """Serializable artifact for the reference executor."""

    kind: str = "classifier"
    delay_ms: float = 0.0
    working_set_bytes: int = 0
    answers: dict[str, str] | None = None
    constant_output: str | None = None
    weights: list[float] | None = None
    loss_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("classifier", "linear"):
            raise ValueError(f"unknown reference model kind {self.kind!r}")
        if self.delay_ms < 0:
            raise ValueError("delay_ms must be >= 0")
        if self.working_set_bytes < 0:
            raise ValueError("working_set_bytes must be >= 0")

    @classmethod
    def for_workload(
        cls,
        workload,
        *,
        error_mask: Iterable[int] = (),
        delay_ms: float = 0.0,
        working_set_bytes: int = 0,
    ) -> "ReferenceModel":
        """Build a classifier that answers the workload's labels.

        Positions listed in ``error_mask`` answer WRONG_ANSWER instead, so
        accuracy over that workload is exactly 1 - len(mask)/len(samples)
        when payloads are distinct.
        """
        mask = set(error_mask)
        answers = {}
        for i, sample in enumerate(workload.samples):
            key = payload_key(sample.payload)
            answers[key] = WRONG_ANSWER if i in mask else sample.label
        return cls(
            kind="classifier",
            delay_ms=delay_ms,
            working_set_bytes=working_set_bytes,
            answers=answers,
        )

    @classmethod
    def linear(
        cls,
        weights: Sequence[float],
        *,
        delay_ms: float = 0.0,
        working_set_bytes: int = 0,
    ) -> "ReferenceModel":
        return cls(
            kind="linear",
            delay_ms=delay_ms,
            working_set_bytes=working_set_bytes,
            weights=[float(w) for w in weights],
        )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "delay_ms": self.delay_ms,
            "working_set_bytes": self.working_set_bytes,
            "answers": self.answers,
            "constant_output": self.constant_output,
            "weights": self.weights,
            "loss_history": list(self.loss_history),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReferenceModel":
        return cls(
            kind=data.get("kind", "classifier"),
            delay_ms=float(data.get("delay_ms", 0.0)),
            working_set_bytes=int(data.get("working_set_bytes", 0)),
            answers=data.get("answers"),
            constant_output=data.get("constant_output"),
            weights=data.get("weights"),
            loss_history=list(data.get("loss_history", [])),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, raw: str) -> "ReferenceModel":
        return cls.from_dict(json.loads(raw))


def payload_key(payload) -> str:
    """Canonical lookup key for a classifier input payload."""
    if isinstance(payload, bytes):
        try:
            return payload.decode("utf-8")
        except UnicodeDecodeError:
            return payload.hex()
    return str(payload)


def _busy_wait_ms(delay_ms: float) -> None:
    # sleep() overshoot is scheduler-dependent; spinning keeps programmed
    # delays accurate to microseconds, which the latency tolerances rely on.
    if delay_ms <= 0:
        return
    deadline = time.perf_counter() + delay_ms / 1000.0
    while time.perf_counter() < deadline:
        pass


def _as_input_vector(payload) -> np.ndarray:
    if isinstance(payload, bytes):
        payload = json.loads(payload.decode("utf-8"))
    arr = np.asarray(payload, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"linear model expects a flat vector, got shape {arr.shape}")
    return arr


def mse_loss(weights: Sequence[float], inputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared loss of ``y = w . x`` over a dataset."""
    w = np.asarray(weights, dtype=float)
    residual = inputs @ w - targets
    return float(np.mean(residual**2))


class ReferenceExecutor:
    """The single test double standing in for deep-learning runtimes.

    Not reentrant: callers (the runtime, a profiling session) serialize
    access per instance.
    """

    def __init__(self, package_id: str = "reference"):
        self.package_id = package_id
        self._model: ReferenceModel | None = None

    def load(self, artifact: ReferenceModel) -> None:
        if not isinstance(artifact, ReferenceModel):
            raise ExecutorFailure(
                f"reference executor cannot load artifact of type {type(artifact).__name__}"
            )
        self._model = artifact

    @property
    def model(self) -> ReferenceModel:
        if self._model is None:
            raise ExecutorFailure("no model loaded")
        return self._model

    def infer(self, payload):
        model = self.model
        _busy_wait_ms(model.delay_ms)
        if model.kind == "classifier":
            if model.constant_output is not None:
                return model.constant_output
            key = payload_key(payload)
            answers = model.answers or {}
            return answers.get(key, WRONG_ANSWER)
        try:
            x = _as_input_vector(payload)
            w = np.asarray(model.weights, dtype=float)
            if x.shape != w.shape:
                raise ValueError(f"input shape {x.shape} != weight shape {w.shape}")
        except ExecutorFailure:
            raise
        except Exception as exc:
            raise ExecutorFailure(f"linear inference failed: {exc}") from exc
        return float(x @ w)

    def retrain(self, dataset, config: RetrainConfig) -> ReferenceModel:
        """Full-batch gradient descent on squared loss.

        Per pass: ``w <- w - lr * (2/n) * X^T (X w - y)``; the recorded loss
        history has one entry per pass plus the initial loss.  Descent is
        monotone for learning rates below 1 / lambda_max(X^T X / n).
        """
        model = self.model
        if model.kind != "linear":
            raise RetrainUnsupported(
                f"reference {model.kind} artifacts do not support retraining"
            )
        pairs = list(dataset)
        if not pairs:
            raise EmptyDataset("retraining dataset is empty")
        inputs = np.asarray([p[0] for p in pairs], dtype=float)
        targets = np.asarray([p[1] for p in pairs], dtype=float)
        if inputs.ndim != 2 or inputs.shape[1] != len(model.weights or ()):
            raise ExecutorFailure(
                f"dataset input shape {inputs.shape} does not match weights"
            )
        n = len(pairs)
        w = np.asarray(model.weights, dtype=float).copy()
        losses = [mse_loss(w, inputs, targets)]
        for _ in range(config.passes):
            gradient = (2.0 / n) * (inputs.T @ (inputs @ w - targets))
            w = w - config.learning_rate * gradient
            losses.append(mse_loss(w, inputs, targets))
        return ReferenceModel(
            kind="linear",
            delay_ms=model.delay_ms,
            working_set_bytes=model.working_set_bytes,
            weights=[float(v) for v in w],
            loss_history=[float(v) for v in losses],
        )

    def resource_report(self) -> int:
        return max(self.model.working_set_bytes, DISPATCH_BASELINE_BYTES)
