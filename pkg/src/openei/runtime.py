"""Priority-scheduled inference runtime hosting pluggable executors.

Scheduling is non-preemptive: a running task completes before the next
dispatch.  Dispatch order is priority-then-FIFO over four levels, realtime
highest.  Deadlines never cancel work; a missed deadline only flags the
delivered result.  The worker pool defaults to a single thread so ordering
assertions can demand exact equality; it is configurable upward.

Executors are not required to be reentrant: the runtime serializes calls
per executor instance.  Model artifacts live in an in-process cache and can
be resolved lazily from an entry's ``artifact_ref`` ("inline:<json>" or
"file:<path>" for reference models).
"""

from __future__ import annotations

import heapq
import itertools
import json
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, replace

from .errors import (
    ArtifactMissing,
    EmptyDataset,
    ExecutorFailure,
    QueueFull,
    UnknownModel,
    UnknownPackage,
)
from .executors import Executor, ReferenceModel, RetrainConfig
from .registry import ModelEntry, Registry

PRIORITIES = ("realtime", "high", "normal", "low")
_PRIORITY_RANK = {name: rank for rank, name in enumerate(PRIORITIES)}

DEFAULT_QUEUE_CAPACITY = 256


def priority_rank(priority: str) -> int:
    """Smaller rank dispatches first; realtime is rank 0."""
    try:
        return _PRIORITY_RANK[priority]
    except KeyError:
        raise ValueError(f"priority {priority!r} not in {PRIORITIES}") from None


@dataclass
class InferenceTask:
    model_id: str
    package_id: str
    payload: object
    priority: str = "normal"
    task_id: str = ""
    deadline_ms: float | None = None
    enqueue_time: int = 0  # epoch ms, stamped at submit

    def __post_init__(self):
        priority_rank(self.priority)
        if not self.task_id:
            self.task_id = uuid.uuid4().hex


@dataclass(frozen=True)
class TaskResult:
    task_id: str
    output: object
    deadline_missed: bool
    queued_ms: float  # time spent waiting before dispatch
    run_ms: float


class TaskHandle:
    """Single-use completion handle resolving to an output or an error."""

    def __init__(self, task: InferenceTask):
        self.task = task
        self._done = threading.Event()
        self._result: TaskResult | None = None
        self._error: BaseException | None = None

    def _resolve(self, result: TaskResult | None, error: BaseException | None) -> None:
        self._result = result
        self._error = error
        self._done.set()

    def done(self) -> bool:
        return self._done.is_set()

    def result(self, timeout: float | None = None) -> TaskResult:
        if not self._done.wait(timeout):
            raise TimeoutError(f"task {self.task.task_id} still pending")
        if self._error is not None:
            raise self._error
        assert self._result is not None
        return self._result


class Telemetry:
    """In-process counters surfaced by the CLI `stats` command and /stats."""

    def __init__(self):
        self._lock = threading.Lock()
        self.queue_depth = {name: 0 for name in PRIORITIES}
        self.dispatched = {name: 0 for name in PRIORITIES}
        self.completed = 0
        self.failed = 0
        self.deadline_misses = 0
        self.dispatch_log: list[str] = []
        self._latency_samples: dict[str, deque] = {}

    def record_enqueue(self, priority: str) -> None:
        with self._lock:
            self.queue_depth[priority] += 1

    def record_dispatch(self, task_id: str, priority: str) -> None:
        with self._lock:
            self.queue_depth[priority] -= 1
            self.dispatched[priority] += 1
            self.dispatch_log.append(task_id)

    def record_completion(self, *, failed: bool, deadline_missed: bool) -> None:
        with self._lock:
            if failed:
                self.failed += 1
            else:
                self.completed += 1
            if deadline_missed:
                self.deadline_misses += 1

    def record_latency(self, model_id: str, latency_ms: float) -> None:
        with self._lock:
            samples = self._latency_samples.setdefault(model_id, deque(maxlen=256))
            samples.append(latency_ms)

    def snapshot(self) -> dict:
        with self._lock:
            latencies = {
                model_id: {
                    "count": len(samples),
                    "mean_ms": sum(samples) / len(samples),
                }
                for model_id, samples in self._latency_samples.items()
                if samples
            }
            return {
                "queue_depth": dict(self.queue_depth),
                "dispatched": dict(self.dispatched),
                "completed": self.completed,
                "failed": self.failed,
                "deadline_misses": self.deadline_misses,
                "latency": latencies,
            }


class Runtime:
    """Owns the task queue, the executor table, and the artifact cache."""

    def __init__(
        self,
        registry: Registry | None = None,
        *,
        queue_capacity: int = DEFAULT_QUEUE_CAPACITY,
        workers: int = 1,
        start_paused: bool = False,
    ):
        if queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.registry = registry
        self.telemetry = Telemetry()
        self._queue: list[tuple[int, int, InferenceTask, TaskHandle]] = []
        self._capacity = queue_capacity
        self._cond = threading.Condition()
        self._seq = itertools.count()
        self._paused = start_paused
        self._stopping = False
        self._in_flight = 0
        self._executors: dict[str, Executor] = {}
        self._executor_locks: dict[str, threading.Lock] = {}
        self._artifacts: dict[str, object] = {}
        self._workers = [
            threading.Thread(target=self._work, name=f"openei-worker-{i}", daemon=True)
            for i in range(workers)
        ]
        for worker in self._workers:
            worker.start()

    # --- executors and artifacts ---------------------------------------

    def register_executor(self, executor: Executor) -> None:
        with self._cond:
            self._executors[executor.package_id] = executor
            self._executor_locks[executor.package_id] = threading.Lock()

    def packages(self) -> list[str]:
        with self._cond:
            return sorted(self._executors)

    def put_artifact(self, model_id: str, artifact: object) -> None:
        with self._cond:
            self._artifacts[model_id] = artifact

    def drop_artifact(self, model_id: str) -> None:
        with self._cond:
            self._artifacts.pop(model_id, None)

    def get_artifact(self, model_id: str) -> object:
        with self._cond:
            artifact = self._artifacts.get(model_id)
        if artifact is None and self.registry is not None:
            try:
                entry = self.registry.get(model_id)
            except UnknownModel:
                entry = None
            if entry is not None:
                artifact = resolve_artifact_ref(entry.artifact_ref)
                if artifact is not None:
                    self.put_artifact(model_id, artifact)
        if artifact is None:
            raise ArtifactMissing(f"no artifact cached for model {model_id!r}")
        return artifact

    def _session(self, model_id: str, package_id: str):
        with self._cond:
            executor = self._executors.get(package_id)
        if executor is None:
            raise UnknownPackage(f"no executor registered for package {package_id!r}")
        artifact = self.get_artifact(model_id)
        return executor, artifact, self._executor_locks[package_id]

    # --- direct path ---------------------------------------------------

    def run_inference(self, model_id: str, package_id: str, payload):
        """Synchronous local inference; records a latency sample."""
        executor, artifact, lock = self._session(model_id, package_id)
        with lock:
            executor.load(artifact)
            start = time.perf_counter()
            try:
                output = executor.infer(payload)
            except ExecutorFailure:
                raise
            except Exception as exc:
                raise ExecutorFailure(f"inference failed: {exc}") from exc
            elapsed_ms = (time.perf_counter() - start) * 1000.0
        self.telemetry.record_latency(model_id, elapsed_ms)
        return output

    # --- queued path -----------------------------------------------------

    def submit(self, task: InferenceTask) -> TaskHandle:
        """Enqueue a task; dispatch order is priority-then-FIFO."""
        with self._cond:
            if task.package_id not in self._executors:
                raise UnknownPackage(
                    f"no executor registered for package {task.package_id!r}"
                )
        # fail fast if the model cannot be loaded at all
        self.get_artifact(task.model_id)
        task.enqueue_time = int(time.time() * 1000)
        handle = TaskHandle(task)
        with self._cond:
            if self._stopping:
                raise RuntimeError("runtime is shutting down")
            if len(self._queue) >= self._capacity:
                raise QueueFull(f"queue at capacity {self._capacity}")
            item = (priority_rank(task.priority), next(self._seq), task, handle)
            heapq.heappush(self._queue, item)
            handle._enqueued_at = time.perf_counter()
            self.telemetry.record_enqueue(task.priority)
            self._cond.notify()
        return handle

    def pause(self) -> None:
        with self._cond:
            self._paused = True

    def resume(self) -> None:
        with self._cond:
            self._paused = False
            self._cond.notify_all()

    def drain(self, timeout: float | None = None) -> bool:
        """Block until the queue is empty and nothing is in flight."""
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._cond:
            while self._queue or self._in_flight:
                remaining = None
                if deadline is not None:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        return False
                self._cond.wait(remaining if remaining is not None else 0.1)
        return True

    def shutdown(self, drain: bool = True, timeout: float | None = None) -> None:
        if drain:
            self.resume()
            self.drain(timeout)
        with self._cond:
            self._stopping = True
            self._cond.notify_all()
        for worker in self._workers:
            worker.join(timeout=1.0)

    def _work(self) -> None:
        while True:
            with self._cond:
                while not self._stopping and (self._paused or not self._queue):
                    self._cond.wait()
                if self._stopping:
                    return
                _, _, task, handle = heapq.heappop(self._queue)
                self._in_flight += 1
                self.telemetry.record_dispatch(task.task_id, task.priority)
            try:
                self._execute(task, handle)
            finally:
                with self._cond:
                    self._in_flight -= 1
                    self._cond.notify_all()

    def _execute(self, task: InferenceTask, handle: TaskHandle) -> None:
        dispatched_at = time.perf_counter()
        queued_ms = (dispatched_at - getattr(handle, "_enqueued_at", dispatched_at)) * 1000.0
        try:
            output = self.run_inference(task.model_id, task.package_id, task.payload)
        except BaseException as exc:
            self.telemetry.record_completion(failed=True, deadline_missed=False)
            handle._resolve(None, exc)
            return
        run_ms = (time.perf_counter() - dispatched_at) * 1000.0
        missed = task.deadline_ms is not None and (queued_ms + run_ms) > task.deadline_ms
        self.telemetry.record_completion(failed=False, deadline_missed=missed)
        handle._resolve(
            TaskResult(
                task_id=task.task_id,
                output=output,
                deadline_missed=missed,
                queued_ms=queued_ms,
                run_ms=run_ms,
            ),
            None,
        )

    # --- retraining ------------------------------------------------------

    def retrain(
        self,
        model_id: str,
        package_id: str,
        dataset,
        config: RetrainConfig,
    ) -> ModelEntry:
        """Retrain locally and register the result as the next version."""
        if self.registry is None:
            raise UnknownModel("runtime has no registry to register retrained models in")
        if not dataset:
            raise EmptyDataset("retraining dataset is empty")
        entry = self.registry.get(model_id)
        executor, artifact, lock = self._session(model_id, package_id)
        with lock:
            executor.load(artifact)
            new_artifact = executor.retrain(dataset, config)
        new_entry = replace(
            entry,
            version=entry.version + 1,
            artifact_ref=artifact_ref_inline(new_artifact),
            profiles=dict(entry.profiles),
        )
        self.registry.register(new_entry)
        self.put_artifact(model_id, new_artifact)
        return new_entry


def artifact_ref_inline(artifact) -> str:
    """Inline artifact_ref encoding for reference models."""
    if isinstance(artifact, ReferenceModel):
        return "inline:" + artifact.to_json()
    return ""


def resolve_artifact_ref(artifact_ref: str):
    """Decode an artifact_ref locator; returns None for unknown schemes."""
    if artifact_ref.startswith("inline:"):
        return ReferenceModel.from_json(artifact_ref[len("inline:"):])
    if artifact_ref.startswith("file:"):
        path = artifact_ref[len("file:"):]
        try:
            with open(path, encoding="utf-8") as fh:
                return ReferenceModel.from_json(fh.read())
        except (OSError, ValueError, json.JSONDecodeError):
            return None
    return None
