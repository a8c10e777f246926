import random

import pytest

from conftest import make_entry, make_workload
from openei.errors import (
    ArtifactMissing,
    EmptyDataset,
    QueueFull,
    UnknownPackage,
)
from openei.executors import ReferenceExecutor, ReferenceModel, RetrainConfig
from openei.registry import Registry
from openei.runtime import (
    InferenceTask,
    Runtime,
    priority_rank,
    resolve_artifact_ref,
)
from oracles import gradient_descent_losses, reference_dispatch_order

PRIORITIES = ("realtime", "high", "normal", "low")


@pytest.fixture
def workload():
    return make_workload()


def make_runtime(workload, *, delay_ms=0.0, start_paused=False, **kwargs):
    runtime = Runtime(start_paused=start_paused, **kwargs)
    runtime.register_executor(ReferenceExecutor())
    runtime.put_artifact(
        "m1", ReferenceModel.for_workload(workload, delay_ms=delay_ms)
    )
    return runtime


def task(workload, priority="normal", task_id="", **kwargs):
    return InferenceTask(
        model_id="m1",
        package_id="reference",
        payload=workload.samples[0].payload,
        priority=priority,
        task_id=task_id,
        **kwargs,
    )


class TestSubmit:
    def test_priority_order_while_worker_busy(self, workload):
        runtime = make_runtime(workload, start_paused=True)
        try:
            for task_id, priority in (("n1", "normal"), ("n2", "normal"), ("r1", "realtime")):
                runtime.submit(task(workload, priority=priority, task_id=task_id))
            runtime.resume()
            assert runtime.drain(timeout=5.0)
            assert runtime.telemetry.dispatch_log == ["r1", "n1", "n2"]
        finally:
            runtime.shutdown()

    def test_single_task_on_idle_runtime_starts_immediately(self, workload):
        runtime = make_runtime(workload)
        try:
            handle = runtime.submit(task(workload, task_id="t1"))
            result = handle.result(timeout=5.0)
            assert result.output == workload.samples[0].label
            assert not result.deadline_missed
        finally:
            runtime.shutdown()

    def test_unknown_package(self, workload):
        runtime = make_runtime(workload)
        try:
            bad = InferenceTask(model_id="m1", package_id="ghost", payload="x")
            with pytest.raises(UnknownPackage):
                runtime.submit(bad)
        finally:
            runtime.shutdown()

    def test_queue_full(self, workload):
        runtime = make_runtime(workload, start_paused=True, queue_capacity=2)
        try:
            runtime.submit(task(workload, task_id="a"))
            runtime.submit(task(workload, task_id="b"))
            with pytest.raises(QueueFull):
                runtime.submit(task(workload, task_id="c"))
        finally:
            runtime.shutdown(drain=False)


class TestRunInference:
    def test_returns_stored_label(self, workload):
        runtime = make_runtime(workload)
        try:
            for sample in workload.samples:
                assert runtime.run_inference("m1", "reference", sample.payload) == sample.label
        finally:
            runtime.shutdown()

    def test_deterministic_output(self, workload):
        runtime = make_runtime(workload)
        try:
            payload = workload.samples[2].payload
            first = runtime.run_inference("m1", "reference", payload)
            assert runtime.run_inference("m1", "reference", payload) == first
        finally:
            runtime.shutdown()

    def test_artifact_missing_after_eviction(self, workload):
        runtime = make_runtime(workload)
        try:
            runtime.drop_artifact("m1")
            with pytest.raises(ArtifactMissing):
                runtime.run_inference("m1", "reference", "x")
        finally:
            runtime.shutdown()

    def test_latency_sample_recorded(self, workload):
        runtime = make_runtime(workload)
        try:
            runtime.run_inference("m1", "reference", workload.samples[0].payload)
            snapshot = runtime.telemetry.snapshot()
            assert snapshot["latency"]["m1"]["count"] == 1
        finally:
            runtime.shutdown()


class TestRealtimeGuard:
    def test_realtime_jumps_queued_normals(self, workload):
        runtime = make_runtime(workload, start_paused=True)
        try:
            for i in range(10):
                runtime.submit(task(workload, priority="normal", task_id=f"n{i}"))
            runtime.submit(task(workload, priority="realtime", task_id="rt"))
            runtime.resume()
            assert runtime.drain(timeout=5.0)
            assert runtime.telemetry.dispatch_log[0] == "rt"
        finally:
            runtime.shutdown()

    def test_fifo_between_realtime_tasks(self, workload):
        runtime = make_runtime(workload, start_paused=True)
        try:
            runtime.submit(task(workload, priority="realtime", task_id="r1"))
            runtime.submit(task(workload, priority="realtime", task_id="r2"))
            runtime.resume()
            assert runtime.drain(timeout=5.0)
            assert runtime.telemetry.dispatch_log == ["r1", "r2"]
        finally:
            runtime.shutdown()

    def test_missed_deadline_is_flagged_not_dropped(self, workload):
        runtime = make_runtime(workload, delay_ms=10.0)
        try:
            handle = runtime.submit(
                task(workload, priority="realtime", task_id="rt", deadline_ms=1.0)
            )
            result = handle.result(timeout=5.0)
            assert result.deadline_missed
            assert result.output == workload.samples[0].label
            assert runtime.telemetry.snapshot()["deadline_misses"] == 1
        finally:
            runtime.shutdown()


class TestSchedulingProperty:
    def test_randomized_sequences_match_reference_queue(self, workload):
        rng = random.Random(4242)
        for round_no in range(10):
            submissions = [
                (f"t{round_no}-{i}", rng.choice(PRIORITIES)) for i in range(120)
            ]
            runtime = make_runtime(workload, start_paused=True)
            try:
                for task_id, priority in submissions:
                    runtime.submit(task(workload, priority=priority, task_id=task_id))
                runtime.resume()
                assert runtime.drain(timeout=10.0)
                assert runtime.telemetry.dispatch_log == reference_dispatch_order(
                    submissions
                )
            finally:
                runtime.shutdown()

    def test_no_starvation_all_tasks_complete(self, workload):
        rng = random.Random(7)
        runtime = make_runtime(workload, start_paused=True, queue_capacity=512)
        try:
            handles = [
                runtime.submit(task(workload, priority=rng.choice(PRIORITIES), task_id=f"t{i}"))
                for i in range(200)
            ]
            runtime.resume()
            assert runtime.drain(timeout=10.0)
            for handle in handles:
                assert handle.result(timeout=1.0).output is not None
        finally:
            runtime.shutdown()


class TestRetrain:
    def _runtime_with_linear(self):
        registry = Registry()
        entry = make_entry("lin", task="regression")
        registry.register(entry)
        runtime = Runtime(registry)
        runtime.register_executor(ReferenceExecutor())
        runtime.put_artifact("lin", ReferenceModel.linear([0.0, 0.0]))
        return runtime, registry

    def _dataset(self, w_true=(1.0, -2.0), n=32):
        rng = random.Random(11)
        data = []
        for _ in range(n):
            x = [rng.uniform(-1, 1), rng.uniform(-1, 1)]
            y = sum(a * b for a, b in zip(x, w_true))
            data.append((x, y))
        return data

    def test_retrain_registers_next_version_with_decreasing_loss(self):
        runtime, registry = self._runtime_with_linear()
        try:
            dataset = self._dataset()
            entry = runtime.retrain(
                "lin",
                "reference",
                dataset,
                RetrainConfig(passes=15, learning_rate=0.05, sample_count=len(dataset)),
            )
            assert entry.version == 2
            assert registry.get("lin").version == 2
            artifact = resolve_artifact_ref(entry.artifact_ref)
            losses = artifact.loss_history
            assert all(b < a for a, b in zip(losses, losses[1:]))
            _, expected_losses = gradient_descent_losses(
                [0.0, 0.0],
                [x for x, _ in dataset],
                [y for _, y in dataset],
                learning_rate=0.05,
                passes=15,
            )
            assert losses == pytest.approx(expected_losses, rel=1e-12)
        finally:
            runtime.shutdown()

    def test_empty_dataset_rejected(self):
        runtime, _ = self._runtime_with_linear()
        try:
            with pytest.raises(EmptyDataset):
                runtime.retrain(
                    "lin", "reference", [], RetrainConfig(passes=1, learning_rate=0.1)
                )
        finally:
            runtime.shutdown()


def test_priority_rank_total_order():
    ranks = [priority_rank(p) for p in PRIORITIES]
    assert ranks == sorted(ranks)
    with pytest.raises(ValueError):
        priority_rank("urgent")
