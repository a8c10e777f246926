"""Sensor data ingestion: realtime ring buffers plus an append-only log.

Each sensor gets a bounded ring of its most recent records (realtime reads)
and an append-only history (range queries).  Timestamps are epoch
milliseconds supplied by the producer, not server-assigned, so replayed
datasets keep their native timeline; range bounds are inclusive on both
ends and ties are ordered by ingest order.

When a data directory is configured, every ingest also appends to a binary
segment file (one per sensor) so external tools can replay the history:
each record is a u32 little-endian payload length, a u64 little-endian
timestamp, a u16 little-endian sensor-id length, then the sensor-id bytes
and the payload bytes.  The content-type tag lives only in memory; replayed
records default to application/octet-stream.
"""

from __future__ import annotations

import os
import struct
import threading
from collections import deque
from dataclasses import dataclass
from urllib.parse import quote

from .errors import InvalidRange, NoData, UnknownSensor

DEFAULT_RING_CAPACITY = 1024
DEFAULT_CONTENT_TYPE = "application/octet-stream"

_HEADER = struct.Struct("<IQH")


@dataclass(frozen=True)
class SensorRecord:
    sensor_id: str
    timestamp: int  # epoch milliseconds
    payload: bytes
    content_type: str = DEFAULT_CONTENT_TYPE

    def __post_init__(self):
        if not self.sensor_id:
            raise ValueError("sensor_id must be non-empty")
        if self.timestamp < 0:
            raise ValueError("timestamp must be >= 0")
        if not isinstance(self.payload, bytes):
            object.__setattr__(self, "payload", bytes(self.payload))


class _SensorState:
    __slots__ = ("ring", "log", "lock")

    def __init__(self, ring_capacity: int):
        self.ring: deque[SensorRecord] = deque(maxlen=ring_capacity)
        self.log: list[SensorRecord] = []
        self.lock = threading.Lock()


class DataStore:
    """Per-sensor realtime rings over a shared historical log.

    Ingests for different sensors proceed concurrently; per-sensor ingest is
    serialized.  Readers copy under the sensor lock, so they see a snapshot
    no older than the previous completed ingest and never block writers for
    longer than the copy.
    """

    def __init__(self, data_dir=None, ring_capacity: int = DEFAULT_RING_CAPACITY):
        if ring_capacity < 1:
            raise ValueError("ring_capacity must be >= 1")
        self.data_dir = os.fspath(data_dir) if data_dir is not None else None
        self.ring_capacity = ring_capacity
        self._sensors: dict[str, _SensorState] = {}
        self._registry_lock = threading.Lock()
        if self.data_dir is not None:
            os.makedirs(os.path.join(self.data_dir, "segments"), exist_ok=True)
            self._replay_segments()

    def _state(self, sensor_id: str, create: bool) -> _SensorState:
        with self._registry_lock:
            state = self._sensors.get(sensor_id)
            if state is None:
                if not create:
                    raise UnknownSensor(f"sensor {sensor_id!r} has no records")
                state = _SensorState(self.ring_capacity)
                self._sensors[sensor_id] = state
            return state

    def sensors(self) -> list[str]:
        with self._registry_lock:
            return sorted(self._sensors)

    def ingest(self, record: SensorRecord) -> None:
        state = self._state(record.sensor_id, create=True)
        with state.lock:
            state.log.append(record)
            state.ring.append(record)
            if self.data_dir is not None:
                self._append_segment(record)

    def query_realtime(self, sensor_id: str) -> SensorRecord:
        """The record with maximal ingest order for the sensor."""
        state = self._state(sensor_id, create=False)
        with state.lock:
            if not state.ring:
                raise NoData(f"sensor {sensor_id!r} has no buffered records")
            return state.ring[-1]

    def query_historical(self, sensor_id: str, start: int, end: int) -> list[SensorRecord]:
        """Records with start <= timestamp <= end, ascending, ties by ingest order."""
        if start > end:
            raise InvalidRange(f"start {start} > end {end}")
        state = self._state(sensor_id, create=False)
        with state.lock:
            matched = [r for r in state.log if start <= r.timestamp <= end]
        matched.sort(key=lambda r: r.timestamp)  # stable: ingest order kept on ties
        return matched

    def ring_contents(self, sensor_id: str) -> list[SensorRecord]:
        state = self._state(sensor_id, create=False)
        with state.lock:
            return list(state.ring)

    def history_len(self, sensor_id: str) -> int:
        state = self._state(sensor_id, create=False)
        with state.lock:
            return len(state.log)

    # --- segment files ----------------------------------------------------

    def _segment_path(self, sensor_id: str) -> str:
        return os.path.join(self.data_dir, "segments", quote(sensor_id, safe="") + ".seg")

    def _append_segment(self, record: SensorRecord) -> None:
        sid = record.sensor_id.encode("utf-8")
        with open(self._segment_path(record.sensor_id), "ab") as fh:
            fh.write(_HEADER.pack(len(record.payload), record.timestamp, len(sid)))
            fh.write(sid)
            fh.write(record.payload)
            fh.flush()

    def _replay_segments(self) -> None:
        segments_dir = os.path.join(self.data_dir, "segments")
        for name in sorted(os.listdir(segments_dir)):
            if not name.endswith(".seg"):
                continue
            for record in read_segment(os.path.join(segments_dir, name)):
                state = self._state(record.sensor_id, create=True)
                state.log.append(record)
                state.ring.append(record)


def read_segment(path) -> list[SensorRecord]:
    """Decode one segment file; the documented replay path for external tools."""
    records = []
    with open(path, "rb") as fh:
        data = fh.read()
    offset = 0
    while offset < len(data):
        if offset + _HEADER.size > len(data):
            break  # trailing partial record from an interrupted write
        payload_len, timestamp, sid_len = _HEADER.unpack_from(data, offset)
        offset += _HEADER.size
        if offset + sid_len + payload_len > len(data):
            break
        sensor_id = data[offset : offset + sid_len].decode("utf-8")
        offset += sid_len
        payload = data[offset : offset + payload_len]
        offset += payload_len
        records.append(SensorRecord(sensor_id, timestamp, payload))
    return records
