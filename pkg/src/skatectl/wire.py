"""Telemetry frames between the sensor units and the headset receiver.

Frame layout (little-endian)::

    unit_id u8 | seq u16 | base_timestamp_ms u32 | sample_count u8 |
    sample_count x (delta_ms u8, value i16) | checksum u16

``delta_ms`` is the gap from the previous sample in the frame (the first
sample's delta is from ``base_timestamp_ms``).  The checksum is the 16-bit
one's-complement sum (end-around carry) of all preceding bytes read as
little-endian words, an odd final byte padded with zero.  Values are
fixed-point; see ``UNIT_SCALE``.
"""

from __future__ import annotations

import enum
import os
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from skatectl.sensors import SensorSample, SensorTrace, Source, sort_key

MAX_SAMPLES = 20
HEADER = struct.Struct("<BHIB")
PAIR = struct.Struct("<Bh")
CHECKSUM = struct.Struct("<H")
MIN_FRAME = HEADER.size + CHECKSUM.size
SEQ_MOD = 1 << 16
SEQ_WINDOW = 1024


class FrameError(ValueError):
    """Base class for frames that cannot be decoded."""


class TruncatedFrameError(FrameError):
    pass


class CorruptFrameError(FrameError):
    pass


class FrameProtocolError(FrameError):
    pass


class UnitId(enum.IntEnum):
    LEFT_SHOE = 1
    RIGHT_SHOE = 2
    # Board-era sensors share the link so mixed traces survive transport.
    BOARD_SIDE = 3
    BOARD_FRONT = 4
    TURNTABLE = 5


UNIT_FOR_SOURCE = {
    Source.LEFT_SHOE: UnitId.LEFT_SHOE,
    Source.RIGHT_SHOE: UnitId.RIGHT_SHOE,
    Source.BOARD_SIDE: UnitId.BOARD_SIDE,
    Source.BOARD_FRONT: UnitId.BOARD_FRONT,
    Source.TURNTABLE: UnitId.TURNTABLE,
}
SOURCE_FOR_UNIT = {u: s for s, u in UNIT_FOR_SOURCE.items()}

# Fixed-point steps per unit.  Shoes carry centi-degrees; the board
# rangefinders need 0.1 mm to reach 2000 mm in an i16, and the turntable
# sends its heading as a signed centi-degree angle in [-180, 180).
UNIT_SCALE = {
    UnitId.LEFT_SHOE: 100,
    UnitId.RIGHT_SHOE: 100,
    UnitId.BOARD_SIDE: 10,
    UnitId.BOARD_FRONT: 10,
    UnitId.TURNTABLE: 100,
}


@dataclass(frozen=True)
class Packet:
    unit_id: UnitId
    seq: int
    base_timestamp_ms: int
    samples: tuple[tuple[int, int], ...] = ()  # (delta_ms, raw value)

    @property
    def sample_count(self) -> int:
        return len(self.samples)

    @property
    def checksum(self) -> int:
        return ones_complement_sum(encode(self)[:-2])


def ones_complement_sum(data: bytes) -> int:
    if len(data) % 2:
        data = data + b"\x00"
    total = sum(struct.unpack(f"<{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def encode(packet: Packet) -> bytes:
    n = packet.sample_count
    if n > MAX_SAMPLES:
        raise ValueError(f"sample_count {n} exceeds {MAX_SAMPLES}")
    try:
        unit = UnitId(packet.unit_id)
    except ValueError:
        raise ValueError(f"unknown unit id {packet.unit_id}") from None
    if not 0 <= packet.seq < SEQ_MOD:
        raise ValueError(f"seq {packet.seq} out of u16 range")
    if not 0 <= packet.base_timestamp_ms < 1 << 32:
        raise ValueError(f"base timestamp {packet.base_timestamp_ms} out of u32 range")
    parts = [HEADER.pack(unit, packet.seq, packet.base_timestamp_ms, n)]
    for delta, value in packet.samples:
        if not 0 <= delta <= 0xFF or not -0x8000 <= value <= 0x7FFF:
            raise ValueError(f"sample ({delta}, {value}) does not fit u8/i16")
        parts.append(PAIR.pack(delta, value))
    body = b"".join(parts)
    return body + CHECKSUM.pack(ones_complement_sum(body))


def decode(frame: bytes) -> Packet:
    frame = bytes(frame)
    if len(frame) < MIN_FRAME:
        raise TruncatedFrameError(f"frame of {len(frame)} bytes is shorter than {MIN_FRAME}")
    unit, seq, base, n = HEADER.unpack_from(frame)
    expected = MIN_FRAME + PAIR.size * n
    if len(frame) < expected:
        raise TruncatedFrameError(f"frame declares {n} samples ({expected} bytes) but has {len(frame)}")
    if len(frame) > expected:
        raise CorruptFrameError(f"frame declares {expected} bytes but has {len(frame)}")
    (stored,) = CHECKSUM.unpack_from(frame, expected - 2)
    if stored != ones_complement_sum(frame[:-2]):
        raise CorruptFrameError("checksum mismatch")
    if n > MAX_SAMPLES:
        raise FrameProtocolError(f"sample_count {n} exceeds {MAX_SAMPLES}")
    try:
        unit_id = UnitId(unit)
    except ValueError:
        raise FrameProtocolError(f"unknown unit id {unit}") from None
    samples = tuple(PAIR.unpack_from(frame, HEADER.size + PAIR.size * i) for i in range(n))
    return Packet(unit_id, seq, base, samples)


def to_wire(unit: UnitId, value: float) -> int:
    """Physical value to the frame's signed 16-bit field."""
    if unit == UnitId.TURNTABLE and value >= 180.0:
        value -= 360.0
    raw = round(value * UNIT_SCALE[unit])
    if not -0x8000 <= raw <= 0x7FFF:
        raise ValueError(f"value {value} does not fit the 16-bit field of unit {unit.name.lower()}")
    return raw


def from_wire(unit: UnitId, raw: int) -> float:
    value = raw / UNIT_SCALE[unit]
    if unit == UnitId.TURNTABLE:
        value %= 360.0
    return value


def link_quantize(trace: SensorTrace) -> SensorTrace:
    """The trace as it reads after a lossless trip over the link."""
    out = []
    for s in trace.samples:
        unit = UNIT_FOR_SOURCE[s.source]
        out.append(SensorSample(s.timestamp_ms, s.source, from_wire(unit, to_wire(unit, s.value))))
    return SensorTrace(trace.sample_rate_hz, tuple(out), trace.label)


def packetize(trace: SensorTrace, max_samples: int = MAX_SAMPLES, first_seq: int = 0) -> list[Packet]:
    """Split a trace into per-unit frames.  A new frame starts when the
    current one is full or the next delta would overflow 8 bits.  Frames are
    returned in transmission order (by base timestamp, then unit)."""
    if not 0 < max_samples <= MAX_SAMPLES:
        raise ValueError(f"max_samples must be in 1..{MAX_SAMPLES}")
    by_unit: dict[UnitId, list[SensorSample]] = {}
    for s in trace.samples:
        by_unit.setdefault(UNIT_FOR_SOURCE[s.source], []).append(s)

    packets: list[Packet] = []
    for unit, samples in sorted(by_unit.items()):
        seq = first_seq
        chunk: list[tuple[int, int]] = []
        base = prev = 0
        for s in samples:
            delta = s.timestamp_ms - prev
            if chunk and (len(chunk) == max_samples or delta > 0xFF):
                packets.append(Packet(unit, seq % SEQ_MOD, base, tuple(chunk)))
                seq += 1
                chunk = []
            if not chunk:
                base = prev = s.timestamp_ms
                delta = 0
            chunk.append((delta, to_wire(unit, s.value)))
            prev = s.timestamp_ms
        if chunk:
            packets.append(Packet(unit, seq % SEQ_MOD, base, tuple(chunk)))
    packets.sort(key=lambda p: (p.base_timestamp_ms, p.unit_id))
    return packets


def simulate_channel_detailed(
    packets: Sequence[Packet], loss_rate: float, reorder_window: int, seed: int
) -> tuple[list[Packet], list[int]]:
    """Return (delivered packets, indices of dropped input packets)."""
    if not 0.0 <= loss_rate <= 1.0:
        raise ValueError("loss_rate must be in [0, 1]")
    if reorder_window < 0:
        raise ValueError("reorder_window must be non-negative")
    rng = np.random.default_rng(seed)
    drop = rng.random(len(packets)) < loss_rate
    survivors = [p for p, d in zip(packets, drop) if not d]
    dropped = [i for i, d in enumerate(drop) if d]
    if reorder_window > 1:
        out = []
        for start in range(0, len(survivors), reorder_window):
            window = survivors[start:start + reorder_window]
            out.extend(window[i] for i in rng.permutation(len(window)))
        survivors = out
    return survivors, dropped


def simulate_channel(packets: Sequence[Packet], loss_rate: float, reorder_window: int, seed: int) -> list[Packet]:
    """Drop each packet independently with probability ``loss_rate``, then
    shuffle survivors within consecutive windows of ``reorder_window``."""
    return simulate_channel_detailed(packets, loss_rate, reorder_window, seed)[0]


@dataclass
class LinkStats:
    received: int = 0
    duplicates: int = 0
    gaps: int = 0
    late: int = 0
    first_seq: int | None = None
    last_seq: int | None = None

    def csv_row(self, unit: UnitId) -> str:
        return f"{unit.name.lower()},{self.received},{self.duplicates},{self.gaps},{self.late}"


LINK_STATS_HEADER = "unit,received,duplicates,gaps,late"


@dataclass
class _UnitStream:
    highest: int | None = None
    packets: dict[int, Packet] = field(default_factory=dict)
    stats: LinkStats = field(default_factory=LinkStats)

    def extend_seq(self, seq: int) -> int:
        if self.highest is None:
            return seq
        d = (seq - self.highest) % SEQ_MOD
        return self.highest + d if d < SEQ_MOD // 2 else self.highest - (SEQ_MOD - d)

    def add(self, packet: Packet) -> None:
        ext = self.extend_seq(packet.seq)
        if self.highest is not None and ext < self.highest - SEQ_WINDOW:
            self.stats.late += 1
            return
        if ext in self.packets:
            self.stats.duplicates += 1
            return
        self.packets[ext] = packet
        self.stats.received += 1
        if self.highest is None or ext > self.highest:
            self.highest = ext


def reassemble(packets: Iterable[Packet]) -> tuple[list[SensorSample], dict[UnitId, LinkStats]]:
    """Order each unit's frames by (wrap-aware) sequence number, drop
    duplicates, expand to absolute-time samples and merge the units.

    Gaps are counted between the lowest and highest sequence received per
    unit; losses before the first or after the last received frame are not
    observable."""
    streams: dict[UnitId, _UnitStream] = {}
    for p in packets:
        streams.setdefault(UnitId(p.unit_id), _UnitStream()).add(p)

    merged: list[SensorSample] = []
    stats: dict[UnitId, LinkStats] = {}
    for unit, stream in sorted(streams.items()):
        keys = sorted(stream.packets)
        st = stream.stats
        st.gaps = sum(b - a - 1 for a, b in zip(keys, keys[1:]))
        if keys:
            st.first_seq, st.last_seq = keys[0] % SEQ_MOD, keys[-1] % SEQ_MOD
        source = SOURCE_FOR_UNIT[unit]
        for k in keys:
            p = stream.packets[k]
            t = p.base_timestamp_ms
            for delta, raw in p.samples:
                t += delta
                merged.append(SensorSample(t, source, from_wire(unit, raw)))
        stats[unit] = st
    merged.sort(key=sort_key)
    # A unit stream can repeat timestamps only if frames overlap in time; keep the first.
    deduped: list[SensorSample] = []
    seen: set[tuple[int, int]] = set()
    for s in merged:
        key = sort_key(s)
        if key not in seen:
            seen.add(key)
            deduped.append(s)
    return deduped, stats


def transport_trace(
    trace: SensorTrace, loss_rate: float = 0.0, reorder_window: int = 0, seed: int = 0
) -> tuple[SensorTrace, dict[UnitId, LinkStats]]:
    """packetize -> encode -> channel -> decode -> reassemble."""
    sent = [decode(encode(p)) for p in packetize(trace)]
    delivered = simulate_channel(sent, loss_rate, reorder_window, seed)
    samples, stats = reassemble(delivered)
    return SensorTrace(trace.sample_rate_hz, tuple(samples), trace.label), stats


def write_capture(frames: Iterable[bytes], path: str | os.PathLike) -> None:
    with open(path, "wb") as fh:
        for frame in frames:
            fh.write(struct.pack("<H", len(frame)))
            fh.write(frame)


def read_capture(path: str | os.PathLike) -> list[bytes]:
    with open(path, "rb") as fh:
        data = fh.read()
    frames, pos = [], 0
    while pos < len(data):
        if pos + 2 > len(data):
            raise TruncatedFrameError(f"capture ends inside a length prefix at byte {pos}")
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        if pos + n > len(data):
            raise TruncatedFrameError(f"capture ends inside a {n}-byte frame at byte {pos}")
        frames.append(data[pos:pos + n])
        pos += n
    return frames
