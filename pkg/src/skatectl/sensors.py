"""Synthetic sensor traces standing in for the board rangefinders and shoe gyration units.

A trace is an immutable, timestamp-ordered list of samples from one or more
sources, all sampled at a common rate.  Generators here produce the canonical
gesture shapes (lean, jump, push stroke, crouch, turntable rotation); helpers
shift, concatenate, merge, perturb and (de)serialize them.
"""

from __future__ import annotations

import enum
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

DEFAULT_RATE_HZ = 50.0
RAMP_FRACTION = 0.2


class TraceError(ValueError):
    """Invalid generator argument or trace invariant violation."""


class TraceParseError(TraceError):
    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class Source(enum.IntEnum):
    BOARD_SIDE = 0
    BOARD_FRONT = 1
    LEFT_SHOE = 2
    RIGHT_SHOE = 3
    TURNTABLE = 4

    @property
    def csv_name(self) -> str:
        return self.name.lower()

    @classmethod
    def from_csv(cls, name: str) -> "Source":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown source {name!r}") from None

    @property
    def value_range(self) -> tuple[float, float]:
        return VALUE_RANGES[self]


# Board sources in mm, shoes in degrees of gyration, turntable heading in [0, 360).
VALUE_RANGES = {
    Source.BOARD_SIDE: (0.0, 2000.0),
    Source.BOARD_FRONT: (0.0, 2000.0),
    Source.LEFT_SHOE: (0.0, 180.0),
    Source.RIGHT_SHOE: (0.0, 180.0),
    Source.TURNTABLE: (0.0, 360.0),
}


@dataclass(frozen=True)
class SensorSample:
    timestamp_ms: int
    source: Source
    value: float


@dataclass(frozen=True)
class SensorTrace:
    sample_rate_hz: float
    samples: tuple[SensorSample, ...] = ()
    label: str = ""

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise TraceError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def period_ms(self) -> float:
        return 1000.0 / self.sample_rate_hz

    @property
    def sources(self) -> list[Source]:
        return sorted({s.source for s in self.samples})

    def values(self, source: Source | None = None) -> list[float]:
        return [s.value for s in self.samples if source is None or s.source == source]

    def timestamps(self, source: Source | None = None) -> list[int]:
        return [s.timestamp_ms for s in self.samples if source is None or s.source == source]

    @property
    def duration_ms(self) -> int:
        """Span covered by the trace, counting the final sample's period."""
        if not self.samples:
            return 0
        first = min(s.timestamp_ms for s in self.samples)
        last = max(s.timestamp_ms for s in self.samples)
        return round(last - first + self.period_ms)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(timestamps int64, source codes int64, values float64) in trace order."""
        n = len(self.samples)
        t = np.fromiter((s.timestamp_ms for s in self.samples), dtype=np.int64, count=n)
        src = np.fromiter((int(s.source) for s in self.samples), dtype=np.int64, count=n)
        val = np.fromiter((s.value for s in self.samples), dtype=np.float64, count=n)
        return t, src, val


def sort_key(sample: SensorSample) -> tuple[int, int]:
    """Canonical ordering of merged samples: time, then source code."""
    return sample.timestamp_ms, int(sample.source)


def _check_rate(sample_rate_hz: float) -> None:
    if not (sample_rate_hz > 0 and math.isfinite(sample_rate_hz)):
        raise TraceError(f"sample rate must be positive, got {sample_rate_hz}")


def _check_duration(duration_ms: int) -> None:
    if duration_ms <= 0:
        raise TraceError(f"duration must be positive, got {duration_ms}")


def _grid(duration_ms: float, sample_rate_hz: float) -> list[int]:
    n = round(duration_ms * sample_rate_hz / 1000.0)
    period = 1000.0 / sample_rate_hz
    return [round(i * period) for i in range(n)]


def _check_range(source: Source, *values: float) -> None:
    lo, hi = VALUE_RANGES[source]
    for v in values:
        if not lo <= v <= hi:
            raise TraceError(f"{source.csv_name} value {v} outside [{lo}, {hi}]")


def _build(source: Source, times: list[int], values: Iterable[float], rate: float, label: str) -> SensorTrace:
    samples = tuple(SensorSample(t, source, float(v)) for t, v in zip(times, values))
    return SensorTrace(rate, samples, label)


def gen_lean_trace(
    direction: str,
    duration_ms: int,
    rest_distance_mm: float,
    lean_delta_mm: float,
    sample_rate_hz: float = DEFAULT_RATE_HZ,
) -> SensorTrace:
    """Side rangefinder trace of one lean: ramp over the first 20% of samples,
    hold, ramp back over the last 20%.  ``direction`` is left, right or neutral.
    """
    _check_duration(duration_ms)
    _check_rate(sample_rate_hz)
    direction = direction.lower()
    sign = {"left": -1.0, "right": 1.0, "neutral": 0.0}.get(direction)
    if sign is None:
        raise TraceError(f"direction must be left, right or neutral, got {direction!r}")
    if lean_delta_mm <= 0:
        raise TraceError("lean_delta_mm must be positive")
    _check_range(Source.BOARD_SIDE, rest_distance_mm, rest_distance_mm + sign * lean_delta_mm)

    times = _grid(duration_ms, sample_rate_hz)
    n = len(times)
    ramp = max(1, int(n * RAMP_FRACTION))
    values = []
    for i in range(n):
        frac = min(1.0, i / ramp, (n - 1 - i) / ramp)
        values.append(rest_distance_mm + sign * lean_delta_mm * frac)
    return _build(Source.BOARD_SIDE, times, values, sample_rate_hz, f"lean-{direction}")


def gen_jump_trace(
    duration_ms: int,
    rest_distance_mm: float,
    pitch_delta_mm: float,
    sample_rate_hz: float = DEFAULT_RATE_HZ,
) -> SensorTrace:
    """Front rangefinder trace with one triangular nose-up excursion centred
    at ``duration_ms / 2``; the excursion spans the middle 40% of the trace."""
    _check_duration(duration_ms)
    _check_rate(sample_rate_hz)
    if pitch_delta_mm < 0:
        raise TraceError("pitch_delta_mm must be non-negative")
    _check_range(Source.BOARD_FRONT, rest_distance_mm, rest_distance_mm + pitch_delta_mm)

    times = _grid(duration_ms, sample_rate_hz)
    centre = duration_ms / 2.0
    half_width = duration_ms * RAMP_FRACTION
    values = [rest_distance_mm + pitch_delta_mm * max(0.0, 1.0 - abs(t - centre) / half_width) for t in times]
    return _build(Source.BOARD_FRONT, times, values, sample_rate_hz, "jump")


def gen_push_cycle_trace(
    cycles: int,
    cadence_hz: float,
    rest_angle_deg: float,
    min_angle_deg: float,
    sample_rate_hz: float = DEFAULT_RATE_HZ,
) -> SensorTrace:
    """Right-shoe gyration trace with ``cycles`` raised-cosine dips from the
    rest angle down to ``min_angle_deg`` and back, one per ``1/cadence_hz`` s.

    Zero cycles gives an empty trace (zero duration)."""
    _check_rate(sample_rate_hz)
    if cycles < 0:
        raise TraceError("cycles must be non-negative")
    if not cadence_hz > 0:
        raise TraceError("cadence_hz must be positive")
    if not 0 <= min_angle_deg < rest_angle_deg <= 180:
        raise TraceError("need 0 <= min_angle_deg < rest_angle_deg <= 180")

    stroke_ms = 1000.0 / cadence_hz
    times = _grid(cycles * stroke_ms, sample_rate_hz)
    depth = rest_angle_deg - min_angle_deg
    values = []
    for t in times:
        phase = (t % stroke_ms) / stroke_ms
        values.append(rest_angle_deg - depth * (1.0 - math.cos(2.0 * math.pi * phase)) / 2.0)
    return _build(Source.RIGHT_SHOE, times, values, sample_rate_hz, f"push-x{cycles}")


def gen_crouch_trace(
    duration_ms: int,
    rest_angle_deg: float,
    crouch_angle_deg: float,
    sample_rate_hz: float = DEFAULT_RATE_HZ,
) -> SensorTrace:
    """Left-shoe trace of one crouch: same ramp/hold/ramp profile as a lean."""
    _check_duration(duration_ms)
    _check_rate(sample_rate_hz)
    _check_range(Source.LEFT_SHOE, rest_angle_deg, crouch_angle_deg)
    times = _grid(duration_ms, sample_rate_hz)
    n = len(times)
    ramp = max(1, int(n * RAMP_FRACTION))
    delta = crouch_angle_deg - rest_angle_deg
    values = [rest_angle_deg + delta * min(1.0, i / ramp, (n - 1 - i) / ramp) for i in range(n)]
    return _build(Source.LEFT_SHOE, times, values, sample_rate_hz, "crouch")


def gen_turn_trace(
    duration_ms: int,
    start_deg: float,
    turn_deg: float,
    sample_rate_hz: float = DEFAULT_RATE_HZ,
) -> SensorTrace:
    """Turntable heading rotating linearly by ``turn_deg`` (positive is
    clockwise) over the trace, wrapped into [0, 360)."""
    _check_duration(duration_ms)
    _check_rate(sample_rate_hz)
    times = _grid(duration_ms, sample_rate_hz)
    n = len(times)
    values = [(start_deg + turn_deg * (i / max(1, n - 1))) % 360.0 for i in range(n)]
    return _build(Source.TURNTABLE, times, values, sample_rate_hz, "turn")


def shift_trace(trace: SensorTrace, offset_ms: int) -> SensorTrace:
    samples = tuple(SensorSample(s.timestamp_ms + offset_ms, s.source, s.value) for s in trace.samples)
    if samples and min(s.timestamp_ms for s in samples) < 0:
        raise TraceError("shift would produce negative timestamps")
    return SensorTrace(trace.sample_rate_hz, samples, trace.label)


def merge_traces(*traces: SensorTrace, label: str | None = None) -> SensorTrace:
    """Interleave traces sharing a sample rate into canonical order."""
    if not traces:
        raise TraceError("nothing to merge")
    rate = traces[0].sample_rate_hz
    if any(t.sample_rate_hz != rate for t in traces):
        raise TraceError("cannot merge traces with different sample rates")
    samples = sorted((s for t in traces for s in t.samples), key=sort_key)
    if label is None:
        label = "+".join(t.label for t in traces if t.label)
    return SensorTrace(rate, tuple(samples), label)


def concat_traces(*traces: SensorTrace, label: str | None = None) -> SensorTrace:
    """Play traces back to back; each is shifted past the end of the previous."""
    if not traces:
        raise TraceError("nothing to concatenate")
    rate = traces[0].sample_rate_hz
    out: list[SensorSample] = []
    offset = 0
    for tr in traces:
        if tr.sample_rate_hz != rate:
            raise TraceError("cannot concatenate traces with different sample rates")
        if not tr.samples:
            continue
        start = min(s.timestamp_ms for s in tr.samples)
        out.extend(SensorSample(s.timestamp_ms - start + offset, s.source, s.value) for s in tr.samples)
        offset += tr.duration_ms
    if label is None:
        label = ",".join(t.label for t in traces if t.label)
    return SensorTrace(rate, tuple(sorted(out, key=sort_key)), label)


def add_noise(trace: SensorTrace, sigma: float, seed: int) -> SensorTrace:
    """Add zero-mean Gaussian noise, then clamp to each source's range
    (turntable headings wrap instead)."""
    if sigma < 0 or not math.isfinite(sigma):
        raise TraceError("sigma must be a non-negative finite number")
    if sigma == 0 or not trace.samples:
        return trace
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=len(trace.samples))
    out = []
    for s, e in zip(trace.samples, noise):
        v = s.value + float(e)
        if s.source == Source.TURNTABLE:
            v %= 360.0
        else:
            lo, hi = VALUE_RANGES[s.source]
            v = min(hi, max(lo, v))
        out.append(SensorSample(s.timestamp_ms, s.source, v))
    return SensorTrace(trace.sample_rate_hz, tuple(out), trace.label)


def quantize_trace(trace: SensorTrace, step: float = 0.01) -> SensorTrace:
    """Round values to a fixed-point grid (the telemetry link carries centi-units)."""
    scale = round(1.0 / step)
    out = tuple(SensorSample(s.timestamp_ms, s.source, round(s.value * scale) / scale) for s in trace.samples)
    return SensorTrace(trace.sample_rate_hz, out, trace.label)


def validate_trace(trace: SensorTrace) -> None:
    """Raise TraceError on the first invariant violation."""
    period = trace.period_ms
    last: dict[Source, int] = {}
    prev_key = None
    for i, s in enumerate(trace.samples):
        if s.timestamp_ms < 0:
            raise TraceError(f"sample {i}: negative timestamp")
        lo, hi = VALUE_RANGES[s.source]
        if not lo <= s.value <= hi or (s.source == Source.TURNTABLE and s.value == hi):
            raise TraceError(f"sample {i}: {s.source.csv_name} value {s.value} out of range")
        key = sort_key(s)
        if prev_key is not None and key < prev_key:
            raise TraceError(f"sample {i}: samples out of canonical order")
        prev_key = key
        if s.source in last:
            gap = s.timestamp_ms - last[s.source]
            if gap <= 0:
                raise TraceError(f"sample {i}: {s.source.csv_name} timestamps not strictly increasing")
            if abs(gap - period) > 1.0:
                raise TraceError(f"sample {i}: {s.source.csv_name} spacing {gap} ms, expected {period:g}")
        last[s.source] = s.timestamp_ms


def write_trace(trace: SensorTrace, fh: TextIO) -> None:
    fh.write(f"# rate_hz={trace.sample_rate_hz!r}\n")
    if trace.label:
        fh.write(f"# label={trace.label}\n")
    for s in trace.samples:
        fh.write(f"{s.timestamp_ms},{s.source.csv_name},{s.value!r}\n")


def read_trace(fh: TextIO) -> SensorTrace:
    rate = None
    label = ""
    samples: list[SensorSample] = []
    last: dict[Source, int] = {}
    for row, line in enumerate(fh, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                continue
            if key == "rate_hz":
                try:
                    rate = float(value)
                except ValueError:
                    raise TraceParseError(row, f"bad rate {value!r}") from None
                if not rate > 0:
                    raise TraceParseError(row, "rate must be positive")
            elif key == "label":
                label = value
            continue
        if rate is None:
            raise TraceParseError(row, "data before '# rate_hz=' header")
        parts = line.split(",")
        if len(parts) != 3:
            raise TraceParseError(row, f"expected 3 fields, got {len(parts)}")
        try:
            t = int(parts[0])
            src = Source.from_csv(parts[1])
            v = float(parts[2])
        except ValueError as exc:
            raise TraceParseError(row, str(exc)) from None
        lo, hi = VALUE_RANGES[src]
        if not lo <= v <= hi or t < 0:
            raise TraceParseError(row, f"value {v} or timestamp {t} out of range")
        if src in last and t <= last[src]:
            raise TraceParseError(row, f"{src.csv_name} timestamp {t} not after {last[src]}")
        if samples and sort_key(SensorSample(t, src, v)) < sort_key(samples[-1]):
            raise TraceParseError(row, f"timestamp {t} goes backwards")
        last[src] = t
        samples.append(SensorSample(t, src, v))
    if rate is None:
        raise TraceParseError(0, "missing '# rate_hz=' header")
    return SensorTrace(rate, tuple(samples), label)


def save_trace(trace: SensorTrace, destination: str | os.PathLike) -> None:
    with open(destination, "w", encoding="utf-8", newline="\n") as fh:
        write_trace(trace, fh)


def load_trace(source: str | os.PathLike) -> SensorTrace:
    with open(source, encoding="utf-8") as fh:
        return read_trace(fh)


def dumps_trace(trace: SensorTrace) -> str:
    buf = io.StringIO()
    write_trace(trace, buf)
    return buf.getvalue()


def loads_trace(text: str) -> SensorTrace:
    return read_trace(io.StringIO(text))


def _hold(trace: SensorTrace, source: Source, start_ms: int, total_ms: int, rest: float) -> SensorTrace:
    """Place a single-source segment at ``start_ms`` on a ``total_ms`` grid,
    holding its first value before and its last value after."""
    period = trace.period_ms
    seg = {round(round(start_ms / period) * period) + s.timestamp_ms: s.value for s in trace.samples}
    first = trace.samples[0].value if trace.samples else rest
    last = trace.samples[-1].value if trace.samples else rest
    end = max(seg, default=-1)
    samples = []
    for t in _grid(total_ms, trace.sample_rate_hz):
        value = seg.get(t, first if t < end else last)
        samples.append(SensorSample(t, source, value))
    return SensorTrace(trace.sample_rate_hz, tuple(samples), trace.label)


def gen_ride_trace(cycles: int = 20, cadence_hz: float = 1.0, sample_rate_hz: float = DEFAULT_RATE_HZ) -> SensorTrace:
    """A scripted multi-sensor ride: steady pushing, a left lean, a jump, a
    right lean, a quarter turn and a crouch.  Every sensor streams for the
    whole ride, resting between its scripted segments."""
    _check_rate(sample_rate_hz)
    if not cadence_hz > 0:
        raise TraceError("cadence_hz must be positive")
    total = max(round(cycles * 1000.0 / cadence_hz), 15000)
    push = gen_push_cycle_trace(cycles, cadence_hz, 160.0, 100.0, sample_rate_hz)
    left = gen_lean_trace("left", 2000, 150.0, 60.0, sample_rate_hz)
    right = gen_lean_trace("right", 2000, 150.0, 60.0, sample_rate_hz)
    side = merge_traces(left, shift_trace(right, round(round(5000 / left.period_ms) * left.period_ms)))
    parts = [
        _hold(push, Source.RIGHT_SHOE, 0, total, 160.0),
        _hold(side, Source.BOARD_SIDE, 3000, total, 150.0),
        _hold(gen_jump_trace(1000, 120.0, 80.0, sample_rate_hz), Source.BOARD_FRONT, 6000, total, 120.0),
        _hold(gen_turn_trace(1000, 0.0, 90.0, sample_rate_hz), Source.TURNTABLE, 10000, total, 0.0),
        _hold(gen_crouch_trace(3000, 160.0, 70.0, sample_rate_hz), Source.LEFT_SHOE, 12000, total, 160.0),
    ]
    return merge_traces(*parts, label="ride")
