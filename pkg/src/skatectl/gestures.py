"""Threshold gesture recognition over merged sensor streams.

The engine is a deterministic finite-state transducer: ``engine_step`` maps
(state, sample) to (state, events).  Channels are independent:

* board side rangefinder -> lean left / right / off, with a hysteresis band
  around both thresholds so noisy readings near a threshold do not chatter;
* board front rangefinder -> jump, once per nose-up excursion, debounced;
* right shoe gyration -> push, fired when the angle comes back up through the
  push threshold after having fallen through it (end of the stroke);
* left shoe gyration -> crouch on / off;
* turntable heading -> one heading event per ``heading_step_deg`` of rotation.
"""

from __future__ import annotations

import enum
import io
import math
import os
from dataclasses import dataclass, replace
from typing import Iterable, Sequence, TextIO

from skatectl.sensors import SensorSample, SensorTrace, Source


class ActionKind(enum.IntEnum):
    LEAN_LEFT_ON = 0
    LEAN_RIGHT_ON = 1
    LEAN_OFF = 2
    JUMP = 3
    PUSH = 4
    CROUCH_ON = 5
    CROUCH_OFF = 6
    HEADING_LEFT = 7
    HEADING_RIGHT = 8

    @property
    def label(self) -> str:
        return "".join(p.capitalize() for p in self.name.split("_"))

    @classmethod
    def from_label(cls, label: str) -> "ActionKind":
        for kind in cls:
            if kind.label == label.strip():
                return kind
        raise ValueError(f"unknown action kind {label!r}")


class HidKey(enum.Enum):
    ARROW_LEFT = "ArrowLeft"
    ARROW_RIGHT = "ArrowRight"
    ARROW_UP = "ArrowUp"
    SPACE = "Space"
    KEY_C = "KeyC"


class KeyAction(enum.Enum):
    DOWN = "Down"
    UP = "Up"


class HidProtocolError(ValueError):
    """Action stream that cannot be expressed as alternating key presses."""


@dataclass(frozen=True)
class ActionEvent:
    timestamp_ms: int
    kind: ActionKind


@dataclass(frozen=True)
class HidEvent:
    timestamp_ms: int
    key: HidKey
    action: KeyAction


@dataclass(frozen=True)
class ThresholdConfig:
    tilt_low_mm: float = 120.0
    tilt_high_mm: float = 180.0
    tilt_hysteresis_mm: float = 10.0
    jump_pitch_mm: float = 40.0
    push_angle_deg: float = 120.0
    crouch_angle_deg: float = 90.0
    debounce_ms: int = 150
    heading_step_deg: float = 15.0
    # None: take the first front reading as the resting height.
    front_rest_mm: float | None = None
    crouch_hysteresis_deg: float = 5.0

    def __post_init__(self):
        h = self.tilt_hysteresis_mm
        if h < 0 or not self.tilt_low_mm + h < self.tilt_high_mm - h:
            raise ValueError("tilt bands overlap: need tilt_low + hysteresis < tilt_high - hysteresis")
        if not 0 < self.push_angle_deg < 180:
            raise ValueError("push_angle_deg must be in (0, 180)")
        if self.debounce_ms < 0:
            raise ValueError("debounce_ms must be non-negative")
        if self.jump_pitch_mm <= 0 or self.heading_step_deg <= 0 or self.crouch_hysteresis_deg < 0:
            raise ValueError("jump_pitch_mm and heading_step_deg must be positive")

    def as_tuple(self) -> tuple:
        """Flat numeric form handed to the compiled kernel."""
        rest = math.nan if self.front_rest_mm is None else float(self.front_rest_mm)
        return (
            float(self.tilt_low_mm), float(self.tilt_high_mm), float(self.tilt_hysteresis_mm),
            float(self.jump_pitch_mm), float(self.push_angle_deg), float(self.crouch_angle_deg),
            int(self.debounce_ms), float(self.heading_step_deg), rest, float(self.crouch_hysteresis_deg),
        )


# Lean states.
NEUTRAL, LEFT, RIGHT = 0, -1, 1
# Push channel states.
UNKNOWN, ABOVE, BELOW_ARMED, BELOW_IDLE = 0, 1, 2, 3


@dataclass(frozen=True)
class EngineState:
    last_t: int = -1
    lean: int = NEUTRAL
    front_rest: float | None = None
    jump_armed: bool = True
    last_jump_t: int | None = None
    push: int = UNKNOWN
    last_push_t: int | None = None
    crouching: bool = False
    heading_ref: float | None = None


def _debounced(t: int, last: int | None, debounce_ms: int) -> bool:
    return last is None or t - last >= debounce_ms


def engine_step(
    state: EngineState, sample: SensorSample, config: ThresholdConfig
) -> tuple[EngineState, list[ActionEvent]]:
    t = sample.timestamp_ms
    if t < state.last_t:
        raise ValueError(f"sample at {t} ms arrives after {state.last_t} ms")
    v = sample.value
    events: list[ActionEvent] = []
    changes: dict = {"last_t": t}

    if sample.source == Source.BOARD_SIDE:
        lo, hi, h = config.tilt_low_mm, config.tilt_high_mm, config.tilt_hysteresis_mm
        lean = state.lean
        if lean != NEUTRAL:
            # Back inside the neutral band (or straight through it to the far side).
            if (lean == LEFT and v >= lo + h) or (lean == RIGHT and v <= hi - h):
                events.append(ActionEvent(t, ActionKind.LEAN_OFF))
                lean = NEUTRAL
        if lean == NEUTRAL:
            if v < lo - h:
                events.append(ActionEvent(t, ActionKind.LEAN_LEFT_ON))
                lean = LEFT
            elif v > hi + h:
                events.append(ActionEvent(t, ActionKind.LEAN_RIGHT_ON))
                lean = RIGHT
        changes["lean"] = lean

    elif sample.source == Source.BOARD_FRONT:
        rest = config.front_rest_mm if config.front_rest_mm is not None else state.front_rest
        if rest is None:
            rest = v
            changes["front_rest"] = v
        trigger = rest + config.jump_pitch_mm
        if state.jump_armed:
            if v >= trigger and _debounced(t, state.last_jump_t, config.debounce_ms):
                events.append(ActionEvent(t, ActionKind.JUMP))
                changes["jump_armed"] = False
                changes["last_jump_t"] = t
        elif v < trigger - config.tilt_hysteresis_mm:
            changes["jump_armed"] = True

    elif sample.source == Source.RIGHT_SHOE:
        angle = config.push_angle_deg
        if v < angle:
            if state.push in (ABOVE, BELOW_ARMED):
                changes["push"] = BELOW_ARMED
            else:
                changes["push"] = BELOW_IDLE
        else:
            if state.push == BELOW_ARMED and _debounced(t, state.last_push_t, config.debounce_ms):
                events.append(ActionEvent(t, ActionKind.PUSH))
                changes["last_push_t"] = t
            changes["push"] = ABOVE

    elif sample.source == Source.LEFT_SHOE:
        if not state.crouching and v < config.crouch_angle_deg:
            events.append(ActionEvent(t, ActionKind.CROUCH_ON))
            changes["crouching"] = True
        elif state.crouching and v >= config.crouch_angle_deg + config.crouch_hysteresis_deg:
            events.append(ActionEvent(t, ActionKind.CROUCH_OFF))
            changes["crouching"] = False

    elif sample.source == Source.TURNTABLE:
        ref = state.heading_ref
        if ref is None:
            ref = v
        else:
            step = config.heading_step_deg
            while True:
                diff = (v - ref + 180.0) % 360.0 - 180.0
                if diff >= step:
                    events.append(ActionEvent(t, ActionKind.HEADING_RIGHT))
                    ref = (ref + step) % 360.0
                elif diff <= -step:
                    events.append(ActionEvent(t, ActionKind.HEADING_LEFT))
                    ref = (ref - step) % 360.0
                else:
                    break
        changes["heading_ref"] = ref

    return replace(state, **changes), events


def fold_engine(samples: Iterable[SensorSample], config: ThresholdConfig) -> list[ActionEvent]:
    """Reference path: fold ``engine_step`` over samples from the initial state."""
    state = EngineState()
    out: list[ActionEvent] = []
    for sample in samples:
        state, events = engine_step(state, sample, config)
        out.extend(events)
    return out


def run_engine(trace: SensorTrace, config: ThresholdConfig | None = None) -> list[ActionEvent]:
    """Run the gesture engine over a whole trace using the active kernel backend."""
    from skatectl import kernels

    config = config or ThresholdConfig()
    t, src, val = trace.as_arrays()
    ev_t, ev_k = kernels.run_gestures(t, src, val, config.as_tuple())
    return [ActionEvent(int(a), ActionKind(int(b))) for a, b in zip(ev_t, ev_k)]


_TAPS = {ActionKind.JUMP: HidKey.SPACE, ActionKind.PUSH: HidKey.ARROW_UP}


def to_hid(events: Sequence[ActionEvent]) -> list[HidEvent]:
    """Translate actions into key presses.  Leans and crouch hold a key;
    jump and push are taps (down and up at the same timestamp).  Heading
    events drive the view, not a key, and are skipped."""
    out: list[HidEvent] = []
    held_arrow: HidKey | None = None
    crouch_down = False
    last_t = None
    for ev in events:
        if last_t is not None and ev.timestamp_ms < last_t:
            raise HidProtocolError(f"events out of order at {ev.timestamp_ms} ms")
        last_t = ev.timestamp_ms
        t, kind = ev.timestamp_ms, ev.kind
        if kind in (ActionKind.LEAN_LEFT_ON, ActionKind.LEAN_RIGHT_ON):
            if held_arrow is not None:
                raise HidProtocolError(f"lean started at {t} ms while {held_arrow.value} is held")
            held_arrow = HidKey.ARROW_LEFT if kind == ActionKind.LEAN_LEFT_ON else HidKey.ARROW_RIGHT
            out.append(HidEvent(t, held_arrow, KeyAction.DOWN))
        elif kind == ActionKind.LEAN_OFF:
            if held_arrow is None:
                raise HidProtocolError(f"LeanOff at {t} ms with no lean active")
            out.append(HidEvent(t, held_arrow, KeyAction.UP))
            held_arrow = None
        elif kind in _TAPS:
            out.append(HidEvent(t, _TAPS[kind], KeyAction.DOWN))
            out.append(HidEvent(t, _TAPS[kind], KeyAction.UP))
        elif kind == ActionKind.CROUCH_ON:
            if crouch_down:
                raise HidProtocolError(f"CrouchOn at {t} ms while already crouching")
            crouch_down = True
            out.append(HidEvent(t, HidKey.KEY_C, KeyAction.DOWN))
        elif kind == ActionKind.CROUCH_OFF:
            if not crouch_down:
                raise HidProtocolError(f"CrouchOff at {t} ms with no crouch active")
            crouch_down = False
            out.append(HidEvent(t, HidKey.KEY_C, KeyAction.UP))
    return out


def write_events(events: Iterable[ActionEvent], fh: TextIO) -> None:
    fh.write("timestamp_ms,kind\n")
    for ev in events:
        fh.write(f"{ev.timestamp_ms},{ev.kind.label}\n")


def read_events(fh: TextIO) -> list[ActionEvent]:
    out = []
    for row, line in enumerate(fh, start=1):
        line = line.strip()
        if not line or (row == 1 and line.startswith("timestamp_ms")):
            continue
        try:
            t, kind = line.split(",")
            out.append(ActionEvent(int(t), ActionKind.from_label(kind)))
        except ValueError as exc:
            raise ValueError(f"event log row {row}: {exc}") from None
    return out


def write_hid(events: Iterable[HidEvent], fh: TextIO) -> None:
    fh.write("timestamp_ms,key,action\n")
    for ev in events:
        fh.write(f"{ev.timestamp_ms},{ev.key.value},{ev.action.value}\n")


def read_hid(fh: TextIO) -> list[HidEvent]:
    out = []
    for row, line in enumerate(fh, start=1):
        line = line.strip()
        if not line or (row == 1 and line.startswith("timestamp_ms")):
            continue
        t, key, action = line.split(",")
        out.append(HidEvent(int(t), HidKey(key), KeyAction(action)))
    return out


def save_events(events: Iterable[ActionEvent], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_events(events, fh)


def load_events(path: str | os.PathLike) -> list[ActionEvent]:
    with open(path, encoding="utf-8") as fh:
        return read_events(fh)


def dumps_events(events: Iterable[ActionEvent]) -> str:
    buf = io.StringIO()
    write_events(events, buf)
    return buf.getvalue()
