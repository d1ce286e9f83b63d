"""Fixed-timestep skating kinematics on a lane-course abstraction.

The course is a 1-D arc-length track of ``length_m`` with a lateral offset
bounded by road-border colliders at ``±half_width_m``.  Pushes add speed,
linear friction bleeds it off, leaning slides the rider sideways, jumps are
ballistic, coins are collected once, obstacles halve speed on contact and
turn waypoints halve speed unless a matching heading action arrives within
``TURN_WINDOW_MS`` of reaching them.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

from skatectl.gestures import ActionEvent, ActionKind

TURN_WINDOW_MS = 2000


class Disc(NamedTuple):
    s_m: float
    lateral_m: float
    radius_m: float


class Turn(NamedTuple):
    s_m: float
    heading_change_deg: float


@dataclass(frozen=True)
class CourseModel:
    length_m: float
    half_width_m: float
    obstacles: tuple[Disc, ...] = ()
    coins: tuple[Disc, ...] = ()
    turns: tuple[Turn, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(Disc(*map(float, o)) for o in self.obstacles))
        object.__setattr__(self, "coins", tuple(Disc(*map(float, c)) for c in self.coins))
        turns = sorted((Turn(*map(float, t)) for t in self.turns), key=lambda t: t.s_m)
        object.__setattr__(self, "turns", tuple(turns))
        if not (self.length_m > 0 and self.half_width_m > 0):
            raise ValueError("course length and half width must be positive")
        for d in self.obstacles + self.coins:
            if not 0 <= d.s_m <= self.length_m or abs(d.lateral_m) > self.half_width_m or d.radius_m < 0:
                raise ValueError(f"object {tuple(d)} lies off the course")
        for tn in self.turns:
            if not 0 <= tn.s_m <= self.length_m:
                raise ValueError(f"turn at {tn.s_m} m lies off the course")

    def to_dict(self) -> dict:
        return {
            "length_m": self.length_m,
            "half_width_m": self.half_width_m,
            "obstacles": [list(o) for o in self.obstacles],
            "coins": [list(c) for c in self.coins],
            "turns": [list(t) for t in self.turns],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CourseModel":
        return cls(
            length_m=float(d["length_m"]),
            half_width_m=float(d["half_width_m"]),
            obstacles=tuple(d.get("obstacles", ())),
            coins=tuple(d.get("coins", ())),
            turns=tuple(d.get("turns", ())),
        )


def load_course(path: str | os.PathLike) -> CourseModel:
    with open(path, encoding="utf-8") as fh:
        return CourseModel.from_dict(json.load(fh))


def save_course(course: CourseModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(course.to_dict(), fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class SimParams:
    push_impulse_mps: float = 1.5
    friction_decel_mps2: float = 0.8
    crouch_speed_factor: float = 1.3
    lean_lateral_speed_mps: float = 1.0
    jump_up_speed_mps: float = 3.0
    gravity_mps2: float = 9.81
    coin_pickup_radius_m: float = 0.5
    dt_ms: int = 10

    def __post_init__(self):
        values = (self.push_impulse_mps, self.friction_decel_mps2, self.lean_lateral_speed_mps,
                  self.jump_up_speed_mps, self.gravity_mps2, self.coin_pickup_radius_m, self.dt_ms)
        if any(not v > 0 for v in values):
            raise ValueError("simulation parameters must be positive")
        if self.crouch_speed_factor < 1:
            raise ValueError("crouch_speed_factor must be >= 1")

    def as_tuple(self) -> tuple:
        return (float(self.push_impulse_mps), float(self.friction_decel_mps2), float(self.crouch_speed_factor),
                float(self.lean_lateral_speed_mps), float(self.jump_up_speed_mps), float(self.gravity_mps2),
                float(self.coin_pickup_radius_m), int(self.dt_ms))


@dataclass(frozen=True)
class RiderState:
    s_m: float = 0.0
    lateral_m: float = 0.0
    speed_mps: float = 0.0
    height_m: float = 0.0
    vertical_speed_mps: float = 0.0
    crouching: bool = False
    lean: int = 0  # -1 left, 0 none, +1 right
    coins: int = 0
    collisions: int = 0
    t_ms: int = 0
    pushes: int = 0
    heading_deg: float = 0.0
    coins_taken: frozenset = frozenset()
    touching: frozenset = frozenset()
    next_turn: int = 0
    # Turns reached but not yet confirmed: (turn index, deadline_ms).
    pending_turns: tuple[tuple[int, int], ...] = ()
    # Most recent heading action not yet used by a turn, per direction.
    heading_credit: tuple[int | None, int | None] = (None, None)
    turn_deltas: tuple[float, ...] = field(default=(), compare=False, repr=False)

    @property
    def airborne(self) -> bool:
        return self.height_m > 0.0 or self.vertical_speed_mps > 0.0


def initial_state(course: CourseModel) -> RiderState:
    return RiderState(turn_deltas=tuple(t.heading_change_deg for t in course.turns))


@dataclass(frozen=True)
class EpisodeReport:
    finish_time_ms: int | None
    coins: int
    collisions: int
    pushes: int
    distance_m: float

    @property
    def dnf(self) -> bool:
        return self.finish_time_ms is None

    def csv_row(self) -> str:
        finish = "DNF" if self.finish_time_ms is None else str(self.finish_time_ms)
        return f"{finish},{self.coins},{self.collisions},{self.pushes},{self.distance_m!r}"


REPORT_HEADER = "finish_time_ms,coins,collisions,pushes,distance_m"


def _turn_side(delta: float) -> int:
    # Positive heading change is a right (clockwise) turn.
    return 1 if delta > 0 else 0


def apply_action(state: RiderState, event: ActionEvent, params: SimParams) -> RiderState:
    kind = event.kind
    if kind == ActionKind.PUSH:
        gain = params.push_impulse_mps * (params.crouch_speed_factor if state.crouching else 1.0)
        return replace(state, speed_mps=state.speed_mps + gain, pushes=state.pushes + 1)
    if kind == ActionKind.LEAN_LEFT_ON:
        return replace(state, lean=-1)
    if kind == ActionKind.LEAN_RIGHT_ON:
        return replace(state, lean=1)
    if kind == ActionKind.LEAN_OFF:
        return replace(state, lean=0)
    if kind == ActionKind.JUMP:
        if state.height_m == 0.0 and state.vertical_speed_mps == 0.0:
            return replace(state, vertical_speed_mps=params.jump_up_speed_mps)
        return state
    if kind == ActionKind.CROUCH_ON:
        return replace(state, crouching=True)
    if kind == ActionKind.CROUCH_OFF:
        return replace(state, crouching=False)
    if kind in (ActionKind.HEADING_LEFT, ActionKind.HEADING_RIGHT):
        side = 1 if kind == ActionKind.HEADING_RIGHT else 0
        for pos, (idx, _deadline) in enumerate(state.pending_turns):
            if _turn_side(state.turn_deltas[idx]) == side:
                pending = state.pending_turns[:pos] + state.pending_turns[pos + 1:]
                return replace(state, pending_turns=pending, heading_deg=state.heading_deg + state.turn_deltas[idx])
        credit = list(state.heading_credit)
        credit[side] = event.timestamp_ms
        return replace(state, heading_credit=tuple(credit))
    return state


def step_physics(state: RiderState, course: CourseModel, params: SimParams) -> RiderState:
    dt = params.dt_ms / 1000.0
    t = state.t_ms + params.dt_ms
    speed = max(0.0, state.speed_mps - params.friction_decel_mps2 * dt)
    s = state.s_m + speed * dt
    lateral = state.lateral_m + state.lean * params.lean_lateral_speed_mps * dt
    lateral = min(course.half_width_m, max(-course.half_width_m, lateral))

    height, vz = state.height_m, state.vertical_speed_mps
    if height > 0.0 or vz > 0.0:
        height = height + vz * dt - 0.5 * params.gravity_mps2 * dt * dt
        vz = vz - params.gravity_mps2 * dt
        if height <= 0.0:
            height, vz = 0.0, 0.0

    coins, taken = state.coins, state.coins_taken
    r = params.coin_pickup_radius_m
    for i, c in enumerate(course.coins):
        if i in taken:
            continue
        ds, dl, dh = s - c.s_m, lateral - c.lateral_m, height - c.radius_m
        if math.sqrt(ds * ds + dl * dl + dh * dh) <= r:
            coins += 1
            taken = taken | {i}

    collisions, touching = state.collisions, state.touching
    now_touching = set()
    for i, o in enumerate(course.obstacles):
        ds, dl = s - o.s_m, lateral - o.lateral_m
        if height == 0.0 and math.sqrt(ds * ds + dl * dl) <= o.radius_m:
            now_touching.add(i)
            if i not in touching:
                collisions += 1
                speed *= 0.5
    touching = frozenset(now_touching)

    heading = state.heading_deg
    pending = list(state.pending_turns)
    credit = list(state.heading_credit)
    next_turn = state.next_turn
    while next_turn < len(course.turns) and s >= course.turns[next_turn].s_m:
        delta = state.turn_deltas[next_turn]
        side = _turn_side(delta)
        if delta == 0.0:
            pass
        elif credit[side] is not None and credit[side] >= t - TURN_WINDOW_MS:
            credit[side] = None
            heading += delta
        else:
            pending.append((next_turn, t + TURN_WINDOW_MS))
        next_turn += 1
    kept = []
    for idx, deadline in pending:
        if t > deadline:
            speed *= 0.5
            heading += state.turn_deltas[idx]
        else:
            kept.append((idx, deadline))

    return replace(
        state, t_ms=t, speed_mps=speed, s_m=s, lateral_m=lateral, height_m=height, vertical_speed_mps=vz,
        coins=coins, coins_taken=taken, collisions=collisions, touching=touching, heading_deg=heading,
        pending_turns=tuple(kept), heading_credit=tuple(credit), next_turn=next_turn,
    )


def can_move(state: RiderState) -> bool:
    return state.speed_mps > 0.0 or state.airborne or bool(state.pending_turns)


def report_from_state(state: RiderState, finished: bool) -> EpisodeReport:
    return EpisodeReport(
        finish_time_ms=state.t_ms if finished else None,
        coins=state.coins,
        collisions=state.collisions,
        pushes=state.pushes,
        distance_m=state.s_m,
    )


def reference_episode(
    events: Sequence[ActionEvent], course: CourseModel, params: SimParams, timeout_ms: int
) -> tuple[EpisodeReport, RiderState]:
    """Fold ``apply_action``/``step_physics`` over an event list.

    Events are applied at the first step boundary at or after their timestamp.
    """
    state = initial_state(course)
    i, n = 0, len(events)
    while True:
        while i < n and events[i].timestamp_ms <= state.t_ms:
            state = apply_action(state, events[i], params)
            i += 1
        if state.s_m >= course.length_m:
            return report_from_state(state, True), state
        if state.t_ms >= timeout_ms or (i == n and not can_move(state)):
            return report_from_state(state, False), state
        state = step_physics(state, course, params)


def run_episode(
    events: Sequence[ActionEvent],
    course: CourseModel,
    params: SimParams | None = None,
    timeout_ms: int = 120_000,
) -> EpisodeReport:
    """Simulate one run with the active kernel backend."""
    from skatectl import kernels

    params = params or SimParams()
    _check_ordered(events)
    result = kernels.run_episode(*episode_arrays(events, course), params.as_tuple(), int(timeout_ms), False)
    return EpisodeReport(*result[:5])


def run_episode_traced(
    events: Sequence[ActionEvent],
    course: CourseModel,
    params: SimParams | None = None,
    timeout_ms: int = 120_000,
):
    """Like ``run_episode`` but also return per-step arrays
    (t_ms, speed, lateral, height, pushes) recorded after every step."""
    from skatectl import kernels

    params = params or SimParams()
    _check_ordered(events)
    result = kernels.run_episode(*episode_arrays(events, course), params.as_tuple(), int(timeout_ms), True)
    return EpisodeReport(*result[:5]), result[5]


def _check_ordered(events: Sequence[ActionEvent]) -> None:
    for a, b in zip(events, events[1:]):
        if b.timestamp_ms < a.timestamp_ms:
            raise ValueError(f"events out of order at {b.timestamp_ms} ms")


def episode_arrays(events: Sequence[ActionEvent], course: CourseModel):
    import numpy as np

    ev_t = np.array([e.timestamp_ms for e in events], dtype=np.int64)
    ev_k = np.array([int(e.kind) for e in events], dtype=np.int64)
    obstacles = np.array([tuple(o) for o in course.obstacles], dtype=np.float64).reshape(-1, 3)
    coins = np.array([tuple(c) for c in course.coins], dtype=np.float64).reshape(-1, 3)
    turns = np.array([tuple(t) for t in course.turns], dtype=np.float64).reshape(-1, 2)
    return ev_t, ev_k, float(course.length_m), float(course.half_width_m), obstacles, coins, turns
