"""Pure-Python kernels: folds of the reference transition functions.

Same call signatures as the compiled ``_ckernels`` module, which must produce
identical results.
"""

from __future__ import annotations

import numpy as np

from skatectl.sensors import SensorSample, Source


def run_gestures(t, src, val, cfg):
    from skatectl.gestures import EngineState, ThresholdConfig, engine_step

    low, high, hyst, pitch, push, crouch, debounce, step, rest, crouch_hyst = cfg
    config = ThresholdConfig(
        tilt_low_mm=low, tilt_high_mm=high, tilt_hysteresis_mm=hyst, jump_pitch_mm=pitch,
        push_angle_deg=push, crouch_angle_deg=crouch, debounce_ms=debounce, heading_step_deg=step,
        front_rest_mm=None if rest != rest else rest, crouch_hysteresis_deg=crouch_hyst,
    )
    state = EngineState()
    ev_t: list[int] = []
    ev_k: list[int] = []
    for ti, si, vi in zip(t.tolist(), src.tolist(), val.tolist()):
        state, events = engine_step(state, SensorSample(ti, Source(si), vi), config)
        for ev in events:
            ev_t.append(ev.timestamp_ms)
            ev_k.append(int(ev.kind))
    return np.array(ev_t, dtype=np.int64), np.array(ev_k, dtype=np.int64)


def run_episode(ev_t, ev_k, length, half_width, obstacles, coins, turns, params, timeout_ms, record):
    from skatectl.game import (
        CourseModel, SimParams, apply_action, can_move, initial_state, step_physics,
    )
    from skatectl.gestures import ActionEvent, ActionKind

    course = CourseModel(length, half_width, tuple(map(tuple, obstacles)), tuple(map(tuple, coins)),
                         tuple(map(tuple, turns)))
    sim = SimParams(*params)
    events = [ActionEvent(a, ActionKind(b)) for a, b in zip(ev_t.tolist(), ev_k.tolist())]
    rows: list[tuple] = []
    state = initial_state(course)
    i, n = 0, len(events)
    finished = False
    while True:
        while i < n and events[i].timestamp_ms <= state.t_ms:
            state = apply_action(state, events[i], sim)
            i += 1
        if state.s_m >= course.length_m:
            finished = True
            break
        if state.t_ms >= timeout_ms or (i == n and not can_move(state)):
            break
        state = step_physics(state, course, sim)
        if record:
            rows.append((state.t_ms, state.speed_mps, state.lateral_m, state.height_m, state.pushes))
    trace = None
    if record:
        trace = _record_arrays(rows)
    return (state.t_ms if finished else None, state.coins, state.collisions, state.pushes, state.s_m, trace)


def _record_arrays(rows):
    t, speed, lateral, height, pushes = zip(*rows) if rows else ((),) * 5
    return {
        "t_ms": np.array(t, dtype=np.int64),
        "speed": np.array(speed, dtype=np.float64),
        "lateral": np.array(lateral, dtype=np.float64),
        "height": np.array(height, dtype=np.float64),
        "pushes": np.array(pushes, dtype=np.int64),
    }
