# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled gesture-engine and episode kernels.

Line-for-line mirrors of the reference transitions in ``gestures`` and
``game``; results must match the pure-Python backend bit for bit, so the
floating-point expressions keep the same operation order.
"""

import numpy as np

from libc.math cimport fmod, sqrt, isnan, copysign
from libc.stdint cimport int64_t

cdef enum:
    TURN_WINDOW_MS = 2000

cdef enum:  # ActionKind codes
    LEAN_LEFT_ON = 0
    LEAN_RIGHT_ON = 1
    LEAN_OFF = 2
    JUMP = 3
    PUSH = 4
    CROUCH_ON = 5
    CROUCH_OFF = 6
    HEADING_LEFT = 7
    HEADING_RIGHT = 8

cdef enum:  # Source codes
    BOARD_SIDE = 0
    BOARD_FRONT = 1
    LEFT_SHOE = 2
    RIGHT_SHOE = 3
    TURNTABLE = 4

cdef enum:  # push channel states
    UNKNOWN = 0
    ABOVE = 1
    BELOW_ARMED = 2
    BELOW_IDLE = 3


cdef inline double pymod(double a, double b) noexcept:
    cdef double r = fmod(a, b)
    if r != 0.0:
        if (r < 0.0) != (b < 0.0):
            r += b
    else:
        r = copysign(0.0, b)
    return r


def run_gestures(const int64_t[:] t, const int64_t[:] src, const double[:] val, cfg):
    cdef double low = cfg[0], high = cfg[1], hyst = cfg[2], pitch = cfg[3]
    cdef double push_angle = cfg[4], crouch_angle = cfg[5]
    cdef int64_t debounce = cfg[6]
    cdef double step = cfg[7], cfg_rest = cfg[8], crouch_hyst = cfg[9]

    cdef Py_ssize_t i, n = t.shape[0]
    cdef int64_t sc
    cdef int64_t ti, last_t = -1, last_jump = 0, last_push = 0
    cdef double v, rest = 0.0, trigger, diff, heading_ref = 0.0
    cdef int lean = 0, push = UNKNOWN
    cdef bint has_rest = not isnan(cfg_rest)
    cdef bint jump_armed = True, has_last_jump = False, has_last_push = False
    cdef bint crouching = False, has_heading = False
    if has_rest:
        rest = cfg_rest

    ev_t = []
    ev_k = []
    for i in range(n):
        ti = t[i]
        v = val[i]
        if ti < last_t:
            raise ValueError(f"sample at {ti} ms arrives after {last_t} ms")
        last_t = ti
        sc = src[i]
        if sc == BOARD_SIDE:
            if lean != 0:
                if (lean == -1 and v >= low + hyst) or (lean == 1 and v <= high - hyst):
                    ev_t.append(ti); ev_k.append(LEAN_OFF)
                    lean = 0
            if lean == 0:
                if v < low - hyst:
                    ev_t.append(ti); ev_k.append(LEAN_LEFT_ON)
                    lean = -1
                elif v > high + hyst:
                    ev_t.append(ti); ev_k.append(LEAN_RIGHT_ON)
                    lean = 1
        elif sc == BOARD_FRONT:
            if not has_rest:
                rest = v
                has_rest = True
            trigger = rest + pitch
            if jump_armed:
                if v >= trigger and (not has_last_jump or ti - last_jump >= debounce):
                    ev_t.append(ti); ev_k.append(JUMP)
                    jump_armed = False
                    last_jump = ti
                    has_last_jump = True
            elif v < trigger - hyst:
                jump_armed = True
        elif sc == RIGHT_SHOE:
            if v < push_angle:
                if push == ABOVE or push == BELOW_ARMED:
                    push = BELOW_ARMED
                else:
                    push = BELOW_IDLE
            else:
                if push == BELOW_ARMED and (not has_last_push or ti - last_push >= debounce):
                    ev_t.append(ti); ev_k.append(PUSH)
                    last_push = ti
                    has_last_push = True
                push = ABOVE
        elif sc == LEFT_SHOE:
            if not crouching and v < crouch_angle:
                ev_t.append(ti); ev_k.append(CROUCH_ON)
                crouching = True
            elif crouching and v >= crouch_angle + crouch_hyst:
                ev_t.append(ti); ev_k.append(CROUCH_OFF)
                crouching = False
        elif sc == TURNTABLE:
            if not has_heading:
                heading_ref = v
                has_heading = True
            else:
                while True:
                    diff = pymod(v - heading_ref + 180.0, 360.0) - 180.0
                    if diff >= step:
                        ev_t.append(ti); ev_k.append(HEADING_RIGHT)
                        heading_ref = pymod(heading_ref + step, 360.0)
                    elif diff <= -step:
                        ev_t.append(ti); ev_k.append(HEADING_LEFT)
                        heading_ref = pymod(heading_ref - step, 360.0)
                    else:
                        break
        else:
            raise ValueError(f"unknown source code {sc}")
    return np.array(ev_t, dtype=np.int64), np.array(ev_k, dtype=np.int64)


def run_episode(const int64_t[:] ev_t, const int64_t[:] ev_k, double length, double half_width,
                const double[:, :] obstacles, const double[:, :] coins, const double[:, :] turns,
                params, int64_t timeout_ms, bint record):
    cdef double push_impulse = params[0], friction = params[1], crouch_factor = params[2]
    cdef double lat_speed = params[3], jump_speed = params[4], gravity = params[5], pickup = params[6]
    cdef int64_t dt_ms = params[7]
    cdef double dt = dt_ms / 1000.0

    cdef Py_ssize_t n_ev = ev_t.shape[0], n_obs = obstacles.shape[0]
    cdef Py_ssize_t n_coin = coins.shape[0], n_turn = turns.shape[0]

    # rider state
    cdef double s = 0.0, lateral = 0.0, speed = 0.0, height = 0.0, vz = 0.0, heading = 0.0
    cdef bint crouching = False
    cdef int lean = 0
    cdef int64_t n_coins = 0, collisions = 0, pushes = 0, t = 0
    cdef Py_ssize_t next_turn = 0, n_pending = 0

    taken_arr = np.zeros(max(n_coin, 1), dtype=np.uint8)
    touch_arr = np.zeros(max(n_obs, 1), dtype=np.uint8)
    pend_idx_arr = np.zeros(max(n_turn, 1), dtype=np.int64)
    pend_dead_arr = np.zeros(max(n_turn, 1), dtype=np.int64)
    cdef unsigned char[:] taken = taken_arr
    cdef unsigned char[:] touching = touch_arr
    cdef int64_t[:] pend_idx = pend_idx_arr
    cdef int64_t[:] pend_dead = pend_dead_arr
    cdef bint has_credit[2]
    cdef int64_t credit[2]
    has_credit[0] = False
    has_credit[1] = False
    credit[0] = 0
    credit[1] = 0

    cdef Py_ssize_t i = 0, j, k, m, cap = 0, n_rec = 0
    cdef int64_t kind
    cdef int side
    cdef double gain, ds, dl, dh, delta
    cdef bint finished = False, hit, matched

    cdef int64_t[:] rec_t
    cdef double[:] rec_speed, rec_lat, rec_h
    cdef int64_t[:] rec_push
    if record:
        cap = timeout_ms // dt_ms + 2
        rec_t_arr = np.zeros(cap, dtype=np.int64)
        rec_speed_arr = np.zeros(cap)
        rec_lat_arr = np.zeros(cap)
        rec_h_arr = np.zeros(cap)
        rec_push_arr = np.zeros(cap, dtype=np.int64)
        rec_t = rec_t_arr
        rec_speed = rec_speed_arr
        rec_lat = rec_lat_arr
        rec_h = rec_h_arr
        rec_push = rec_push_arr

    while True:
        # apply_action for every event due at or before now
        while i < n_ev and ev_t[i] <= t:
            kind = ev_k[i]
            if kind == PUSH:
                gain = push_impulse * (crouch_factor if crouching else 1.0)
                speed = speed + gain
                pushes += 1
            elif kind == LEAN_LEFT_ON:
                lean = -1
            elif kind == LEAN_RIGHT_ON:
                lean = 1
            elif kind == LEAN_OFF:
                lean = 0
            elif kind == JUMP:
                if height == 0.0 and vz == 0.0:
                    vz = jump_speed
            elif kind == CROUCH_ON:
                crouching = True
            elif kind == CROUCH_OFF:
                crouching = False
            elif kind == HEADING_LEFT or kind == HEADING_RIGHT:
                side = 1 if kind == HEADING_RIGHT else 0
                matched = False
                for j in range(n_pending):
                    delta = turns[pend_idx[j], 1]
                    if (1 if delta > 0 else 0) == side:
                        heading = heading + delta
                        for m in range(j, n_pending - 1):
                            pend_idx[m] = pend_idx[m + 1]
                            pend_dead[m] = pend_dead[m + 1]
                        n_pending -= 1
                        matched = True
                        break
                if not matched:
                    has_credit[side] = True
                    credit[side] = ev_t[i]
            i += 1

        if s >= length:
            finished = True
            break
        if t >= timeout_ms or (i == n_ev and not (speed > 0.0 or height > 0.0 or vz > 0.0 or n_pending > 0)):
            break

        # step_physics
        t = t + dt_ms
        speed = speed - friction * dt
        if not speed > 0.0:
            speed = 0.0
        s = s + speed * dt
        lateral = lateral + lean * lat_speed * dt
        if not lateral > -half_width:
            lateral = -half_width
        if not lateral < half_width:
            lateral = half_width

        if height > 0.0 or vz > 0.0:
            height = height + vz * dt - 0.5 * gravity * dt * dt
            vz = vz - gravity * dt
            if height <= 0.0:
                height = 0.0
                vz = 0.0

        for k in range(n_coin):
            if taken[k]:
                continue
            ds = s - coins[k, 0]
            dl = lateral - coins[k, 1]
            dh = height - coins[k, 2]
            if sqrt(ds * ds + dl * dl + dh * dh) <= pickup:
                n_coins += 1
                taken[k] = 1

        for k in range(n_obs):
            ds = s - obstacles[k, 0]
            dl = lateral - obstacles[k, 1]
            hit = height == 0.0 and sqrt(ds * ds + dl * dl) <= obstacles[k, 2]
            if hit:
                if not touching[k]:
                    collisions += 1
                    speed *= 0.5
                touching[k] = 1
            else:
                touching[k] = 0

        while next_turn < n_turn and s >= turns[next_turn, 0]:
            delta = turns[next_turn, 1]
            side = 1 if delta > 0 else 0
            if delta == 0.0:
                pass
            elif has_credit[side] and credit[side] >= t - TURN_WINDOW_MS:
                has_credit[side] = False
                heading = heading + delta
            else:
                pend_idx[n_pending] = next_turn
                pend_dead[n_pending] = t + TURN_WINDOW_MS
                n_pending += 1
            next_turn += 1

        m = 0
        for j in range(n_pending):
            if t > pend_dead[j]:
                speed *= 0.5
                heading = heading + turns[pend_idx[j], 1]
            else:
                pend_idx[m] = pend_idx[j]
                pend_dead[m] = pend_dead[j]
                m += 1
        n_pending = m

        if record:
            rec_t[n_rec] = t
            rec_speed[n_rec] = speed
            rec_lat[n_rec] = lateral
            rec_h[n_rec] = height
            rec_push[n_rec] = pushes
            n_rec += 1

    trace = None
    if record:
        trace = {
            "t_ms": rec_t_arr[:n_rec],
            "speed": rec_speed_arr[:n_rec],
            "lateral": rec_lat_arr[:n_rec],
            "height": rec_h_arr[:n_rec],
            "pushes": rec_push_arr[:n_rec],
        }
    return (t if finished else None, n_coins, collisions, pushes, s, trace)
