"""Independent reference implementations used by the tests.

These deliberately avoid the package's state machines: each channel is
scanned on its own as a plain list of (t, value) pairs, and the simulator
is a mutable-variable loop.  Only data types are shared.
"""

import math


def _series(trace, code):
    return [(s.timestamp_ms, s.value) for s in trace.samples if int(s.source) == code]


def _lean_scan(pts, lo, hi, h):
    out, mode = [], "n"
    for t, v in pts:
        if mode == "l" and v >= lo + h:
            out.append((t, "LeanOff"))
            mode = "n"
        elif mode == "r" and v <= hi - h:
            out.append((t, "LeanOff"))
            mode = "n"
        if mode == "n":
            if v < lo - h:
                out.append((t, "LeanLeftOn"))
                mode = "l"
            elif v > hi + h:
                out.append((t, "LeanRightOn"))
                mode = "r"
    return out


def _jump_scan(pts, pitch, h, debounce, rest=None):
    if not pts:
        return []
    if rest is None:
        rest = pts[0][1]
    trig = rest + pitch
    out, armed, last = [], True, None
    for t, v in pts:
        if armed and v >= trig and (last is None or t - last >= debounce):
            out.append((t, "Jump"))
            armed, last = False, t
        elif not armed and v < trig - h:
            armed = True
    return out


def push_crossings(pts, angle):
    """Upward crossings of ``angle`` preceded by an above-angle reading."""
    out, seen_above, below = [], False, False
    for t, v in pts:
        if v < angle:
            below = seen_above
        else:
            if below:
                out.append(t)
            seen_above, below = True, False
    return out


def _push_scan(pts, angle, debounce):
    out, last = [], None
    for t in push_crossings(pts, angle):
        if last is None or t - last >= debounce:
            out.append((t, "Push"))
            last = t
    return out


def _crouch_scan(pts, angle, h):
    out, down = [], False
    for t, v in pts:
        if not down and v < angle:
            out.append((t, "CrouchOn"))
            down = True
        elif down and v >= angle + h:
            out.append((t, "CrouchOff"))
            down = False
    return out


def _heading_scan(pts, step):
    out = []
    if not pts:
        return out
    ref = pts[0][1]
    for t, v in pts[1:]:
        while True:
            d = math.remainder(v - ref, 360.0)
            if d == 180.0:
                d = -180.0
            if d >= step:
                out.append((t, "HeadingRight"))
                ref = (ref + step) % 360.0
            elif d <= -step:
                out.append((t, "HeadingLeft"))
                ref = (ref - step) % 360.0
            else:
                break
    return out


# order in which channels emit within one timestamp, by source code
_CHANNEL_ORDER = {"side": 0, "front": 1, "left": 2, "right": 3, "table": 4}


def crossing_scan_events(trace, cfg):
    """Return [(t, kind_label)] for a trace, merged by (t, source code)."""
    per = {
        "side": _lean_scan(_series(trace, 0), cfg.tilt_low_mm, cfg.tilt_high_mm, cfg.tilt_hysteresis_mm),
        "front": _jump_scan(_series(trace, 1), cfg.jump_pitch_mm, cfg.tilt_hysteresis_mm, cfg.debounce_ms,
                            cfg.front_rest_mm),
        "left": _crouch_scan(_series(trace, 2), cfg.crouch_angle_deg, cfg.crouch_hysteresis_deg),
        "right": _push_scan(_series(trace, 3), cfg.push_angle_deg, cfg.debounce_ms),
        "table": _heading_scan(_series(trace, 4), cfg.heading_step_deg),
    }
    tagged = []
    for ch, evs in per.items():
        for pos, (t, kind) in enumerate(evs):
            tagged.append((t, _CHANNEL_ORDER[ch], pos, kind))
    tagged.sort()
    return [(t, kind) for t, _, _, kind in tagged]


def brute_episode(events, course, params, timeout_ms, on_step=None):
    """Plain-loop episode integration.  Returns
    (finish_ms or None, coins, collisions, pushes, distance)."""
    dt_ms = params.dt_ms
    dt = dt_ms / 1000.0
    t = 0
    s = lat = v = h = vz = heading = 0.0
    lean = 0
    crouch = False
    coins = collisions = pushes = 0
    got = set()
    touch = set()
    turns = list(course.turns)
    nxt = 0
    pending = []  # [turn index, deadline]
    credit = {0: None, 1: None}
    i = 0
    while True:
        while i < len(events) and events[i].timestamp_ms <= t:
            kind = events[i].kind.label
            if kind == "Push":
                v += params.push_impulse_mps * (params.crouch_speed_factor if crouch else 1.0)
                pushes += 1
            elif kind == "LeanLeftOn":
                lean = -1
            elif kind == "LeanRightOn":
                lean = 1
            elif kind == "LeanOff":
                lean = 0
            elif kind == "Jump":
                if h == 0.0 and vz == 0.0:
                    vz = params.jump_up_speed_mps
            elif kind == "CrouchOn":
                crouch = True
            elif kind == "CrouchOff":
                crouch = False
            else:
                side = 1 if kind == "HeadingRight" else 0
                hit = [p for p in pending if (turns[p[0]].heading_change_deg > 0) == (side == 1)]
                if hit:
                    pending.remove(hit[0])
                    heading += turns[hit[0][0]].heading_change_deg
                else:
                    credit[side] = events[i].timestamp_ms
            i += 1
        if s >= course.length_m:
            return t, coins, collisions, pushes, s
        moving = v > 0.0 or h > 0.0 or vz > 0.0 or pending
        if t >= timeout_ms or (i == len(events) and not moving):
            return None, coins, collisions, pushes, s

        t += dt_ms
        v = max(0.0, v - params.friction_decel_mps2 * dt)
        s += v * dt
        lat = min(course.half_width_m, max(-course.half_width_m, lat + lean * params.lean_lateral_speed_mps * dt))
        if h > 0.0 or vz > 0.0:
            h = h + vz * dt - 0.5 * params.gravity_mps2 * dt * dt
            vz -= params.gravity_mps2 * dt
            if h <= 0.0:
                h = vz = 0.0
        for k, c in enumerate(course.coins):
            if k not in got and math.dist((s, lat, h), (c.s_m, c.lateral_m, c.radius_m)) <= params.coin_pickup_radius_m:
                got.add(k)
                coins += 1
        now = set()
        for k, o in enumerate(course.obstacles):
            if h == 0.0 and math.hypot(s - o.s_m, lat - o.lateral_m) <= o.radius_m:
                now.add(k)
                if k not in touch:
                    collisions += 1
                    v *= 0.5
        touch = now
        while nxt < len(turns) and s >= turns[nxt].s_m:
            delta = turns[nxt].heading_change_deg
            side = 1 if delta > 0 else 0
            if delta != 0.0:
                if credit[side] is not None and credit[side] >= t - 2000:
                    credit[side] = None
                    heading += delta
                else:
                    pending.append([nxt, t + 2000])
            nxt += 1
        for p in [p for p in pending if t > p[1]]:
            pending.remove(p)
            v *= 0.5
            heading += turns[p[0]].heading_change_deg
        if on_step is not None:
            on_step(t, v, lat, h, pushes)


def random_synthetic_trace(seed, rate=50.0):
    """Multi-source trace built from the generators with random parameters.

    Every source streams continuously.  The right shoe carries clean push
    cycles (cadence <= 3 Hz, so upward crossings are further apart than the
    debounce); the other sources get light noise."""
    import numpy as np

    from skatectl import sensors

    rng = np.random.default_rng(seed)

    def pick(lo, hi):
        return float(rng.uniform(lo, hi))

    def chain(make, k):
        return sensors.concat_traces(*[make() for _ in range(k)])

    k = int(rng.integers(1, 5))
    side = chain(lambda: sensors.gen_lean_trace(
        str(rng.choice(["left", "right", "neutral"])), int(rng.integers(300, 3000)),
        pick(130, 170), pick(5, 80), rate), k)
    front = chain(lambda: sensors.gen_jump_trace(int(rng.integers(300, 2000)), 120.0, pick(0, 90), rate), k)
    right = sensors.gen_push_cycle_trace(int(rng.integers(0, 12)), pick(0.5, 3.0), pick(150, 175), pick(60, 135), rate)
    left = chain(lambda: sensors.gen_crouch_trace(int(rng.integers(300, 3000)), pick(120, 175), pick(40, 120), rate), k)
    table = chain(lambda: sensors.gen_turn_trace(int(rng.integers(300, 3000)), pick(0, 359), pick(-200, 200), rate), k)
    sigma = pick(0, 3)
    noisy = sensors.add_noise(sensors.merge_traces(side, front, left, table), sigma, int(rng.integers(1 << 31)))
    parts = [noisy] + ([right] if len(right) else [])
    return sensors.merge_traces(*parts, label=f"random-{seed}")
