"""Acceptance suite: one check per primary criterion, each printing a
PASS/FAIL line.  Run under pytest or directly with ``python tests/test_acceptance.py``.
"""

import csv
import os
import sys
import time

import numpy as np

sys.path.insert(0, os.path.dirname(__file__))

from oracles import crossing_scan_events, push_crossings, random_synthetic_trace  # noqa: E402
from skatectl import data_path, game, gestures, sensors, stats, wire  # noqa: E402
from skatectl.gestures import ActionEvent, ActionKind, ThresholdConfig  # noqa: E402
from skatectl.stats import CategoryCounts  # noqa: E402


# Lines collected here are echoed in the pytest terminal summary (see conftest).
RESULTS = []


def report(name, ok, detail):
    line = f"ACCEPT {'PASS' if ok else 'FAIL'} {name}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


# -- statistics --------------------------------------------------------------

COUNTS_A = CategoryCounts((9, 10, 8, 2, 1))
COUNTS_B = CategoryCounts((17, 9, 4, 0, 0))


def check_ks_statistic():
    r = stats.ks_test(COUNTS_A, COUNTS_B)
    want = (0.266667, 0.233333, 0.1, 0.033333, 0.0)
    d_ok = abs(r.d_statistic - 0.266666667) <= 1e-9
    cells_ok = all(abs(x - y) <= 1e-6 for x, y in zip(r.table.abs_diff, want))
    detail = f"D={r.d_statistic:.9f}, |diff|={[round(x, 6) for x in r.table.abs_diff]}"
    return report("ks-statistic", d_ok and cells_ok, detail)


def check_ks_decisions():
    r = stats.ks_test(COUNTS_A, COUNTS_B)
    dec = r.decisions
    ok = (dec[0.10].reject and dec[0.10].critical == 0.22
          and dec[0.05].reject and dec[0.05].critical == 0.24
          and not dec[0.01].reject and dec[0.01].critical == 0.29)
    claims = stats.load_claims(data_path("reference_ks_counts.csv"))
    text = stats.format_ks_report(r, ("nunchuck", "skate"), claims=claims)
    flagged = any(line.startswith("NOTE:") and "alpha=0.01" in line for line in text.splitlines())
    detail = ", ".join(f"a={a:.2f}:{dec[a].label}@{dec[a].critical}" for a in (0.10, 0.05, 0.01))
    return report("ks-decisions-n30", ok and flagged, f"{detail}; discrepancy flagged={flagged}")


def check_massey_lookups():
    spots = [((1, 0.20), 0.900), ((10, 0.05), 0.410), ((20, 0.01), 0.356), ((35, 0.10), 0.21)]
    got = [stats.ks_critical(n, a) for (n, a), _ in spots]
    ok = all(g == w for g, (_, w) in zip(got, spots))
    rows_ok = all(tuple(stats.ks_critical(n, a) for a in stats.ALPHAS) == row for n, row in stats.MASSEY_TABLE.items())
    asym = stats.ks_critical(100, 0.05)
    ok = ok and rows_ok and abs(asym - 0.136) <= 1e-12
    return report("massey-critical-values", ok, f"spots={got}, all rows exact={rows_ok}, n=100 a=.05 -> {asym:.3f}")


def check_mean_differences():
    with open(data_path("reference_means.csv"), encoding="utf-8") as fh:
        published = [float(r["diff"]) for r in csv.DictReader(x for x in fh if not x.startswith("#"))]
    sets = stats.load_surveys(data_path("reference_survey.csv"))
    table = stats.mean_diff_table(sets["nunchuck"], sets["skate"])
    worst = max(abs(d - p) for d, p in zip(table.diffs, published))
    ok = worst <= 0.005 and abs(table.total - 5.33) <= 0.01 and len(published) == 20
    # informational: differences of the 2-dp rounded means
    a, b = stats.load_means(data_path("reference_means.csv"))
    naive = stats.mean_diff_table(a, b)
    naive_worst = max(abs(d - p) for d, p in zip(naive.diffs, published))
    detail = (f"max cell error={worst:.4f}, sum={table.total:.4f}; "
              f"rounded-means path: max cell error={naive_worst:.2f}, sum={naive.total:.2f}")
    return report("mean-difference-table", ok, detail)


# -- gesture engine ----------------------------------------------------------


def check_gesture_oracle(n=100):
    cfg = ThresholdConfig()
    start = time.perf_counter()
    equal = push_equal = 0
    for seed in range(n):
        tr = random_synthetic_trace(seed)
        got = gestures.run_engine(tr, cfg)
        if [(e.timestamp_ms, e.kind.label) for e in got] == crossing_scan_events(tr, cfg):
            equal += 1
        pts = [(s.timestamp_ms, s.value) for s in tr.samples if s.source == sensors.Source.RIGHT_SHOE]
        pushes = sum(e.kind == ActionKind.PUSH for e in got)
        push_equal += pushes == len(push_crossings(pts, cfg.push_angle_deg))
    elapsed = time.perf_counter() - start
    ok = equal == n and push_equal == n and elapsed < 10.0
    return report("gesture-oracle", ok, f"{equal}/{n} sequences equal, {push_equal}/{n} push counts equal, {elapsed:.2f}s")


def check_no_chatter(seeds=1000):
    cfg = ThresholdConfig()
    sigma = cfg.tilt_hysteresis_mm / 3
    rest = (cfg.tilt_low_mm + cfg.tilt_high_mm) / 2
    base = sensors.gen_lean_trace("neutral", 4000, rest, 1.0)
    quiet = worst = 0
    for seed in range(seeds):
        ev = gestures.run_engine(sensors.add_noise(base, sigma, seed), cfg)
        quiet += not ev
        ons = sum(e.kind in (ActionKind.LEAN_LEFT_ON, ActionKind.LEAN_RIGHT_ON) for e in ev)
        offs = sum(e.kind == ActionKind.LEAN_OFF for e in ev)
        worst = max(worst, ons, offs)
    ok = quiet >= 0.99 * seeds and worst <= 1
    return report("hysteresis-no-chatter", ok, f"{quiet}/{seeds} seeds silent, max On or Off per seed={worst}")


# -- wire --------------------------------------------------------------------


def _random_packet(rng):
    n = int(rng.integers(0, wire.MAX_SAMPLES + 1))
    samples = tuple((int(d), int(v)) for d, v in zip(rng.integers(0, 256, n), rng.integers(-0x8000, 0x8000, n)))
    return wire.Packet(wire.UnitId(int(rng.integers(1, 6))), int(rng.integers(0, 1 << 16)),
                       int(rng.integers(0, 1 << 32)), samples)


def check_codec():
    rng = np.random.default_rng(2024)
    trips = sum(wire.decode(wire.encode(p)) == p for p in (_random_packet(rng) for _ in range(10_000)))
    ref = wire.encode(wire.Packet(wire.UnitId.LEFT_SHOE, 77, 5000, tuple((20, 9000 - 37 * i) for i in range(20))))
    missed = total = 0
    for pos in range(len(ref)):
        for value in range(256):
            if value == ref[pos]:
                continue
            total += 1
            bad = bytearray(ref)
            bad[pos] = value
            try:
                wire.decode(bytes(bad))
                missed += 1
            except wire.FrameError:
                pass
    trace = sensors.add_noise(sensors.gen_ride_trace(), 2.0, seed=5)
    out, _ = wire.transport_trace(trace, 0.0, 0, seed=0)
    expected = wire.link_quantize(trace)
    lossless = out.samples == expected.samples
    shoes_centi = all(s.value == round(s.value * 100) / 100 for s in out.samples if s.source in
                      (sensors.Source.LEFT_SHOE, sensors.Source.RIGHT_SHOE))
    ok = trips == 10_000 and missed == 0 and lossless and shoes_centi
    detail = (f"{trips}/10000 round trips, {total - missed}/{total} corruptions detected, "
              f"lossless end-to-end={lossless} ({len(out)} samples)")
    return report("codec", ok, detail)


# -- simulator ---------------------------------------------------------------


def _random_stream(rng):
    n = int(rng.integers(0, 80))
    kinds = rng.choice(list(ActionKind), size=n, p=[.1, .1, .1, .1, .35, .05, .05, .075, .075])
    times = np.sort(rng.integers(0, 30_000, size=n))
    return [ActionEvent(int(t), ActionKind(int(k))) for t, k in zip(times, kinds)]


def check_simulator(streams=1000):
    rng = np.random.default_rng(99)
    course = game.load_course(data_path("default_course.json"))
    bad = []
    for i in range(streams):
        events = _random_stream(rng)
        _, rec = game.run_episode_traced(events, course, game.SimParams(), 60_000)
        speed, lat, h, pushes = rec["speed"], rec["lateral"], rec["height"], rec["pushes"]
        same = pushes[1:] == pushes[:-1]
        if (speed < 0).any() or (np.abs(lat) > course.half_width_m).any() or (h < 0).any() \
                or (np.diff(speed)[same] > 0).any():
            bad.append(i)
    # dt refinement on pushing streams that finish
    ratios = []
    for k in range(20):
        period = 400 + 50 * k
        events = [ActionEvent(t, ActionKind.PUSH) for t in range(0, 60_000, period)]
        coarse = game.run_episode(events, course, game.SimParams(dt_ms=10), 120_000)
        fine = game.run_episode(events, course, game.SimParams(dt_ms=1), 120_000)
        ratios.append(abs(coarse.finish_time_ms - fine.finish_time_ms) / fine.finish_time_ms)
    ride = gestures.run_engine(sensors.gen_ride_trace())
    coarse = game.run_episode(ride, course, game.SimParams(dt_ms=10))
    fine = game.run_episode(ride, course, game.SimParams(dt_ms=1))
    ratios.append(abs(coarse.finish_time_ms - fine.finish_time_ms) / fine.finish_time_ms)
    ok = not bad and max(ratios) <= 0.02
    return report("simulator-invariants", ok,
                  f"{streams - len(bad)}/{streams} streams keep invariants, max dt 10 vs 1 ms finish gap={max(ratios):.4%}")


CHECKS = [check_ks_statistic, check_ks_decisions, check_massey_lookups, check_mean_differences,
          check_gesture_oracle, check_no_chatter, check_codec, check_simulator]


def test_ks_statistic():
    assert check_ks_statistic()


def test_ks_decisions_n30():
    assert check_ks_decisions()


def test_massey_critical_values():
    assert check_massey_lookups()


def test_mean_difference_table():
    assert check_mean_differences()


def test_gesture_engine_oracle():
    assert check_gesture_oracle()


def test_hysteresis_no_chatter():
    assert check_no_chatter()


def test_codec():
    assert check_codec()


def test_simulator_invariants():
    assert check_simulator()


if __name__ == "__main__":
    results = [c() for c in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
