import io

import pytest
from hypothesis import given, settings, strategies as st

from skatectl import sensors
from skatectl.sensors import SensorSample, SensorTrace, Source, TraceError, TraceParseError


def test_lean_trace_shape():
    tr = sensors.gen_lean_trace("left", 1000, 150.0, 50.0)
    assert len(tr) == 50
    assert tr.duration_ms == 1000
    vals = tr.values()
    assert vals[0] == 150.0 and vals[-1] == 150.0
    assert min(vals) == pytest.approx(100.0)
    assert all(s.source == Source.BOARD_SIDE for s in tr.samples)
    sensors.validate_trace(tr)


def test_neutral_lean_is_flat():
    tr = sensors.gen_lean_trace("neutral", 2000, 150.0, 40.0)
    assert set(tr.values()) == {150.0}


def test_lean_rejects_bad_direction():
    with pytest.raises(TraceError):
        sensors.gen_lean_trace("up", 1000, 150.0, 40.0)


def test_jump_peak_at_centre():
    tr = sensors.gen_jump_trace(1000, 120.0, 80.0)
    peak = max(tr.samples, key=lambda s: s.value)
    assert peak.timestamp_ms == 500
    assert peak.value == pytest.approx(200.0)


def test_push_cycles_grid():
    tr = sensors.gen_push_cycle_trace(3, 1.0, 160.0, 100.0)
    assert tr.duration_ms == 3000
    dips = [s.timestamp_ms for s in tr.samples if s.value == pytest.approx(100.0)]
    assert dips == [500, 1500, 2500]


def test_push_zero_cycles_empty():
    tr = sensors.gen_push_cycle_trace(0, 1.0, 160.0, 100.0)
    assert len(tr) == 0 and tr.duration_ms == 0


def test_turn_wraps():
    tr = sensors.gen_turn_trace(1000, 350.0, 40.0)
    assert all(0 <= v < 360 for v in tr.values())
    assert tr.values()[-1] == pytest.approx(30.0)


def test_ride_trace_valid():
    tr = sensors.gen_ride_trace()
    sensors.validate_trace(tr)
    assert set(tr.sources) == set(Source)


@pytest.mark.parametrize("rate", [25.0, 50.0, 100.0])
def test_spacing_matches_rate(rate):
    tr = sensors.gen_crouch_trace(1000, 160.0, 70.0, rate)
    ts = tr.timestamps()
    assert all(abs((b - a) - 1000 / rate) <= 1 for a, b in zip(ts, ts[1:]))


def test_validator_rejects_gap():
    tr = sensors.gen_lean_trace("left", 1000, 150.0, 40.0)
    broken = SensorTrace(tr.sample_rate_hz, tr.samples[:10] + tr.samples[11:])
    with pytest.raises(TraceError, match="spacing"):
        sensors.validate_trace(broken)


def test_csv_round_trip_exact():
    tr = sensors.add_noise(sensors.gen_ride_trace(cycles=5), 1.0, seed=4)
    back = sensors.loads_trace(sensors.dumps_trace(tr))
    assert back == tr


def test_csv_backwards_time_names_row():
    text = "# rate_hz=50.0\n0,board_side,150.0\n20,board_side,150.0\n0,board_side,150.0\n"
    with pytest.raises(TraceParseError) as err:
        sensors.read_trace(io.StringIO(text))
    assert err.value.row == 4  # file line, header included


@pytest.mark.parametrize("line", ["0,board_side,abc", "0,elbow,1.0", "0,left_shoe,200.0", "x,board_side,1"])
def test_csv_bad_rows(line):
    with pytest.raises(TraceParseError):
        sensors.read_trace(io.StringIO(f"# rate_hz=50.0\n{line}\n"))


def test_noise_deterministic_and_clamped():
    tr = sensors.gen_crouch_trace(1000, 179.0, 170.0)
    a = sensors.add_noise(tr, 5.0, seed=1)
    assert a == sensors.add_noise(tr, 5.0, seed=1)
    assert a != sensors.add_noise(tr, 5.0, seed=2)
    assert all(0 <= v <= 180 for v in a.values())
    sensors.validate_trace(a)


def test_concat_and_shift():
    a = sensors.gen_lean_trace("left", 1000, 150.0, 40.0)
    b = sensors.gen_lean_trace("right", 1000, 150.0, 40.0)
    c = sensors.concat_traces(a, b)
    assert len(c) == 100 and c.duration_ms == 2000
    sensors.validate_trace(c)
    assert sensors.shift_trace(a, 40).timestamps()[0] == 40


@settings(max_examples=60, deadline=None)
@given(
    kind=st.sampled_from(["lean", "jump", "push", "crouch", "turn"]),
    duration=st.integers(100, 4000),
    rate=st.sampled_from([20.0, 25.0, 50.0, 60.0, 100.0]),
    a=st.floats(10.0, 170.0),
    b=st.floats(1.0, 100.0),
)
def test_generators_satisfy_invariants(kind, duration, rate, a, b):
    if kind == "lean":
        tr = sensors.gen_lean_trace("left", duration, 150.0, min(b, 140.0), rate)
    elif kind == "jump":
        tr = sensors.gen_jump_trace(duration, 100.0, b, rate)
    elif kind == "push":
        tr = sensors.gen_push_cycle_trace(duration // 500, 2.0, 170.0, min(a, 160.0), rate)
    elif kind == "crouch":
        tr = sensors.gen_crouch_trace(duration, 170.0, a, rate)
    else:
        tr = sensors.gen_turn_trace(duration, a, b * 3, rate)
    sensors.validate_trace(tr)
    assert sensors.loads_trace(sensors.dumps_trace(tr)) == tr


def test_sample_ordering_key():
    s1 = SensorSample(0, Source.RIGHT_SHOE, 1.0)
    s2 = SensorSample(0, Source.BOARD_SIDE, 1.0)
    assert sorted([s1, s2], key=sensors.sort_key)[0] is s2
