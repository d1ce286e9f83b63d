"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N] [--episodes N]

Both backends run the same inputs; results are checked for equality before
timings are reported.
"""

import argparse
import time

import numpy as np

from skatectl import data_path, game, gestures, kernels, sensors


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--cycles", type=int, default=200, help="push cycles in the benchmark ride trace")
    parser.add_argument("--episodes", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not available; only the Python backend would run")

    trace = sensors.add_noise(sensors.gen_ride_trace(cycles=args.cycles), 1.0, args.seed)
    t, src, val = trace.as_arrays()
    cfg = gestures.ThresholdConfig().as_tuple()

    course = game.load_course(data_path("default_course.json"))
    rng = np.random.default_rng(args.seed)
    streams = []
    for _ in range(args.episodes):
        period = int(rng.integers(300, 1500))
        events = [gestures.ActionEvent(ms, gestures.ActionKind.PUSH) for ms in range(0, 120_000, period)]
        streams.append(game.episode_arrays(events, course))
    params = game.SimParams(dt_ms=1).as_tuple()

    results = {}
    for name, impl in backends.items():
        g_time, g_out = best_of(lambda: impl.run_gestures(t, src, val, cfg), args.repeat)
        e_time, e_out = best_of(lambda: [impl.run_episode(*s, params, 120_000, False) for s in streams], args.repeat)
        results[name] = (g_time, e_time, g_out, e_out)

    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        same = all(np.array_equal(a, b) for a, b in zip(py[2], cy[2])) and py[3] == cy[3]
        print(f"backends agree: {same}")

    print(f"gesture engine: {len(trace)} samples; episodes: {args.episodes} at dt=1 ms")
    print(f"{'backend':<8} {'gestures (s)':>13} {'samples/s':>12} {'episodes (s)':>13}")
    for name, (g, e, _, _) in results.items():
        print(f"{name:<8} {g:>13.4f} {len(trace) / g:>12.0f} {e:>13.4f}")
    if len(results) == 2:
        print(f"speedup: gestures x{results['python'][0] / results['cython'][0]:.1f}, "
              f"episodes x{results['python'][1] / results['cython'][1]:.1f}")


if __name__ == "__main__":
    main()
