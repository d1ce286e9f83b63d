"""Command-line entry point.

    skatectl [--seed N] [--out-dir DIR] [--config FILE] <group> <command> ...

Groups: ``trace gen|validate``, ``gestures run``, ``channel simulate``,
``sim run``, ``pipeline run``, ``stats items|diff|ks``.  Every command is
batch-only and deterministic given its arguments and ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

from skatectl import data_path, game, gestures, sensors, stats, wire


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (OSError, ValueError, KeyError) as exc:
        raise StageError(name, exc) from exc


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config must be a JSON object")
    return cfg


def _from_section(cls, section: dict | None):
    section = section or {}
    known = {f.name for f in fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**section)


def threshold_config(cfg: dict) -> gestures.ThresholdConfig:
    return _from_section(gestures.ThresholdConfig, cfg.get("thresholds"))


def sim_params(cfg: dict) -> game.SimParams:
    return _from_section(game.SimParams, cfg.get("sim"))


def _out(args, name: str) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# -- trace -------------------------------------------------------------------


def cmd_trace_gen(args, cfg) -> int:
    kind = args.kind
    rate = args.rate
    if kind == "lean":
        trace = sensors.gen_lean_trace(args.direction, args.duration_ms, args.rest or 150.0, args.delta or 60.0, rate)
    elif kind == "jump":
        trace = sensors.gen_jump_trace(args.duration_ms, args.rest or 120.0,
                                       80.0 if args.delta is None else args.delta, rate)
    elif kind == "push":
        trace = sensors.gen_push_cycle_trace(3 if args.cycles is None else args.cycles, args.cadence, args.rest or 160.0,
                                             100.0 if args.min_angle is None else args.min_angle, rate)
    elif kind == "crouch":
        trace = sensors.gen_crouch_trace(args.duration_ms, args.rest or 160.0,
                                         70.0 if args.min_angle is None else args.min_angle, rate)
    elif kind == "turn":
        trace = sensors.gen_turn_trace(args.duration_ms, args.rest or 0.0,
                                       90.0 if args.delta is None else args.delta, rate)
    else:
        trace = sensors.gen_ride_trace(20 if args.cycles is None else args.cycles, args.cadence, rate)
    if args.noise:
        trace = sensors.add_noise(trace, args.noise, args.seed)
    path = Path(args.output) if args.output else _out(args, "trace.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    sensors.save_trace(trace, path)
    sensors.validate_trace(sensors.load_trace(path))
    print(f"{len(trace)} samples -> {path}")
    return 0


def cmd_trace_validate(args, cfg) -> int:
    trace = _stage("load", sensors.load_trace, args.trace)
    _stage("validate", sensors.validate_trace, trace)
    print(f"ok: {len(trace)} samples, sources {[s.csv_name for s in trace.sources]}, rate {trace.sample_rate_hz:g} Hz")
    return 0


# -- gestures / channel / sim ------------------------------------------------


def cmd_gestures_run(args, cfg) -> int:
    config = _stage("config", threshold_config, cfg)
    trace = _stage("load", sensors.load_trace, args.trace)
    events = _stage("gestures", gestures.run_engine, trace, config)
    hid = _stage("hid", gestures.to_hid, events)
    _write(_out(args, "events.csv"), gestures.dumps_events(events))
    with open(_out(args, "hid.csv"), "w", encoding="utf-8", newline="\n") as fh:
        gestures.write_hid(hid, fh)
    print(f"{len(events)} actions, {len(hid)} key events -> {args.out_dir}")
    return 0


def _channel_params(args, cfg) -> tuple[float, int]:
    section = cfg.get("channel", {})
    loss = args.loss if args.loss is not None else float(section.get("loss_rate", 0.0))
    reorder = args.reorder if args.reorder is not None else int(section.get("reorder_window", 0))
    return loss, reorder


def _link_stats_csv(link: dict) -> str:
    lines = [wire.LINK_STATS_HEADER]
    lines += [st.csv_row(unit) for unit, st in sorted(link.items())]
    return "\n".join(lines) + "\n"


def cmd_channel_simulate(args, cfg) -> int:
    loss, reorder = _channel_params(args, cfg)
    trace = _stage("load", sensors.load_trace, args.trace)
    packets = _stage("encode", wire.packetize, trace)
    delivered = _stage("channel", wire.simulate_channel, packets, loss, reorder, args.seed)
    frames = [wire.encode(p) for p in delivered]
    wire.write_capture(frames, _out(args, "capture.bin"))
    samples, link = _stage("reassemble", wire.reassemble, [wire.decode(f) for f in frames])
    received = sensors.SensorTrace(trace.sample_rate_hz, tuple(samples), trace.label)
    sensors.save_trace(received, _out(args, "received.csv"))
    _write(_out(args, "link_stats.csv"), _link_stats_csv(link))
    print(f"{len(packets)} frames sent, {len(delivered)} delivered, {len(samples)} samples received")
    return 0


def _episode_job(job):
    events, course, params, timeout = job
    return game.run_episode(events, course, params, timeout)


def _course(args):
    return game.load_course(args.course or data_path("default_course.json"))


def cmd_sim_run(args, cfg) -> int:
    params = _stage("config", sim_params, cfg)
    course = _stage("course", _course, args)
    timeout = args.timeout_ms or int(cfg.get("timeout_ms", 120_000))
    jobs = [(_stage("load", gestures.load_events, p), course, params, timeout) for p in args.events]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            reports = list(pool.map(_episode_job, jobs))
    else:
        reports = [_stage("sim", _episode_job, j) for j in jobs]
    _write(_out(args, "report.csv"), "\n".join([game.REPORT_HEADER] + [r.csv_row() for r in reports]) + "\n")
    for path, r in zip(args.events, reports):
        print(f"{path}: {r.csv_row()}")
    return 0


def cmd_pipeline_run(args, cfg) -> int:
    config = _stage("config", threshold_config, cfg)
    params = _stage("config", sim_params, cfg)
    course = _stage("course", _course, args)
    timeout = args.timeout_ms or int(cfg.get("timeout_ms", 120_000))
    trace = _stage("load", sensors.load_trace, args.trace)
    _stage("validate", sensors.validate_trace, trace)
    link = {}
    if args.channel:
        loss, reorder = _channel_params(args, cfg)
        trace, link = _stage("channel", wire.transport_trace, trace, loss, reorder, args.seed)
    events = _stage("gestures", gestures.run_engine, trace, config)
    hid = _stage("hid", gestures.to_hid, events)
    report = _stage("sim", game.run_episode, events, course, params, timeout)

    _write(_out(args, "events.csv"), gestures.dumps_events(events))
    with open(_out(args, "hid.csv"), "w", encoding="utf-8", newline="\n") as fh:
        gestures.write_hid(hid, fh)
    _write(_out(args, "link_stats.csv"), _link_stats_csv(link))
    _write(_out(args, "report.csv"), f"{game.REPORT_HEADER}\n{report.csv_row()}\n")
    print(f"{len(trace)} samples, {len(events)} actions -> {report.csv_row()}")
    return 0


# -- stats -------------------------------------------------------------------


def _survey(path, controller):
    return stats.load_survey(path, controller)


def cmd_stats_items(args, cfg) -> int:
    path = args.survey or data_path("reference_survey.csv")
    sets = _stage("load", stats.load_surveys, path)
    if args.controller:
        if args.controller not in sets:
            raise StageError("load", ValueError(f"no controller {args.controller!r} in {path}"))
        sets = {args.controller: sets[args.controller]}
    rows = ["controller,question,n,mean,sd"]
    for label, ds in sets.items():
        print(stats.format_items(ds))
        for q, st in zip(ds.question_labels, stats.item_stats(ds)):
            rows.append(f"{label},{q},{st.n},{st.mean!r},{st.sd!r}")
    _write(_out(args, "items.csv"), "\n".join(rows) + "\n")
    return 0


def cmd_stats_diff(args, cfg) -> int:
    if args.means:
        a, b = _stage("load", stats.load_means, args.means)
    else:
        if len(args.survey) == 2:
            a = _stage("load", _survey, args.survey[0], args.a)
            b = _stage("load", _survey, args.survey[1], args.b)
        else:
            path = args.survey[0] if args.survey else data_path("reference_survey.csv")
            sets = _stage("load", stats.load_surveys, path)
            la, lb = args.a or "nunchuck", args.b or "skate"
            if la not in sets or lb not in sets:
                raise StageError("load", ValueError(f"need controllers {la!r} and {lb!r}; have {sorted(sets)}"))
            a, b = sets[la], sets[lb]
    table = _stage("diff", stats.mean_diff_table, a, b)
    print(stats.format_diff_table(table), end="")
    _write(_out(args, "diff.csv"), stats.diff_table_csv(table))
    return 0


def cmd_stats_ks(args, cfg) -> int:
    path = args.counts or data_path("reference_ks_counts.csv")
    a, b, labels = _stage("load", stats.load_counts, path)
    claims = _stage("load", stats.load_claims, path) if not args.no_claims else {}
    for text in args.claim or ():
        alpha, _, verdict = text.partition("=")
        claims[float(alpha)] = _stage("args", stats.parse_verdict, verdict)
    result = _stage("ks", stats.ks_test, a, b)
    print(stats.format_ks_report(result, labels, a.labels, claims), end="")
    _write(_out(args, "ks.csv"), stats.ks_report_csv(result))
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for all randomness")
    common.add_argument("--out-dir", default=argparse.SUPPRESS, help="output directory (default: out)")
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config with thresholds/sim/channel")

    parser = argparse.ArgumentParser(prog="skatectl", description=__doc__.splitlines()[0], parents=[common])
    groups = parser.add_subparsers(dest="group", required=True)

    def leaf(sub, name, fn, help_):
        p = sub.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=fn)
        return p

    trace = groups.add_parser("trace", help="generate or validate sensor traces").add_subparsers(dest="cmd", required=True)
    p = leaf(trace, "gen", cmd_trace_gen, "write a synthetic trace CSV")
    p.add_argument("--kind", required=True, choices=["lean", "jump", "push", "crouch", "turn", "ride"])
    p.add_argument("--direction", choices=["left", "right", "neutral"])
    p.add_argument("--duration-ms", type=int, default=1000)
    p.add_argument("--rest", type=float, help="rest distance (mm) or angle (deg)")
    p.add_argument("--delta", type=float, help="lean/jump excursion (mm) or turn angle (deg)")
    p.add_argument("--cycles", type=int, help="push strokes (default 3, ride 20)")
    p.add_argument("--cadence", type=float, default=1.0, help="push strokes per second")
    p.add_argument("--min-angle", type=float, help="bottom of a push stroke / crouch angle (deg)")
    p.add_argument("--rate", type=float, default=sensors.DEFAULT_RATE_HZ, help="sample rate (Hz)")
    p.add_argument("--noise", type=float, default=0.0, help="Gaussian noise sigma")
    p.add_argument("-o", "--output", help="trace path (default: <out-dir>/trace.csv)")
    p = leaf(trace, "validate", cmd_trace_validate, "check a trace CSV against the trace invariants")
    p.add_argument("trace")

    g = groups.add_parser("gestures", help="gesture engine").add_subparsers(dest="cmd", required=True)
    p = leaf(g, "run", cmd_gestures_run, "recognize actions and key events in a trace")
    p.add_argument("trace")

    ch = groups.add_parser("channel", help="telemetry link").add_subparsers(dest="cmd", required=True)
    p = leaf(ch, "simulate", cmd_channel_simulate, "frame a trace and pass it through a lossy channel")
    p.add_argument("trace")
    p.add_argument("--loss", type=float)
    p.add_argument("--reorder", type=int)

    sim = groups.add_parser("sim", help="skating simulation").add_subparsers(dest="cmd", required=True)
    p = leaf(sim, "run", cmd_sim_run, "simulate episodes from event logs")
    p.add_argument("events", nargs="+")
    p.add_argument("--course")
    p.add_argument("--timeout-ms", type=int)
    p.add_argument("--workers", type=int, default=1, help="parallel episodes")

    pipe = groups.add_parser("pipeline", help="end-to-end run").add_subparsers(dest="cmd", required=True)
    p = leaf(pipe, "run", cmd_pipeline_run, "trace -> [channel] -> gestures -> simulation")
    p.add_argument("trace")
    p.add_argument("--course")
    p.add_argument("--timeout-ms", type=int)
    p.add_argument("--channel", action="store_true", help="send samples through the telemetry link")
    p.add_argument("--loss", type=float)
    p.add_argument("--reorder", type=int)

    st = groups.add_parser("stats", help="evaluation statistics").add_subparsers(dest="cmd", required=True)
    p = leaf(st, "items", cmd_stats_items, "per-question mean and SD")
    p.add_argument("survey", nargs="?")
    p.add_argument("--controller")
    p = leaf(st, "diff", cmd_stats_diff, "mean-difference table between two controllers")
    p.add_argument("survey", nargs="*", help="one survey with both controllers, or two surveys")
    p.add_argument("--means", help="CSV of precomputed means instead of raw surveys")
    p.add_argument("--a", help="baseline controller label")
    p.add_argument("--b", help="compared controller label")
    p = leaf(st, "ks", cmd_stats_ks, "Kolmogorov-Smirnov test on category counts")
    p.add_argument("counts", nargs="?")
    p.add_argument("--claim", action="append", metavar="ALPHA=reject|fail",
                   help="stated decision to check against the table rule")
    p.add_argument("--no-claims", action="store_true", help="ignore claims recorded in the counts file")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed = getattr(args, "seed", 0)
    args.out_dir = getattr(args, "out_dir", "out")
    if args.group == "trace" and args.cmd == "gen" and args.kind == "lean" and not args.direction:
        parser.error("--direction is required for --kind lean")
    try:
        cfg = load_config(getattr(args, "config", None))
        return args.func(args, cfg)
    except StageError as exc:
        print(f"skatectl: error in stage {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"skatectl: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
