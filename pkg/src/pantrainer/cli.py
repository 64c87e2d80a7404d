"""Operator command line.

Subcommands: chart validate/info, play (headless trial), serve (live
session server), simulate-device, latin-square, study (full headless
study to CSV), analyze (stats report from a results CSV).

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import chart as chartmod
from . import sensor, service, session, stats
from .config import Config, ConfigError, resolve_config, with_overrides
from .layouts import LayoutKind, handpan_model
from .session import PlayerProfile

INTERFACE_CHOICES = [k.value for k in LayoutKind]


class CliError(Exception):
    """Domain error with a one-line diagnostic (exit code 1)."""


def _load_chart_arg(name: str) -> chartmod.Chart:
    if name in chartmod.BUILTIN_NAMES:
        return chartmod.builtin_chart(name)
    path = Path(name)
    if not path.exists():
        raise CliError(f"no such chart: {name} "
                       f"(builtins: {', '.join(chartmod.BUILTIN_NAMES)})")
    return chartmod.load_chart(path)


def _parse_profile(text: str) -> PlayerProfile:
    """Parse 'hit=1.0,sd=60,bias=0,wrong=0' into a player profile."""
    values = {"hit": 1.0, "sd": 60.0, "bias": 0.0, "wrong": 0.0}
    if text:
        for part in text.split(","):
            if "=" not in part:
                raise CliError(f"bad profile field {part!r} "
                               "(expected hit=,sd=,bias=,wrong=)")
            key, _, val = part.partition("=")
            key = key.strip()
            if key not in values:
                raise CliError(f"unknown profile field {key!r}")
            try:
                values[key] = float(val)
            except ValueError:
                raise CliError(f"bad profile value {part!r}") from None
    try:
        return PlayerProfile(hit_prob=values["hit"], jitter_sd_ms=values["sd"],
                             bias_ms=values["bias"],
                             wrong_dimple_prob=values["wrong"])
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _model_from(cfg: Config):
    return handpan_model(cfg.body_radius_m, cfg.dimple_radius_m,
                         palette=cfg.palette)


def _cmd_chart(args, cfg: Config) -> int:
    doc = Path(args.file).read_text(encoding="utf-8")
    if args.action == "validate":
        try:
            parsed = chartmod.parse_chart(doc)
        except chartmod.ChartError as exc:
            print(f"invalid: {exc}")
            return 1
        print(f"ok: {parsed.note_count} notes, {len(parsed.patterns)} patterns")
        return 0
    parsed = chartmod.parse_chart(doc)
    print(f"{parsed.note_count} notes, {len(parsed.patterns)} patterns")
    print(f"title: {parsed.title}")
    print(f"scale: {parsed.scale_name}")
    print(f"duration: {parsed.duration_ms() / 1000.0:.1f} s")
    sizes = ",".join(str(len(p.notes)) for p in parsed.patterns)
    print(f"pattern sizes: {sizes}")
    return 0


def _cmd_play(args, cfg: Config) -> int:
    chart = _load_chart_arg(args.chart)
    profile = _parse_profile(args.profile)
    plan = session.plan_session(["solo"], [args.interface], [args.chart])
    results = session.run_headless(plan, {args.chart: chart}, profile,
                                   window_ms=cfg.window_ms, seed=args.seed)
    for r in results:
        print(f"participant={r.participant} interface={r.interface_kind} "
              f"song={r.song_id} score={r.score}/{r.max_score} "
              f"window={r.window_ms}ms")
    return 0


def _cmd_serve(args, cfg: Config) -> int:
    chart = _load_chart_arg(args.chart)
    results_path = Path(args.results) if args.results else None

    def on_result(result):
        print(f"session done: {result.participant} scored "
              f"{result.score}/{result.max_score} on {result.interface_kind}",
              flush=True)
        if results_path:
            existing = (session.read_results(results_path)
                        if results_path.exists() else [])
            session.write_results(results_path, existing + [result])

    server = service.TrainerServer(
        args.host, args.port, chart, LayoutKind(args.interface),
        window_ms=cfg.window_ms, model=_model_from(cfg),
        static_dir=args.static, on_result=on_result)
    print(f"listening on {args.host}:{server.port} "
          f"({args.interface}, chart {args.chart}, window {cfg.window_ms} ms)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.close()
    return 0


def _cmd_simulate_device(args, cfg: Config) -> int:
    frames = sensor.simulate_device(sensor.MotionProfile(args.profile),
                                    args.duration, args.rate, args.seed)
    if frames:
        line_bytes = max(len(sensor.encode_frame(f)) for f in frames)
        limit = sensor.max_rate_hz(cfg.baud, line_bytes)
        if args.rate > limit:
            print(f"warning: {args.rate:g} Hz needs "
                  f"{sensor.bytes_per_second(args.rate, line_bytes):.0f} B/s; "
                  f"{cfg.baud} baud carries {limit:.1f} Hz max",
                  file=sys.stderr)
    if args.out == "-":
        for frame in frames:
            sys.stdout.buffer.write(sensor.encode_frame(frame))
    else:
        sensor.write_frame_log(args.out, frames)
        print(f"wrote {len(frames)} frames to {args.out}")
    return 0


def _cmd_latin_square(args, cfg: Config) -> int:
    if args.k % 2 == 0:
        rows = session.balanced_latin_square(args.k)
    else:
        rows = session.balanced_latin_square_odd(args.k)
    for row in rows:
        print(" ".join(str(v) for v in row))
    return 0


def _cmd_study(args, cfg: Config) -> int:
    charts = {"song_a": chartmod.builtin_chart("song_a"),
              "song_b": chartmod.builtin_chart("song_b")}
    ids = [f"p{i + 1:02d}" for i in range(args.participants)]
    plan = session.plan_session(ids, INTERFACE_CHOICES, list(charts))
    profile = _parse_profile(args.profile)
    results = session.run_headless(plan, charts, profile,
                                   window_ms=cfg.window_ms, seed=args.seed)
    session.write_results(args.out, results)
    print(f"wrote {len(results)} trials for {len(ids)} participants to {args.out}")
    return 0


def _cmd_analyze(args, cfg: Config) -> int:
    results = session.read_results(args.csv)
    if not results:
        raise CliError("no trials")
    report = stats.analyze_report(results, agg=args.agg, alpha=args.alpha)
    sys.stdout.write(report)
    if args.plot_data:
        table = stats.aggregate_scores(results, agg=args.agg)
        Path(args.plot_data).write_text(stats.plot_data_csv(table),
                                        encoding="utf-8")
        print(f"plot data written to {args.plot_data}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pantrainer",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="config file (flat key = value)")
    parser.add_argument("--window", type=int, default=None,
                        help="hit window in ms (overrides config)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chart", help="chart tooling")
    p.add_argument("action", choices=["validate", "info"])
    p.add_argument("file")
    p.set_defaults(func=_cmd_chart)

    p = sub.add_parser("play", help="one headless trial")
    p.add_argument("--chart", default="song_a")
    p.add_argument("--interface", choices=INTERFACE_CHOICES,
                   default="StandardPath")
    p.add_argument("--profile", default="", help="hit=,sd=,bias=,wrong=")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_play)

    p = sub.add_parser("serve", help="live session server (TCP + WebSocket)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--chart", default="song_a")
    p.add_argument("--interface", choices=INTERFACE_CHOICES,
                   default="StandardPath")
    p.add_argument("--static", default=None,
                   help="serve this directory over plain HTTP (browser UI)")
    p.add_argument("--results", default=None, help="append results CSV here")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("simulate-device", help="emit tracker frames")
    p.add_argument("--profile", choices=[m.value for m in sensor.MotionProfile],
                   default="STILL")
    p.add_argument("--rate", type=float, default=sensor.DEFAULT_RATE_HZ)
    p.add_argument("--duration", type=int, default=2000, help="ms")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output file, or - for stdout")
    p.set_defaults(func=_cmd_simulate_device)

    p = sub.add_parser("latin-square", help="balanced condition-order matrix")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=_cmd_latin_square)

    p = sub.add_parser("study", help="full counterbalanced headless study")
    p.add_argument("--participants", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile", default="hit=1,sd=60,bias=0,wrong=0")
    p.add_argument("--out", default="results.csv")
    p.set_defaults(func=_cmd_study)

    p = sub.add_parser("analyze", help="stats report from a results CSV")
    p.add_argument("csv")
    p.add_argument("--agg", choices=list(stats.AGG_MODES), default="sum")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--plot-data", default=None,
                   help="write per-interface mean/sd CSV here")
    p.set_defaults(func=_cmd_analyze)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        cfg = resolve_config(args.config)
        cfg = with_overrides(cfg, window_ms=args.window)
        return args.func(args, cfg)
    except (CliError, ConfigError, chartmod.ChartError, stats.StatsError,
            session.SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
