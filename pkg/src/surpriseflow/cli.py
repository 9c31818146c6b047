"""Operator command line: run the service, analyze logs, generate synthetic
datasets, and re-run settlements.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from .metrics import MetricsError, summarize_game
from .regression import SUITES, run_suite, suite_to_csv_rows, suite_to_text, SUITE_CSV_HEADER
from .service import ServiceError
from .simulate import SimulationConfig, write_simulation
from .storage import LogCorruptionError, export_summaries, import_log, replay_engine

__all__ = ["main"]

USAGE_EXIT = 1
DATA_EXIT = 2

RATING_BIN = 1.0
TIME_BIN_MINUTES = 2.5
SUBJECT_BIN = 5.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="surpriseflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the elicitation service")
    serve.add_argument("--config", help="JSON config file")

    analyze = sub.add_parser("analyze", help="summaries, regressions, histograms from a log")
    analyze.add_argument("--log", required=True, help="event log to analyze")
    analyze.add_argument("--out", required=True, help="output directory")
    analyze.add_argument(
        "--suites",
        default=",".join(SUITES),
        help=f"comma-separated subset of {','.join(SUITES)}",
    )

    simulate = sub.add_parser("simulate", help="generate a synthetic event log")
    simulate.add_argument("--log", required=True, help="output event log path")
    simulate.add_argument("--seed", type=int, default=42)
    simulate.add_argument("--games", type=int, default=10)
    simulate.add_argument("--subjects", type=int, default=12)
    simulate.add_argument("--sigma", type=float, default=1.0)
    simulate.add_argument("--beta0", type=float, default=4.783)
    simulate.add_argument("--beta-surp2", type=float, default=1.743)
    simulate.add_argument("--update-rate", type=float, default=5.87)
    simulate.add_argument("--budget", type=float, default=600.0)

    settle = sub.add_parser("settle", help="re-run settlement for an ended game")
    settle.add_argument("game_id")
    settle.add_argument("--log", required=True, help="event log containing the game")
    return parser


def _histogram(values: Sequence[float], width: float) -> list[tuple[float, float, int]]:
    if not values:
        return []
    lo = math.floor(min(values) / width) * width
    bins: dict[int, int] = {}
    for v in values:
        idx = int((v - lo) // width)
        bins[idx] = bins.get(idx, 0) + 1
    return [
        (lo + i * width, lo + (i + 1) * width, bins.get(i, 0))
        for i in range(max(bins) + 1)
    ]


def _write_histogram(path: Path, values: Sequence[float], width: float) -> None:
    lines = ["bin_start,bin_end,count"]
    for a, b, count in _histogram(values, width):
        lines.append(f"{a:.6g},{b:.6g},{count}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_analyze(args) -> int:
    records = import_log(args.log)
    if not records:
        print("data error: log contains no finished games", file=sys.stderr)
        return DATA_EXIT
    suites = [s for s in args.suites.split(",") if s]
    unknown = [s for s in suites if s not in SUITES]
    if unknown:
        print(f"usage error: unknown suites {unknown}", file=sys.stderr)
        return USAGE_EXIT

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summarizable = []
    for record in records:
        try:
            summarize_game(record)
            summarizable.append(record)
        except MetricsError as exc:
            print(f"note: skipping game {record.game_id}: {exc}", file=sys.stderr)
    if not summarizable:
        print("data error: no game has both curves and ratings", file=sys.stderr)
        return DATA_EXIT
    summaries = export_summaries(summarizable, out / "summary.csv")

    for suite_name in suites:
        result = run_suite(summaries, suite_name)
        (out / f"suite_{suite_name}.txt").write_text(suite_to_text(result), encoding="utf-8")
        rows = [",".join(SUITE_CSV_HEADER)] + [",".join(r) for r in suite_to_csv_rows(result)]
        (out / f"suite_{suite_name}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        for col in result.columns:
            if col.result is None:
                print(f"note: suite {suite_name} column '{col.label}' empty: {col.notice}")

    _write_histogram(out / "hist_subjects.csv", [s.n_subjects for s in summaries], SUBJECT_BIN)
    _write_histogram(out / "hist_ratings.csv", [s.avg_rating for s in summaries], RATING_BIN)
    _write_histogram(
        out / "hist_durations.csv", [s.duration_min for s in summaries], TIME_BIN_MINUTES
    )
    _write_histogram(
        out / "hist_peak_times.csv", [s.peak_time_min for s in summaries], TIME_BIN_MINUTES
    )
    print(f"analyzed {len(summaries)} games into {out}")
    return 0


def cmd_simulate(args) -> int:
    config = SimulationConfig(
        games=args.games,
        subjects=args.subjects,
        update_rate=args.update_rate,
        beta0=args.beta0,
        beta_surp2=args.beta_surp2,
        sigma=args.sigma,
        seed=args.seed,
        budget=args.budget,
    )
    log_path = Path(args.log)
    if log_path.exists():
        print(f"data error: {log_path} already exists, refusing to append", file=sys.stderr)
        return DATA_EXIT
    events = write_simulation(config, log_path)
    print(f"wrote {len(events)} events for {config.games} games to {log_path}")
    return 0


def cmd_settle(args) -> int:
    engine = replay_engine(args.log)
    settlement = engine.settle(args.game_id)
    print(
        json.dumps(
            {
                "game_id": settlement.game_id,
                "budget": settlement.budget,
                "mean_score": settlement.mean_score,
                "scores": settlement.scores,
                "rewards": settlement.rewards,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app, load_config

    config = load_config(args.config)
    Path(config.data_dir).mkdir(parents=True, exist_ok=True)
    app = create_app(config)
    uvicorn.run(app, host=config.bind, port=config.port, log_level="info")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "analyze":
            return cmd_analyze(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "settle":
            return cmd_settle(args)
    except (
        ServiceError,
        MetricsError,
        LogCorruptionError,
        FileNotFoundError,
        ValueError,
        OSError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    raise AssertionError("unreachable")


if __name__ == "__main__":
    raise SystemExit(main())
