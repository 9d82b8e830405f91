"""Command-line entry point: ``fcaroute {gen,run,compare,kb-stats}``.

Exit codes: 0 success, 1 usage error, 2 data/config error, 3 internal
invariant violation. CSV goes to files; ``--progress`` writes to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import datagen
from .config import MAINTENANCE_MODES, SimConfig, parse_value, read_config
from .datagen import DataError, GenParams
from .routing import STRATEGIES
from .simulator import IntervalMetrics, Simulator

log = logging.getLogger("fcaroute")

SEED_ENV = "FCAROUTE_SEED"

RUN_HEADER = [
    "interval", "strategy", "ttl", "maintenance_mode", "mean_recall", "mean_messages",
    "kb_concepts_mean", "maintenance_work", "queries_answered",
]
SUMMARY_HEADER = ["strategy", "ttl", "maintenance_mode", "mean_recall", "mean_messages", "maintenance_work", "queries"]
KB_HEADER = ["round", "maintenance_mode", "at_query", "e1_mean", "e2_mean", "work_mean", "work_cumulative"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _write_csv(path: str | Path, header: list, rows: list) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


# -- gen -------------------------------------------------------------------

_GEN_ALIASES = {"n_peers": "peers", "n_docs": "docs", "n_queries": "queries", "n_topics": "topics"}


def _add_gen_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", required=True, help="dataset directory to write")
    p.add_argument("--params", help="key=value file with GenParams fields")
    for f in dataclasses.fields(GenParams):
        flags = [f"--{f.name.replace('_', '-')}"]
        if f.name in _GEN_ALIASES:
            flags.append(f"--{_GEN_ALIASES[f.name]}")
        kind = float if f.type in ("float", float) else int
        p.add_argument(*flags, dest=f.name, type=kind, default=None)


def _gen_params(args) -> GenParams:
    values = {}
    if args.params:
        known = {f.name: f for f in dataclasses.fields(GenParams)}
        for lineno, line in enumerate(Path(args.params).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or key not in known:
                raise DataError(f"{args.params}:{lineno}: unknown or malformed entry {line!r}")
            try:
                values[key] = float(value) if known[key].type in ("float", float) else int(value)
            except ValueError:
                raise DataError(f"{args.params}:{lineno}: bad value for {key}") from None
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            values["seed"] = int(env_seed)
        except ValueError:
            raise DataError(f"{SEED_ENV}: expected an integer, got {env_seed!r}") from None
    for f in dataclasses.fields(GenParams):
        v = getattr(args, f.name)
        if v is not None:
            values[f.name] = v
    return GenParams(**values)


def cmd_gen(args) -> int:
    params = _gen_params(args)
    dataset = datagen.generate(params)
    datagen.save(dataset, args.out)
    log.info("wrote %d peers, %d document rows, %d queries to %s",
             len(dataset.peers), len(dataset.documents), len(dataset.queries), args.out)
    return 0


# -- run / compare / kb-stats -------------------------------------------------

_CONFIG_FLAGS = [f for f in dataclasses.fields(SimConfig) if f.name not in ("ttl", "strategy")]


def _add_config_args(p: argparse.ArgumentParser, grid: bool = False) -> None:
    p.add_argument("--config", help="key=value SimConfig file")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--progress", action="store_true", help="print interval summaries to stderr")
    if not grid:
        p.add_argument("--ttl", type=str, default=None)
        p.add_argument("--strategy", type=str, default=None)
    for f in _CONFIG_FLAGS:
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=str, default=None)


def _sim_config(args, grid: bool = False) -> SimConfig:
    values = read_config(args.config) if args.config else {}
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        values["seed"] = parse_value("seed", env_seed)
    names = [f.name for f in _CONFIG_FLAGS] + ([] if grid else ["ttl", "strategy"])
    for name in names:
        raw = getattr(args, name, None)
        if raw is not None:
            values[name] = parse_value(name, raw)
    return SimConfig(**values)


def _progress(enabled: bool, label: str):
    if not enabled:
        return None

    def report(m: IntervalMetrics) -> None:
        print(f"[{label}] interval {m.interval_index}: recall={m.mean_recall:.4f} "
              f"messages={m.mean_messages:.2f} concepts={m.kb_concepts_mean:.1f}", file=sys.stderr)

    return report


def _interval_rows(config: SimConfig, intervals: list) -> list:
    return [
        [m.interval_index, config.strategy, config.ttl, config.maintenance_mode, _fmt(m.mean_recall),
         _fmt(m.mean_messages), _fmt(m.kb_concepts_mean), m.maintenance_work, m.queries_answered]
        for m in intervals
    ]


def _check_invariants(sim: Simulator, result) -> None:
    for m in result.intervals:
        if not 0.0 <= m.mean_recall <= 1.0:
            raise AssertionError(f"interval {m.interval_index}: recall {m.mean_recall} outside [0, 1]")


def cmd_run(args) -> int:
    config = _sim_config(args)
    dataset = datagen.load(args.dataset)
    sim = Simulator(dataset, config)
    result = sim.run(progress=_progress(args.progress, config.strategy))
    _check_invariants(sim, result)
    _write_csv(args.out, RUN_HEADER, _interval_rows(sim.config, result.intervals))
    return 0


def _run_cell(dataset_dir: str, config: SimConfig):
    dataset = datagen.load(dataset_dir)
    sim = Simulator(dataset, config)
    result = sim.run()
    _check_invariants(sim, result)
    recalls = [r for r in result.recalls if r is not None]
    summary = [
        config.strategy, config.ttl, config.maintenance_mode,
        _fmt(sum(recalls) / len(recalls) if recalls else 0.0),
        _fmt(sum(result.messages) / len(result.messages) if result.messages else 0.0),
        sum(r.work for r in result.rounds),
        len(result.messages),
    ]
    return _interval_rows(sim.config, result.intervals), summary


def _parse_list(text: str, kind=str) -> list:
    items = [x.strip() for x in text.split(",") if x.strip()]
    try:
        return [kind(x) for x in items]
    except ValueError:
        raise UsageError(f"bad list value {text!r}") from None


def cmd_compare(args) -> int:
    ttls = _parse_list(args.ttl, int)
    strategies = _parse_list(args.strategies)
    modes = _parse_list(args.maintenance_modes) if args.maintenance_modes else [None]
    if not ttls or not strategies:
        raise UsageError("need at least one ttl and one strategy")
    for s in strategies:
        if s not in STRATEGIES:
            raise UsageError(f"unknown strategy {s!r}; choose from {', '.join(STRATEGIES)}")
    for t in ttls:
        if not 2 <= t <= 5:
            log.warning("ttl=%d is outside the 2..5 sweep used for the reference experiments", t)
    base = _sim_config(args, grid=True)
    cells = []
    for s in strategies:
        for t in ttls:
            for mode in modes:
                cells.append(dataclasses.replace(base, strategy=s, ttl=t,
                                                 maintenance_mode=mode or base.maintenance_mode))
    datagen.load(args.dataset)  # fail fast on bad input
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outputs = list(pool.map(_run_cell, [args.dataset] * len(cells), cells))
    else:
        outputs = []
        for cell in cells:
            outputs.append(_run_cell(args.dataset, cell))
            if args.progress:
                print(f"[compare] {cell.strategy} ttl={cell.ttl} {cell.maintenance_mode}: "
                      f"recall={outputs[-1][1][3]} messages={outputs[-1][1][4]}", file=sys.stderr)
    rows = sorted((r for out in outputs for r in out[0]), key=lambda r: (r[1], r[2], r[3], r[0]))
    summary = sorted((out[1] for out in outputs), key=lambda r: (r[0], r[1], r[2]))
    _write_csv(args.out, RUN_HEADER, rows)
    summary_path = args.summary_out or str(Path(args.out).with_suffix("")) + "_summary.csv"
    _write_csv(summary_path, SUMMARY_HEADER, summary)
    return 0


def kb_stats_rows(dataset, config: SimConfig, timing: bool = False) -> list:
    rows = []
    for mode in ("static", "incremental"):
        sim = Simulator(dataset, dataclasses.replace(config, maintenance_mode=mode))
        result = sim.run()
        cumulative = 0
        n = len(sim.peers)
        for rnd in result.rounds:
            cumulative += rnd.work
            row = [rnd.index, mode, rnd.at_query, _fmt(rnd.e1_mean), _fmt(rnd.e2_mean),
                   _fmt(rnd.work / n), cumulative]
            if timing:
                row.append(_fmt(1000 * rnd.seconds / max(rnd.peers, 1)))
            rows.append(row)
    return rows


def cmd_kb_stats(args) -> int:
    config = _sim_config(args)
    dataset = datagen.load(args.dataset)
    rows = kb_stats_rows(dataset, config, timing=args.timing)
    _write_csv(args.out, KB_HEADER + (["wall_ms_mean"] if args.timing else []), rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fcaroute", description="FCA-based query routing simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    _add_gen_args(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="simulate one configuration")
    _add_config_args(p)
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run a strategy x ttl grid on one dataset")
    _add_config_args(p, grid=True)
    p.add_argument("--ttl", required=True, help="comma-separated ttl values")
    p.add_argument("--strategies", required=True, help=f"comma-separated, from {', '.join(STRATEGIES)}")
    p.add_argument("--maintenance-modes", default=None,
                   help=f"optional comma-separated grid axis, from {', '.join(MAINTENANCE_MODES)}")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--summary-out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("kb-stats", help="static vs incremental maintenance statistics")
    _add_config_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--timing", action="store_true", help="add a wall-clock column (not byte-stable)")
    p.set_defaults(func=cmd_kb_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        print(f"fcaroute: usage error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError, ValueError) as exc:
        print(f"fcaroute: error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"fcaroute: internal invariant violated: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
