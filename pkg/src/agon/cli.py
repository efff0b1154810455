"""``agon`` command line: validate, cells, run, analyze, report.

Exit codes: 0 success, 1 I/O or setup failure, 2 validation failure,
3 some games failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections import Counter
from pathlib import Path

from .analysis import AnalysisError, run_suite
from .config import ConfigError, enumerate_cells, expected_counts, game_violations, load_config
from .gateway import MissingCredentials, ModelConfig, Provider, credentials
from .prompts import TemplateError, TemplateSet, validate_template_set
from .runner import LogError, latest_by_cell, read_log, run

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_PARTIAL = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(path: str):
    """Returns (config, violations) or raises OSError."""
    try:
        config = load_config(path)
    except ConfigError as exc:
        return None, exc.violations
    violations = game_violations(config)
    try:
        templates = TemplateSet.load(config.template_dir)
    except (OSError, TemplateError, ValueError) as exc:
        return config, violations + [f"templates: {exc}"]
    violations += validate_template_set(templates, config)
    return config, violations


def cmd_validate(args) -> int:
    try:
        config, violations = _load(args.config)
    except OSError as exc:
        _err(f"cannot read {args.config}: {exc}")
        return EXIT_IO
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return EXIT_INVALID
    print(f"ok: {args.config}")
    return EXIT_OK


def cmd_cells(args) -> int:
    try:
        config, violations = _load(args.config)
    except OSError as exc:
        _err(f"cannot read {args.config}: {exc}")
        return EXIT_IO
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return EXIT_INVALID
    print(expected_counts(config))
    if args.list:
        for cell in enumerate_cells(config):
            f = cell.factors()
            print("\t".join([cell.cell_id] + [f"{k}={f[k]}" for k in f]))
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config, violations = _load(args.config)
    except OSError as exc:
        _err(f"cannot read {args.config}: {exc}")
        return EXIT_IO
    if violations:
        for v in violations:
            _err(f"violation: {v}")
        return EXIT_INVALID
    if args.seed is not None:
        config.run_seed = args.seed
    try:
        for m in config.models:
            if isinstance(m, ModelConfig) and m.provider is not Provider.MOCK:
                credentials(m)
    except MissingCredentials as exc:
        _err(str(exc))
        return EXIT_IO

    def progress(s):
        _err(f"[{s.skipped + s.new_games}/{s.total_cells}] completed={s.completed} failed={s.failed}")

    log_path = Path(args.log)
    try:
        summary = run(config, log_path, resume=args.resume, workers=args.workers,
                      progress=None if args.quiet else progress)
        final = latest_by_cell(read_log(log_path))
    except LogError as exc:
        _err(str(exc))
        return EXIT_IO
    _err(f"{summary.new_games} new games (completed={summary.completed}, "
         f"failed={summary.failed}, skipped={summary.skipped})")
    ids = {c.cell_id for c in enumerate_cells(config)}
    failed = [cid for cid in ids if final.get(cid, {}).get("status") != "completed"]
    return EXIT_PARTIAL if failed else EXIT_OK


def _read(path: str):
    try:
        return read_log(path)
    except OSError as exc:
        raise LogError(f"cannot read {path}: {exc}") from None


def cmd_analyze(args) -> int:
    group_by = [k.strip() for k in args.group_by.split(",") if k.strip()] if args.group_by else None
    formats = ("csv", "svg") if args.format == "svg" else ("csv",)
    try:
        records = _read(args.log)
        paths = run_suite(records, args.out, formats=formats, group_by=group_by)
    except (LogError, AnalysisError) as exc:
        _err(str(exc))
        return EXIT_IO
    except OSError as exc:
        _err(f"cannot write to {args.out}: {exc}")
        return EXIT_IO
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        records = _read(args.log)
    except LogError as exc:
        _err(str(exc))
        return EXIT_IO
    latest = latest_by_cell(records)
    status = Counter(r.get("status") for r in latest.values())
    decisions = messages = 0
    for rec in latest.values():
        if rec.get("status") != "completed":
            continue
        for rnd in rec["rounds"]:
            decisions += len(rnd["choices"])
            messages += len(rnd["messages"])
    print(f"records={len(records)} games={len(latest)} "
          + " ".join(f"{k}={status[k]}" for k in sorted(status)))
    print(f"decisions={decisions} messages={messages}")
    for rec in sorted(latest.values(), key=lambda r: r["cell_id"]):
        if rec.get("status") != "completed":
            failure = rec.get("failure") or {}
            print(f"failed {rec['cell_id']} round={failure.get('round')} reason={failure.get('reason')}")
    return EXIT_PARTIAL if status.get("failed") else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a config, its payoff matrices and templates")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("cells", help="count (and optionally list) experiment cells")
    p.add_argument("config")
    p.add_argument("--list", action="store_true", help="print every cell_id")
    p.set_defaults(func=cmd_cells)

    p = sub.add_parser("run", help="play every cell and append records to a JSONL log")
    p.add_argument("config")
    p.add_argument("--log", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--resume", action="store_true")
    p.add_argument("--quiet", action="store_true", help="no per-game progress")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="compute the metric suite from a log")
    p.add_argument("log")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.add_argument("--group-by")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", help="summarize a log by status")
    p.add_argument("log")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
