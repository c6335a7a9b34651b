"""Command-line front end.

    mpft run <config> [--out DIR] [--seed N] [--jobs N]
    mpft metrics <archive.csv> --ref x,y[,z]
    mpft sparse <archive.csv> --k K

Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from mpft import metrics
from mpft.config import load_config
from mpft.errors import ConfigError, DimensionError, MPFTError
from mpft.pareto_core import CSVFormatError, archive_from_csv, archive_to_csv
from mpft.sparsity import sparse_regions
from mpft.svg import front_svg
from mpft.tracker import run_mpft

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2

logger = logging.getLogger("mpft")


def _num(x) -> str:
    return "undefined" if x is None else format(float(x), ".17g")


def _err(message: str) -> None:
    print(f"mpft: error: {message}", file=sys.stderr)


def report_json(report, config) -> str:
    """Deterministic report document (sorted keys, no timestamps)."""
    doc = report.to_dict()
    doc["config"] = config.track.to_dict()
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out, jobs=args.jobs)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_USAGE
    jobs = cfg.jobs or cfg.problem.m
    try:
        archive, report = run_mpft(cfg.problem, cfg.track, ref=cfg.reference_point, jobs=jobs)
    except MPFTError as exc:
        _err(f"run failed: {exc}")
        return EXIT_RUNTIME
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        _err(f"run failed: {type(exc).__name__}: {exc}")
        return EXIT_RUNTIME

    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "archive.csv").write_text(archive_to_csv(archive), encoding="utf-8")
        (out / "report.json").write_text(report_json(report, cfg), encoding="utf-8")
        (out / "run.log").write_text("".join(f"{line}\n" for line in report.log), encoding="utf-8")
        if cfg.svg:
            (out / "front.svg").write_text(front_svg(archive, report.regions), encoding="utf-8")
    except OSError as exc:
        _err(f"cannot write outputs to {out}: {exc}")
        return EXIT_RUNTIME
    print(f"hv={_num(report.hv)}")
    print(f"sp={_num(report.sp)}")
    print(f"env_steps={report.env_steps}")
    return EXIT_OK


def _load_archive(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return archive_from_csv(text)
    except CSVFormatError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except MPFTError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_ref(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--ref must be comma-separated numbers, got {text!r}") from exc


def cmd_metrics(args) -> int:
    try:
        archive = _load_archive(args.csv)
        ref = _parse_ref(args.ref)
        objs = archive.objectives()
        hv = metrics.hypervolume(objs, ref)
    except (ConfigError, DimensionError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    sp = metrics.sparsity(objs) if len(archive) >= 2 else None
    print(f"hv={_num(hv)}")
    print(f"sp={_num(sp)}")
    return EXIT_OK


def cmd_sparse(args) -> int:
    if args.k < 1:
        _err("--k must be at least 1")
        return EXIT_USAGE
    try:
        archive = _load_archive(args.csv)
        regions = sparse_regions(archive.objectives(), args.k)
    except (ConfigError, DimensionError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    for r in regions:
        print(json.dumps(r.to_dict(), sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpft", description="Multi-policy Pareto front tracking.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run all stages from a JSON config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--seed", type=int, help="root seed (overrides track.seed)")
    run.add_argument("--jobs", type=int, help="worker threads (default: number of objectives)")
    run.set_defaults(func=cmd_run)

    met = sub.add_parser("metrics", help="hypervolume and sparsity of an archive CSV")
    met.add_argument("csv")
    met.add_argument("--ref", required=True, help="reference point, e.g. 0,0")
    met.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("sparse", help="top-K sparse regions of an archive CSV")
    sp.add_argument("csv")
    sp.add_argument("--k", type=int, required=True)
    sp.set_defaults(func=cmd_sparse)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        parser.error("--jobs must be at least 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
