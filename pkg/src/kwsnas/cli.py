"""Command-line front end.

Commands:
  cost     per-layer and total ops/params of an architecture file
  compare  speedup and accuracy delta between a baseline and a model
  search   run an experiment from a config file, writing a trial log
  resume   continue an interrupted run from its log
  pareto   list the frontier trials of a log
  report   scatter CSV plus a frontier delta table against a baseline

Exit codes: 0 success, 1 domain error, 2 usage error. All commands are thin
shells over the library; with --format csv the output is byte-stable across
runs for identical inputs.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

from .archspec import ArchError, load_arch
from .costmodel import mflops, network_cost
from .engine import (
    ConfigError,
    LogError,
    Trial,
    TrialLog,
    effective_points,
    load_config,
    resume as resume_run,
    run_experiment,
    trials_from_records,
)
from .evaluator import WorkerError
from .pareto import frontier


@dataclass(frozen=True)
class DeltaReportRow:
    """One comparison row: a model against the baseline."""

    label: str
    top1: float
    mflops: float
    delta_top1: float
    speedup: float

    def render_speedup(self) -> str:
        return f"{self.speedup:.2f}×"


def delta_row(label: str, seed_ops: float, model_ops: float, seed_top1: float, model_top1: float) -> DeltaReportRow:
    if seed_ops <= 0 or model_ops <= 0:
        raise ArchError("operation counts must be positive")
    return DeltaReportRow(
        label=label,
        top1=model_top1,
        mflops=model_ops / 1e6,
        delta_top1=(model_top1 - seed_top1) * 100.0,
        speedup=seed_ops / model_ops,
    )


def parse_ops(text: str) -> float:
    """Parse an operation count; a trailing M means millions ("581.12M")."""
    raw = text.strip()
    scale = 1.0
    if raw.endswith(("M", "m")):
        raw = raw[:-1]
        scale = 1e6
    try:
        value = float(raw) * scale
    except ValueError:
        raise ArchError(f"not an operation count: {text!r}") from None
    if value <= 0:
        raise ArchError(f"operation count must be positive: {text!r}")
    return value


def _assignment_text(trial: Trial) -> str:
    pids = sorted(trial.assignment, key=lambda p: p.sort_key())
    return ";".join(f"{p.key()}={trial.assignment[p]}" for p in pids)


def _frontier_rows(trials: Sequence[Trial]) -> List[Trial]:
    """Frontier trials for listing, most expensive first."""
    by_id = {t.id: t for t in trials}
    front = [by_id[p.trial_id] for p in frontier(effective_points(trials))]
    return sorted(front, key=lambda t: (-t.ops, t.id))


# ---------------------------------------------------------------------------
# Commands


def cmd_cost(args) -> int:
    arch = load_arch(args.arch_file)
    cost = network_cost(arch)
    out = []
    if args.format == "csv":
        out.append("layer,kh,kw,m,sh,sw,padding,out_h,out_w,ops,params")
        for i, (layer, lc) in enumerate(zip(arch.layers, cost.per_layer)):
            out.append(
                f"{i},{layer.kh},{layer.kw},{layer.m},{layer.sh},{layer.sw},"
                f"{layer.padding},{lc.out_shape.h},{lc.out_shape.w},{lc.ops},{lc.params}"
            )
        out.append(f"total,,,,,,,,,{cost.total_ops},{cost.total_params}")
    else:
        out.append(f"input {arch.input.c}x{arch.input.h}x{arch.input.w}")
        for i, (layer, lc) in enumerate(zip(arch.layers, cost.per_layer)):
            out.append(
                f"layer {i}: {layer.kh}x{layer.kw} m={layer.m} stride {layer.sh}x{layer.sw} "
                f"{layer.padding} -> {lc.out_shape.h}x{lc.out_shape.w}  "
                f"ops {lc.ops}  params {lc.params}"
            )
        out.append(
            f"total ops {cost.total_ops} ({mflops(cost.total_ops)} MFLOPs), "
            f"params {cost.total_params}"
        )
    print("\n".join(out))
    return 0


def cmd_compare(args) -> int:
    row = delta_row(
        args.label,
        parse_ops(args.seed_ops),
        parse_ops(args.model_ops),
        args.seed_top1,
        args.model_top1,
    )
    if args.format == "csv":
        print("label,top1,mflops,delta_top1,speedup")
        print(f"{row.label},{row.top1:.4f},{row.mflops:.2f},{row.delta_top1:+.2f},{row.speedup:.2f}")
    else:
        print(
            f"{row.label}: top1 {row.top1:.4f}  {row.mflops:.2f} MFLOPs  "
            f"delta_top1 {row.delta_top1:+.2f}  speedup {row.render_speedup()}"
        )
    return 0


def _print_frontier_summary(log: TrialLog) -> None:
    trials = trials_from_records(log.records)
    rows = _frontier_rows(trials)
    print(f"frontier: {len(rows)} models")
    for t in rows:
        print(f"  trial {t.id}: top1 {t.accuracy:.4f}  {mflops(t.ops)} MFLOPs  {_assignment_text(t)}")


def cmd_search(args) -> int:
    cfg = load_config(args.config_file)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    log_path = Path(args.log)
    if log_path.exists() and log_path.stat().st_size > 0:
        raise LogError(f"{log_path} already has records; use resume")
    log = run_experiment(cfg, log=log_path)
    _print_frontier_summary(log)
    return 0


def cmd_resume(args) -> int:
    cfg = load_config(args.config_file)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    log_path = Path(args.log)
    if not log_path.exists():
        raise LogError(f"{log_path} does not exist; use search to start a run")
    log = resume_run(cfg, log_path)
    _print_frontier_summary(log)
    return 0


def cmd_pareto(args) -> int:
    log = TrialLog.open(args.log)
    trials = trials_from_records(log.records)
    rows = _frontier_rows(trials)
    if args.format == "csv":
        print("trial_id,top1,mflops,assignment")
        for t in rows:
            print(f"{t.id},{t.accuracy},{mflops(t.ops)},{_assignment_text(t)}")
    else:
        for t in rows:
            print(f"trial {t.id}: top1 {t.accuracy:.4f}  {mflops(t.ops)} MFLOPs  {_assignment_text(t)}")
        print(f"{len(rows)} frontier models")
    return 0


def cmd_report(args) -> int:
    log = TrialLog.open(args.log)
    trials = [t for t in trials_from_records(log.records) if t.accuracy is not None]
    if not trials:
        raise LogError("log holds no evaluated trials")
    if args.seed_arch is not None:
        seed_ops = float(network_cost(load_arch(args.seed_arch)).total_ops)
    else:
        seed_ops = parse_ops(args.seed_ops)
    seed_top1 = args.seed_top1

    front_ids = {p.trial_id for p in frontier(effective_points(trials))}
    out = ["trial_id,ops,top1,phase,is_pareto,is_finetuned"]
    for t in trials:
        out.append(
            f"{t.id},{t.ops},{t.accuracy},{t.phase},"
            f"{int(t.id in front_ids)},{int(t.finetune_top1 is not None)}"
        )
    out.append("")

    rows = [DeltaReportRow("seed", seed_top1, seed_ops / 1e6, 0.0, 1.0)]
    for t in _frontier_rows(trials):
        rows.append(delta_row(f"trial-{t.id}", seed_ops, float(t.ops), seed_top1, t.accuracy))
    if args.format == "csv":
        out.append("label,top1,mflops,delta_top1,speedup,in_band")
        for row in rows:
            in_band = int(row.delta_top1 >= -args.band)
            out.append(
                f"{row.label},{row.top1:.4f},{row.mflops:.2f},"
                f"{row.delta_top1:+.2f},{row.speedup:.2f},{in_band}"
            )
    else:
        out.append(f"frontier vs seed (band {args.band:.1f} points):")
        for row in rows:
            in_band = "in-band" if row.delta_top1 >= -args.band else "off-band"
            out.append(
                f"  {row.label}: top1 {row.top1:.4f}  {row.mflops:.2f} MFLOPs  "
                f"delta_top1 {row.delta_top1:+.2f}  speedup {row.render_speedup()}  {in_band}"
            )
    print("\n".join(out))
    return 0


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kwsnas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_cost = sub.add_parser("cost", help="ops/params of an architecture file")
    p_cost.add_argument("arch_file")
    p_cost.add_argument("--format", choices=("text", "csv"), default="text")
    p_cost.set_defaults(func=cmd_cost)

    p_cmp = sub.add_parser("compare", help="speedup and accuracy delta vs a baseline")
    p_cmp.add_argument("seed_ops", help="baseline ops, raw or with M suffix (581.12M)")
    p_cmp.add_argument("model_ops", help="model ops, raw or with M suffix")
    p_cmp.add_argument("seed_top1", type=float)
    p_cmp.add_argument("model_top1", type=float)
    p_cmp.add_argument("--label", default="model")
    p_cmp.add_argument("--format", choices=("text", "csv"), default="text")
    p_cmp.set_defaults(func=cmd_compare)

    p_search = sub.add_parser("search", help="run an experiment")
    p_search.add_argument("config_file")
    p_search.add_argument("--log", required=True, help="trial log path (must be new)")
    p_search.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_search.set_defaults(func=cmd_search)

    p_resume = sub.add_parser("resume", help="continue an interrupted run")
    p_resume.add_argument("config_file")
    p_resume.add_argument("--log", required=True)
    p_resume.add_argument("--seed", type=int, default=None)
    p_resume.set_defaults(func=cmd_resume)

    p_pareto = sub.add_parser("pareto", help="list frontier trials of a log")
    p_pareto.add_argument("log")
    p_pareto.add_argument("--format", choices=("text", "csv"), default="text")
    p_pareto.set_defaults(func=cmd_pareto)

    p_report = sub.add_parser("report", help="scatter CSV and frontier delta table")
    p_report.add_argument("log")
    seed_src = p_report.add_mutually_exclusive_group(required=True)
    seed_src.add_argument("--seed-ops", help="baseline ops, raw or with M suffix")
    seed_src.add_argument("--seed-arch", help="baseline architecture file")
    p_report.add_argument("--seed-top1", type=float, required=True)
    p_report.add_argument("--band", type=float, default=1.0, help="accuracy band in points")
    p_report.add_argument("--format", choices=("text", "csv"), default="text")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArchError, LogError, ConfigError, WorkerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
