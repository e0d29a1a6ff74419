"""Run the desk-scale surrogate experiment and print its frontier.

Usage:
  python3 scripts/desk_run.py [--config configs/experiment_surrogate_desk.json]
                              [--log desk.log] [--seed N]

Runs (or resumes) the experiment, then prints the frontier and the delta
table against the seed architecture. Rerunning with the same log verifies
the stored records instead of recomputing them.
"""

import argparse
import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]

from kwsnas.cli import main as cli_main
from kwsnas.costmodel import mflops, network_cost
from kwsnas.engine import load_config, run_experiment, frontier_trials, trials_from_records


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=str(REPO / "configs" / "experiment_surrogate_desk.json"))
    parser.add_argument("--log", default="desk.log")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    cfg = load_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)

    started = time.perf_counter()
    log = run_experiment(cfg, log=args.log)
    elapsed = time.perf_counter() - started
    trials = trials_from_records(log.records)
    print(f"{len(trials)} trials in {elapsed:.1f}s, log: {args.log}")

    seed_cost = network_cost(cfg.space.seed)
    print(f"seed: {mflops(seed_cost.total_ops)} MFLOPs, {seed_cost.total_params} weights")
    for t in sorted(frontier_trials(trials), key=lambda t: -t.ops):
        speedup = seed_cost.total_ops / t.ops
        print(
            f"  trial {t.id}: top1 {t.accuracy:.4f}  {mflops(t.ops)} MFLOPs  "
            f"speedup {speedup:.2f}x"
        )
    print("\nfull report:")
    return cli_main(
        [
            "report",
            str(args.log),
            "--seed-ops",
            str(seed_cost.total_ops),
            "--seed-top1",
            "0.9423",
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
