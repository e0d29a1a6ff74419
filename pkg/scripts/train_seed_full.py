"""Train the committed seed architecture to convergence on real speech data.

This is a long-running job (hours on CPU), not part of the test suite:

    python3 scripts/train_seed_full.py --dataset /data/speech_commands_v0.02

With the default recipe (adam, lr 1e-3 halved every 10k steps, batch 25,
40,000 iterations) the seed network evaluates on the full test split and
should land in the mid-0.9 top-1 range.
"""

import argparse
import json
import time
from pathlib import Path

from kws_trainer.features import prepare_dataset
from kws_trainer.protocol import SolverSpec, TrainRequest, parse_arch
from kws_trainer.training import FULL_TRAINING_ITERATIONS, run_request

REPO_ROOT = Path(__file__).resolve().parents[1]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dataset", required=True, help="speech commands directory")
    parser.add_argument("--cache", default=".mfcc_cache", help="feature cache directory")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--arch", default=str(REPO_ROOT / "configs" / "seed_arch.json"))
    parser.add_argument("--iterations", type=int, default=FULL_TRAINING_ITERATIONS)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--batch", type=int, default=25)
    parser.add_argument("--optimizer", default="adam", choices=("adam", "sgd"))
    parser.add_argument("--decay-factor", type=float, default=0.5)
    parser.add_argument("--decay-every", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    arch = parse_arch(json.loads(Path(args.arch).read_text()))
    print(f"featurizing {args.dataset} (cache: {args.cache})")
    dataset = prepare_dataset(args.dataset, cache_dir=Path(args.cache))
    for split in ("training", "validation", "testing"):
        x, _ = dataset.split(split)
        print(f"  {split}: {len(x)} clips")

    split = "testing" if args.iterations >= FULL_TRAINING_ITERATIONS else "validation"
    eval_samples = len(dataset.split(split)[0])
    request = TrainRequest(
        trial_id=0,
        arch=arch,
        solver=SolverSpec(
            optimizer=args.optimizer,
            lr=args.lr,
            batch=args.batch,
            iterations=args.iterations,
            decay_factor=args.decay_factor,
            decay_every=args.decay_every,
        ),
        eval_samples=eval_samples,
        seed=args.seed,
    )

    print(f"training {args.iterations} iterations, then scoring the {split} split")
    start = time.perf_counter()
    top1, samples = run_request(request, dataset, device=args.device)
    elapsed = time.perf_counter() - start
    print(f"top-1 {top1:.4f} on {samples} {split} clips ({elapsed / 3600.0:.2f} h)")


if __name__ == "__main__":
    main()
