"""Worker entry point.

  python3 -m kws_trainer --dataset toy
  python3 -m kws_trainer --dataset /data/speech_commands --cache .mfcc_cache

Speaks the evaluator protocol on stdin/stdout until stdin closes.
"""

import argparse
import sys

from .features import prepare_dataset, toy_dataset
from .serve import serve
from .training import FULL_TRAINING_ITERATIONS


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kws_trainer", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--dataset",
        default="toy",
        help="'toy' for the synthetic set, or a speech-commands directory",
    )
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--cache", default=None, help="feature cache directory (real mode)")
    parser.add_argument(
        "--full-iterations",
        type=int,
        default=FULL_TRAINING_ITERATIONS,
        help="iteration count at which a request is scored on the test split",
    )
    args = parser.parse_args(argv)

    if args.dataset == "toy":
        dataset = toy_dataset()
    else:
        dataset = prepare_dataset(args.dataset, cache_dir=args.cache)
    serve(dataset, device=args.device, full_iterations=args.full_iterations)
    return 0


if __name__ == "__main__":
    sys.exit(main())
