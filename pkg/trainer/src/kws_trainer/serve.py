"""Request loop: one JSON document per line, one response per request.

A malformed line or a failed training never kills the loop; it answers
with an error document and waits for the next request. Requests are
handled strictly one at a time, in arrival order.
"""

from __future__ import annotations

import json
import sys

from .features import Dataset
from .protocol import (
    ProtocolError,
    error_doc,
    hello_doc,
    parse_request,
    request_trial_id,
    result_doc,
)
from .training import FULL_TRAINING_ITERATIONS, TrainingError, run_request


def _write(stream, doc: dict) -> None:
    stream.write(json.dumps(doc) + "\n")
    stream.flush()


def serve(
    dataset: Dataset,
    stdin=None,
    stdout=None,
    device: str = "cpu",
    full_iterations: int = FULL_TRAINING_ITERATIONS,
) -> None:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    _write(stdout, hello_doc())
    for line in stdin:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            _write(stdout, error_doc(-1, f"invalid JSON: {exc}"))
            continue
        try:
            req = parse_request(obj)
        except ProtocolError as exc:
            _write(stdout, error_doc(request_trial_id(obj), str(exc)))
            continue
        try:
            top1, samples = run_request(
                req, dataset, device=device, full_iterations=full_iterations
            )
        except (ProtocolError, TrainingError) as exc:
            _write(stdout, error_doc(req.trial_id, str(exc)))
            continue
        except Exception as exc:  # keep the stream alive on any training bug
            _write(stdout, error_doc(req.trial_id, f"{type(exc).__name__}: {exc}"))
            continue
        _write(stdout, result_doc(req.trial_id, top1, samples))
