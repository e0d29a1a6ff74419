"""Candidate evaluation: a fast deterministic surrogate and a subprocess worker.

Worker wire protocol, one JSON document per line over stdin/stdout:

  worker -> engine   {"hello": {"protocol": 1, "name": <str>}}     once, at startup
  engine -> worker   {"eval": {"trial_id": <int>,
                               "arch": {"input": {...}, "layers": [...]},
                               "solver": {"optimizer": "adam", "lr": <float>,
                                          "batch": <int>, "iterations": <int>,
                                          "decay": {"factor": <float>, "every": <int>} | null},
                               "eval_samples": <int>, "seed": <int>}}
  worker -> engine   {"result": {"trial_id": <int>, "top1": <float>,
                                 "evaluated_samples": <int>}}
                  or {"error": {"trial_id": <int>, "message": <str>}}

Requests are answered one at a time and in order. A worker must answer a
malformed request with an error document rather than dying. Timeouts are
enforced on the engine side; a worker that times out or breaks protocol is
killed and respawned for the next request.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import threading
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence

from .archspec import (
    NetworkArch,
    SolverSettings,
    arch_canonical_json,
    arch_from_dict,
    arch_to_dict,
    validate_arch,
)
from .costmodel import network_cost
from .hashing import stable_u64

PROTOCOL_VERSION = 1

# Surrogate shape: accuracy saturates with parameter count and training length.
_CAP_FLOOR = 0.5
_CAP_SPAN = 0.45
_CAP_PARAM_SCALE = 20_000.0
_FULL_TRAINING_ITERATIONS = 40_000
_NOISE_AMPLITUDE = 0.01


class WorkerError(RuntimeError):
    """Raised when a worker cannot be started or breaks the wire protocol."""


@dataclass(frozen=True)
class EvalRequest:
    trial_id: int
    arch: NetworkArch
    solver: SolverSettings
    eval_samples: int = 100
    seed: int = 0


@dataclass(frozen=True)
class EvalResponse:
    trial_id: int
    top1: Optional[float] = None
    evaluated_samples: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def request_to_wire(req: EvalRequest) -> dict:
    return {
        "eval": {
            "trial_id": req.trial_id,
            "arch": arch_to_dict(req.arch),
            "solver": req.solver.to_wire(),
            "eval_samples": req.eval_samples,
            "seed": req.seed,
        }
    }


def request_from_wire(obj: Mapping) -> EvalRequest:
    body = obj["eval"]
    return EvalRequest(
        trial_id=int(body["trial_id"]),
        arch=validate_arch(arch_from_dict(body["arch"])),
        solver=SolverSettings.from_wire(body["solver"]),
        eval_samples=int(body["eval_samples"]),
        seed=int(body["seed"]),
    )


def response_from_wire(obj: Mapping, expect_trial_id: int) -> EvalResponse:
    """Validate one worker response document against the protocol."""
    if "error" in obj:
        body = obj["error"]
        if int(body.get("trial_id", -1)) != expect_trial_id:
            raise WorkerError(
                f"error document for trial {body.get('trial_id')!r}, expected {expect_trial_id}"
            )
        return EvalResponse(trial_id=expect_trial_id, error=str(body.get("message", "unknown")))
    if "result" not in obj:
        raise WorkerError(f"unrecognized worker document: {list(obj)!r}")
    body = obj["result"]
    trial_id = int(body["trial_id"])
    if trial_id != expect_trial_id:
        raise WorkerError(f"result for trial {trial_id}, expected {expect_trial_id}")
    top1 = float(body["top1"])
    if not math.isfinite(top1) or not 0.0 <= top1 <= 1.0:
        raise WorkerError(f"top1 {top1!r} outside [0, 1]")
    samples = int(body["evaluated_samples"])
    if samples < 1:
        raise WorkerError(f"evaluated_samples must be positive, got {samples}")
    return EvalResponse(trial_id=trial_id, top1=top1, evaluated_samples=samples)


# ---------------------------------------------------------------------------
# Surrogate


def surrogate_eval(req: EvalRequest) -> EvalResponse:
    """Closed-form stand-in for training: deterministic, instant, plausible.

    The accuracy ceiling grows with total weight count and saturates; the
    attained fraction of the ceiling grows with training iterations; a small
    seeded perturbation depends on (architecture, seed) so repeat calls are
    identical. The result is quantized to whole correct answers out of
    eval_samples, exactly like an accuracy measured by counting.
    """
    if req.eval_samples < 1:
        return EvalResponse(trial_id=req.trial_id, error="eval_samples must be positive")
    params = network_cost(req.arch).total_params
    cap = _CAP_FLOOR + _CAP_SPAN * (1.0 - math.exp(-params / _CAP_PARAM_SCALE))
    progress = min(1.0, req.solver.iterations / _FULL_TRAINING_ITERATIONS) ** 0.25
    unit = stable_u64(arch_canonical_json(req.arch), req.seed) / float(2**64 - 1)
    noise = (2.0 * unit - 1.0) * _NOISE_AMPLITUDE
    top1 = min(1.0, max(0.0, cap * progress + noise))
    top1 = round(top1 * req.eval_samples) / req.eval_samples
    return EvalResponse(trial_id=req.trial_id, top1=top1, evaluated_samples=req.eval_samples)


class SurrogateEvaluator:
    """Evaluator facade over surrogate_eval; thread-safe and stateless."""

    parallel_safe = True

    def evaluate(self, req: EvalRequest) -> EvalResponse:
        return surrogate_eval(req)

    def close(self) -> None:
        pass


# ---------------------------------------------------------------------------
# Subprocess worker


class _WorkerProc:
    """One worker subprocess with a line reader thread and handshake state."""

    def __init__(self, cmd: Sequence[str], timeout_s: float):
        self.cmd = list(cmd)
        self.timeout_s = timeout_s
        try:
            self.proc = subprocess.Popen(
                self.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise WorkerError(f"cannot start worker {self.cmd!r}: {exc}") from exc
        self.lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self.reader = threading.Thread(target=self._read_lines, daemon=True)
        self.reader.start()
        self._handshake()

    def _read_lines(self) -> None:
        try:
            for line in self.proc.stdout:
                self.lines.put(line)
        finally:
            self.lines.put(None)

    def _next_doc(self) -> Mapping:
        try:
            line = self.lines.get(timeout=self.timeout_s)
        except queue.Empty:
            raise WorkerError(f"worker timed out after {self.timeout_s}s")
        if line is None:
            raise WorkerError(f"worker exited (code {self.proc.poll()})")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise WorkerError(f"worker wrote invalid JSON: {line!r}") from exc

    def _handshake(self) -> None:
        doc = self._next_doc()
        hello = doc.get("hello")
        if not isinstance(hello, Mapping) or hello.get("protocol") != PROTOCOL_VERSION:
            self.kill()
            raise WorkerError(f"bad worker handshake: {doc!r}")
        self.name = str(hello.get("name", "worker"))

    def request(self, req: EvalRequest) -> EvalResponse:
        try:
            self.proc.stdin.write(json.dumps(request_to_wire(req)) + "\n")
            self.proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise WorkerError(f"cannot write to worker: {exc}") from exc
        return response_from_wire(self._next_doc(), req.trial_id)

    def alive(self) -> bool:
        return self.proc.poll() is None

    def kill(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            pass


class WorkerEvaluator:
    """Evaluator that delegates to a pool of worker subprocesses.

    `procs` workers are started eagerly so a missing or broken worker
    command fails loudly up front. evaluate() is thread-safe; each request
    checks a worker out of the pool. A worker that times out, dies or breaks
    protocol yields an error response and is replaced on next checkout.
    """

    parallel_safe = True

    def __init__(self, cmd: Sequence[str], timeout_s: float = 300.0, procs: int = 1):
        if not cmd:
            raise WorkerError("worker command is empty")
        self.cmd = list(cmd)
        self.timeout_s = timeout_s
        self._pool: "queue.Queue[Optional[_WorkerProc]]" = queue.Queue()
        self._closed = False
        for _ in range(max(1, procs)):
            self._pool.put(_WorkerProc(self.cmd, timeout_s))

    def evaluate(self, req: EvalRequest) -> EvalResponse:
        if self._closed:
            raise WorkerError("evaluator is closed")
        slot = self._pool.get()
        try:
            if slot is None or not slot.alive():
                if slot is not None:
                    slot.kill()
                slot = _WorkerProc(self.cmd, self.timeout_s)
            try:
                return slot.request(req)
            except WorkerError as exc:
                slot.kill()
                slot = None
                return EvalResponse(trial_id=req.trial_id, error=str(exc))
        finally:
            self._pool.put(slot)

    def close(self) -> None:
        self._closed = True
        drained: List[Optional[_WorkerProc]] = []
        try:
            while True:
                drained.append(self._pool.get_nowait())
        except queue.Empty:
            pass
        for slot in drained:
            if slot is not None:
                slot.kill()

    def __enter__(self) -> "WorkerEvaluator":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
