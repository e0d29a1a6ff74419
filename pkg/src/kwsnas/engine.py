"""Search engine: phased proposal loop, refinement freezes, fine-tuning, resume.

The engine drives the whole workflow: a sampler proposes assignments phase
by phase, an evaluator scores them, the Pareto frontier of everything seen
so far is refined between phases by freezing the single most common frontier
setting, and after the last phase the frontier candidates are fine-tuned at
full training length. Candidates on the frontier are never discarded,
whichever phase found them.

Every step appends one JSON record per line to the trial log:

  {"event": "phase",     "run", "phase", "budget", "solver", ...}
  {"event": "proposed",  "run", "id", "phase", "assignment", "ops", "params"}
  {"event": "evaluated", "run", "id", "top1", "iterations", "samples"}
  {"event": "failed",    "run", "id", "stage", "reason"}
  {"event": "freeze",    "run", "phase", "param", "value", "support", "threshold"}
  {"event": "finetuned", "run", "id", "top1", "iterations", "samples"}

Records are serialized canonically (sorted keys, no whitespace) and carry a
tag derived from the experiment seed and the search space, so two runs of
one configuration produce byte-identical logs. The runner regenerates the
record stream deterministically and fast-forwards over whatever prefix a
log already holds, verifying deterministic records and trusting stored
evaluation results; resuming an interrupted run is therefore the same code
path as starting one, and tampered or mismatched logs are rejected at the
first diverging record.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from . import tpe
from .archspec import (
    ArchError,
    Assignment,
    SearchSpace,
    SolverSettings,
    apply_assignment,
    arch_canonical_json,
    assignment_from_json,
    assignment_to_json,
    freeze_param,
    load_space,
    parse_pid_key,
    solver_for_assignment,
)
from .costmodel import network_cost
from .evaluator import EvalRequest, SurrogateEvaluator, WorkerEvaluator
from .hashing import stable_tag, stable_u64
from .pareto import ScoredPoint, common_settings, frontier, most_common_setting

SEARCH_STAGE = "search"
FINETUNE_STAGE = "finetune"


class LogError(ValueError):
    """Raised when a trial log is unreadable, tampered with, or mismatched."""


class ConfigError(ValueError):
    """Raised when an experiment configuration is malformed."""


@dataclass(frozen=True)
class PhaseSpec:
    """One search phase: its trial budget (or wall-clock limit) and solver."""

    budget: Optional[int]
    solver: SolverSettings
    max_seconds: Optional[float] = None
    pin_solver: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    space: SearchSpace
    phases: Tuple[PhaseSpec, ...]
    finetune_iterations: int
    refine_threshold: float = 0.5
    seed: int = 0
    evaluator: Mapping = field(default_factory=lambda: {"kind": "surrogate"})
    max_parallel: int = 1
    eval_samples: int = 100
    tpe_overrides: Mapping = field(default_factory=dict)
    carry_observations: bool = False
    scalarize_lambda: Optional[float] = None


def validate_config(cfg: ExperimentConfig) -> ExperimentConfig:
    if not cfg.phases:
        raise ConfigError("experiment needs at least one phase")
    for i, phase in enumerate(cfg.phases):
        if phase.budget is None and phase.max_seconds is None:
            raise ConfigError(f"phase {i}: needs a budget or max_seconds")
        if phase.budget is not None and phase.budget < 1:
            raise ConfigError(f"phase {i}: budget must be positive")
        if phase.max_seconds is not None and phase.max_seconds <= 0:
            raise ConfigError(f"phase {i}: max_seconds must be positive")
        if cfg.finetune_iterations < phase.solver.iterations:
            raise ConfigError(
                f"phase {i}: finetune_iterations {cfg.finetune_iterations} below "
                f"phase iterations {phase.solver.iterations}"
            )
    if not 0 < cfg.refine_threshold <= 1:
        raise ConfigError("refine_threshold must be in (0, 1]")
    if cfg.max_parallel < 1:
        raise ConfigError("max_parallel must be positive")
    if cfg.eval_samples < 1:
        raise ConfigError("eval_samples must be positive")
    return cfg


def run_tag(cfg: ExperimentConfig) -> str:
    """Short tag stamped on every record; ties a log to (seed, space)."""
    space_doc = json.dumps(
        {
            "seed_arch": arch_canonical_json(cfg.space.seed),
            "domains": [
                [d.id.key(), d.lower, d.upper, d.step, d.frozen] for d in cfg.space.domains
            ],
        },
        sort_keys=True,
    )
    return stable_tag("run", cfg.seed, space_doc)


def stage_seed(experiment_seed: int, trial_id: int, stage: str) -> int:
    """Per-(trial, stage) evaluation seed; search and finetune never collide."""
    return stable_u64(experiment_seed, "stage", stage, trial_id)


# ---------------------------------------------------------------------------
# Trial log


def canonical_record(record: Mapping) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class TrialLog:
    """Append-only line-delimited JSON event log, optionally file-backed."""

    def __init__(self, path: Optional[Union[str, Path]] = None, records: Optional[List[dict]] = None):
        self.path = Path(path) if path is not None else None
        self.records: List[dict] = list(records or [])
        self._handle = None

    @classmethod
    def open(cls, path: Union[str, Path]) -> "TrialLog":
        """Load an existing log (or start an empty one at that path)."""
        p = Path(path)
        records: List[dict] = []
        if p.exists():
            for lineno, line in enumerate(p.read_text().splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as exc:
                    raise LogError(f"{p}:{lineno}: corrupt record: {exc}") from exc
        return cls(path=p, records=records)

    @classmethod
    def in_memory(cls) -> "TrialLog":
        return cls()

    def append(self, record: dict) -> None:
        self.records.append(record)
        if self.path is not None:
            if self._handle is None:
                self._handle = open(self.path, "a", buffering=1)
            self._handle.write(canonical_record(record) + "\n")

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


@dataclass
class Trial:
    """Reconstructed view of one trial across its log records."""

    id: int
    phase: int
    assignment: Assignment
    ops: int
    params: int
    top1: Optional[float] = None
    iterations: Optional[int] = None
    samples: Optional[int] = None
    finetune_top1: Optional[float] = None
    finetune_iterations: Optional[int] = None
    failed_stage: Optional[str] = None
    fail_reason: Optional[str] = None

    @property
    def state(self) -> str:
        if self.finetune_top1 is not None:
            return "finetuned"
        if self.top1 is not None:
            return "evaluated"
        if self.failed_stage == SEARCH_STAGE:
            return "failed"
        return "proposed"

    @property
    def accuracy(self) -> Optional[float]:
        """Fine-tuned accuracy when present, else the search accuracy."""
        return self.finetune_top1 if self.finetune_top1 is not None else self.top1


def trials_from_records(records: Sequence[Mapping]) -> List[Trial]:
    trials: Dict[int, Trial] = {}
    for record in records:
        event = record.get("event")
        if event == "proposed":
            trial = Trial(
                id=int(record["id"]),
                phase=int(record["phase"]),
                assignment=assignment_from_json(record["assignment"]),
                ops=int(record["ops"]),
                params=int(record["params"]),
            )
            if trial.id in trials:
                raise LogError(f"trial {trial.id} proposed twice")
            trials[trial.id] = trial
        elif event in ("evaluated", "failed", "finetuned"):
            tid = int(record["id"])
            if tid not in trials:
                raise LogError(f"{event} record for unknown trial {tid}")
            trial = trials[tid]
            if event == "evaluated":
                trial.top1 = float(record["top1"])
                trial.iterations = int(record["iterations"])
                trial.samples = int(record["samples"])
            elif event == "finetuned":
                trial.finetune_top1 = float(record["top1"])
                trial.finetune_iterations = int(record["iterations"])
            else:
                trial.failed_stage = str(record["stage"])
                trial.fail_reason = str(record.get("reason", ""))
    return [trials[tid] for tid in sorted(trials)]


def effective_points(trials: Sequence[Trial]) -> List[ScoredPoint]:
    """Scoreable (accuracy, cost) points; fine-tuned accuracy supersedes."""
    return [
        ScoredPoint(trial_id=t.id, accuracy=t.accuracy, cost=t.ops)
        for t in trials
        if t.accuracy is not None
    ]


def frontier_trials(trials: Sequence[Trial]) -> List[Trial]:
    by_id = {t.id: t for t in trials}
    return [by_id[p.trial_id] for p in frontier(effective_points(trials))]


# ---------------------------------------------------------------------------
# Replay


class _Replayer:
    """Verifies regenerated records against a log prefix, then appends."""

    def __init__(self, log: TrialLog):
        self.log = log
        self.cursor = 0

    def peek(self) -> Optional[dict]:
        if self.cursor < len(self.log.records):
            return self.log.records[self.cursor]
        return None

    def emit(self, record: dict) -> None:
        existing = self.peek()
        if existing is not None:
            if existing != record:
                raise LogError(
                    f"log record {self.cursor + 1} does not match this configuration: "
                    f"stored {canonical_record(existing)}, regenerated {canonical_record(record)}"
                )
            self.cursor += 1
            return
        self.log.append(record)
        self.cursor += 1

    def take_result(self, events: Tuple[str, ...], trial_id: int, tag: str) -> Optional[dict]:
        """Consume a stored evaluation result for this trial, if the log has one."""
        existing = self.peek()
        if existing is None:
            return None
        if (
            existing.get("event") not in events
            or existing.get("id") != trial_id
            or existing.get("run") != tag
        ):
            raise LogError(
                f"log record {self.cursor + 1} does not continue trial {trial_id}: "
                f"{canonical_record(existing)}"
            )
        self.cursor += 1
        return existing


# ---------------------------------------------------------------------------
# Runner


class _Runner:
    def __init__(self, cfg: ExperimentConfig, evaluator, log: TrialLog):
        validate_config(cfg)
        self.cfg = cfg
        self.evaluator = evaluator
        self.log = log
        self.rep = _Replayer(log)
        self.tag = run_tag(cfg)
        self.space = cfg.space
        self.trials: List[Trial] = []
        self.next_id = 1
        self.seed_ops = network_cost(cfg.space.seed).total_ops

    # -- objective ---------------------------------------------------------

    def _objective(self, top1: float, ops: int) -> float:
        value = top1
        if self.cfg.scalarize_lambda is not None:
            value = top1 - self.cfg.scalarize_lambda * (ops / self.seed_ops)
        return min(1.0, max(0.0, value))

    # -- sampler -----------------------------------------------------------

    def _fresh_tpe(self, phase_index: int) -> tpe.TpeState:
        over = self.cfg.tpe_overrides
        state = tpe.TpeState(
            gamma=float(over.get("gamma", tpe.DEFAULT_GAMMA)),
            n_startup=int(over.get("n_startup", tpe.DEFAULT_N_STARTUP)),
            n_candidates=int(over.get("n_candidates", tpe.DEFAULT_N_CANDIDATES)),
            rng_seed=stable_u64(self.cfg.seed, "tpe", phase_index),
        )
        if self.cfg.carry_observations and phase_index > 0:
            for trial in self.trials:
                if trial.top1 is not None:
                    obs = tpe.Observation(trial.assignment, self._objective(trial.top1, trial.ops))
                    state = tpe.observe(state, obs)
        return state

    # -- phases ------------------------------------------------------------

    def _phase_record(self, phase_index: int) -> dict:
        phase = self.cfg.phases[phase_index]
        record = {
            "event": "phase",
            "run": self.tag,
            "phase": phase_index,
            "budget": phase.budget,
            "solver": phase.solver.to_wire(),
        }
        if phase.max_seconds is not None:
            record["max_seconds"] = phase.max_seconds
        if phase.pin_solver:
            record["pin_solver"] = True
        return record

    def _phase_continues(self, phase: PhaseSpec, phase_index: int, done: int, started: float) -> bool:
        if phase.budget is not None:
            if done >= phase.budget:
                return False
            if phase.max_seconds is not None and self.rep.peek() is None:
                return time.monotonic() - started < phase.max_seconds
            return True
        nxt = self.rep.peek()
        if nxt is not None:
            return nxt.get("event") == "proposed" and nxt.get("phase") == phase_index
        return time.monotonic() - started < phase.max_seconds

    def run_phase(self, phase_index: int) -> None:
        phase = self.cfg.phases[phase_index]
        self.rep.emit(self._phase_record(phase_index))
        state = self._fresh_tpe(phase_index)
        started = time.monotonic()
        done = 0
        while self._phase_continues(phase, phase_index, done, started):
            tid = self.next_id
            self.next_id += 1
            assignment = tpe.suggest(state, self.space, draw=done)
            arch = apply_assignment(self.space, assignment)
            cost = network_cost(arch)
            self.rep.emit(
                {
                    "event": "proposed",
                    "run": self.tag,
                    "id": tid,
                    "phase": phase_index,
                    "assignment": assignment_to_json(assignment),
                    "ops": cost.total_ops,
                    "params": cost.total_params,
                }
            )
            trial = Trial(
                id=tid,
                phase=phase_index,
                assignment=assignment,
                ops=cost.total_ops,
                params=cost.total_params,
            )
            result = self.rep.take_result(("evaluated", "failed"), tid, self.tag)
            if result is None:
                solver = solver_for_assignment(self.space, assignment, phase.solver)
                resp = self.evaluator.evaluate(
                    EvalRequest(
                        trial_id=tid,
                        arch=arch,
                        solver=solver,
                        eval_samples=self.cfg.eval_samples,
                        seed=stage_seed(self.cfg.seed, tid, SEARCH_STAGE),
                    )
                )
                if resp.ok:
                    result = {
                        "event": "evaluated",
                        "run": self.tag,
                        "id": tid,
                        "top1": resp.top1,
                        "iterations": solver.iterations,
                        "samples": resp.evaluated_samples,
                    }
                else:
                    result = {
                        "event": "failed",
                        "run": self.tag,
                        "id": tid,
                        "stage": SEARCH_STAGE,
                        "reason": resp.error,
                    }
                self.rep.emit(result)
            if result["event"] == "evaluated":
                trial.top1 = float(result["top1"])
                trial.iterations = int(result["iterations"])
                trial.samples = int(result["samples"])
                state = tpe.observe(
                    state,
                    tpe.Observation(assignment, self._objective(trial.top1, trial.ops)),
                    self.space,
                )
            else:
                trial.failed_stage = SEARCH_STAGE
                trial.fail_reason = str(result.get("reason", ""))
            self.trials.append(trial)
            done += 1
        if phase.pin_solver:
            self._pin_solver(phase_index)

    def _pin_solver(self, phase_index: int) -> None:
        candidates = [t for t in self.trials if t.phase == phase_index and t.top1 is not None]
        if not candidates:
            raise LogError(f"phase {phase_index}: no evaluated trial to pin solver from")
        best = max(candidates, key=lambda t: (t.top1, -t.id))
        values = {}
        for dom in self.space.domains:
            if dom.id.kind in ("lr", "batch", "iterations") and dom.frozen is None:
                values[dom.id.key()] = best.assignment[dom.id]
        for key, value in sorted(values.items()):
            self.space = freeze_param(self.space, parse_pid_key(key), value)
        self.rep.emit(
            {
                "event": "pinned_solver",
                "run": self.tag,
                "phase": phase_index,
                "values": values,
            }
        )

    # -- refinement --------------------------------------------------------

    def refine_step(self, phase_index: int) -> Tuple:
        evaluated = [t for t in self.trials if t.top1 is not None]
        points = [ScoredPoint(t.id, t.top1, t.ops) for t in evaluated]
        if not points:
            raise LogError(f"phase {phase_index}: nothing evaluated, cannot refine")
        by_id = {t.id: t for t in evaluated}
        assignments = [by_id[p.trial_id].assignment for p in frontier(points)]
        hist = common_settings(assignments)
        pid, value, support = most_common_setting(hist, exclude_frozen=self.space.frozen_ids())
        self.space = freeze_param(self.space, pid, value)
        self.rep.emit(
            {
                "event": "freeze",
                "run": self.tag,
                "phase": phase_index,
                "param": pid.key(),
                "value": value,
                "support": support,
                "threshold": self.cfg.refine_threshold,
            }
        )
        return pid, value, support

    # -- finetune ----------------------------------------------------------

    def _finetune_result(self, trial: Trial) -> dict:
        solver = solver_for_assignment(
            self.cfg.space, trial.assignment, self.cfg.phases[trial.phase].solver
        )
        # full-length training wins over any searched iteration count
        solver = replace(solver, iterations=self.cfg.finetune_iterations)
        resp = self.evaluator.evaluate(
            EvalRequest(
                trial_id=trial.id,
                arch=apply_assignment(self.cfg.space, trial.assignment),
                solver=solver,
                eval_samples=self.cfg.eval_samples,
                seed=stage_seed(self.cfg.seed, trial.id, FINETUNE_STAGE),
            )
        )
        if resp.ok:
            return {
                "event": "finetuned",
                "run": self.tag,
                "id": trial.id,
                "top1": resp.top1,
                "iterations": self.cfg.finetune_iterations,
                "samples": resp.evaluated_samples,
            }
        return {
            "event": "failed",
            "run": self.tag,
            "id": trial.id,
            "stage": FINETUNE_STAGE,
            "reason": resp.error,
        }

    def finetune_step(self) -> None:
        evaluated = [t for t in self.trials if t.top1 is not None]
        points = [ScoredPoint(t.id, t.top1, t.ops) for t in evaluated]
        front_ids = [p.trial_id for p in frontier(points)]
        by_id = {t.id: t for t in evaluated}
        pending: List[int] = []
        results: Dict[int, dict] = {}
        for tid in front_ids:
            stored = self.rep.take_result(("finetuned", "failed"), tid, self.tag)
            if stored is None:
                pending.append(tid)
            else:
                results[tid] = stored
        fresh = set(pending)
        if pending:
            can_parallel = getattr(self.evaluator, "parallel_safe", False)
            if self.cfg.max_parallel > 1 and len(pending) > 1 and can_parallel:
                with ThreadPoolExecutor(max_workers=self.cfg.max_parallel) as pool:
                    futures = {tid: pool.submit(self._finetune_result, by_id[tid]) for tid in pending}
                    for tid, fut in futures.items():
                        results[tid] = fut.result()
            else:
                for tid in pending:
                    results[tid] = self._finetune_result(by_id[tid])
        for tid in front_ids:
            record = results[tid]
            if tid in fresh:
                self.rep.emit(record)
            trial = by_id[tid]
            if record["event"] == "finetuned":
                trial.finetune_top1 = float(record["top1"])
                trial.finetune_iterations = int(record["iterations"])
            else:
                trial.failed_stage = FINETUNE_STAGE
                trial.fail_reason = str(record.get("reason", ""))

    # -- whole experiment ----------------------------------------------------

    def consume_interphase(self, phase_index: int) -> None:
        """Replay a freeze recorded after phase_index, if the log has one."""
        nxt = self.rep.peek()
        if nxt is not None and nxt.get("event") == "freeze":
            self.refine_step(phase_index)

    def run(self) -> None:
        last = len(self.cfg.phases) - 1
        for p in range(len(self.cfg.phases)):
            self.run_phase(p)
            unfrozen = any(d.frozen is None for d in self.space.domains)
            if p < last and unfrozen:
                self.refine_step(p)
        self.finetune_step()


# ---------------------------------------------------------------------------
# Public operations


def run_experiment(
    cfg: ExperimentConfig,
    evaluator=None,
    log: Optional[Union[TrialLog, str, Path]] = None,
) -> TrialLog:
    """Run (or resume) a whole experiment; returns the completed log."""
    if log is None:
        log = TrialLog.in_memory()
    elif not isinstance(log, TrialLog):
        log = TrialLog.open(log)
    own_evaluator = evaluator is None
    if own_evaluator:
        evaluator = build_evaluator(cfg)
    try:
        runner = _Runner(cfg, evaluator, log)
        runner.run()
    finally:
        log.close()
        if own_evaluator:
            evaluator.close()
    return log


def resume(
    cfg: ExperimentConfig,
    log: Union[TrialLog, str, Path],
    evaluator=None,
) -> TrialLog:
    """Continue an interrupted run; a complete log just verifies cleanly."""
    return run_experiment(cfg, evaluator=evaluator, log=log)


def run_phase(cfg: ExperimentConfig, phase_index: int, log: TrialLog, evaluator) -> TrialLog:
    """Run one phase on top of a log holding the phases before it."""
    if not 0 <= phase_index < len(cfg.phases):
        raise ConfigError(f"no phase {phase_index} in this configuration")
    runner = _Runner(cfg, evaluator, log)
    for q in range(phase_index):
        runner.run_phase(q)
        runner.consume_interphase(q)
    runner.run_phase(phase_index)
    return log


def refine(log: TrialLog, space: SearchSpace, threshold: float = 0.5):
    """Freeze the most common Pareto-frontier setting of the log's trials.

    Returns (new_space, (param, value, support)) and appends a freeze event.
    The single most common unfrozen setting is frozen even when its support
    is below the threshold; the threshold is recorded alongside.
    """
    trials = [t for t in trials_from_records(log.records) if t.top1 is not None]
    if not trials:
        raise LogError("nothing evaluated, cannot refine")
    points = [ScoredPoint(t.id, t.top1, t.ops) for t in trials]
    by_id = {t.id: t for t in trials}
    assignments = [by_id[p.trial_id].assignment for p in frontier(points)]
    hist = common_settings(assignments)
    pid, value, support = most_common_setting(hist, exclude_frozen=space.frozen_ids())
    new_space = freeze_param(space, pid, value)
    phase = max((t.phase for t in trials), default=0)
    tag = log.records[0].get("run", "") if log.records else ""
    log.append(
        {
            "event": "freeze",
            "run": tag,
            "phase": phase,
            "param": pid.key(),
            "value": value,
            "support": support,
            "threshold": threshold,
        }
    )
    return new_space, (pid, value, support)


def finetune(cfg: ExperimentConfig, log: TrialLog, evaluator) -> TrialLog:
    """Fine-tune the current frontier of an existing log."""
    runner = _Runner(cfg, evaluator, log)
    runner.trials = trials_from_records(log.records)
    runner.rep.cursor = len(log.records)
    runner.finetune_step()
    return log


def build_evaluator(cfg: ExperimentConfig):
    spec = dict(cfg.evaluator or {})
    kind = spec.get("kind", "surrogate")
    if kind == "surrogate":
        return SurrogateEvaluator()
    if kind == "worker":
        cmd = spec.get("cmd")
        if not cmd:
            raise ConfigError("worker evaluator needs a cmd list")
        return WorkerEvaluator(
            cmd=cmd,
            timeout_s=float(spec.get("timeout_s", 300.0)),
            procs=cfg.max_parallel,
        )
    raise ConfigError(f"unknown evaluator kind {kind!r}")


# ---------------------------------------------------------------------------
# Configuration files


def config_from_dict(obj: Mapping, base_dir: Union[str, Path] = ".") -> ExperimentConfig:
    try:
        try:
            space = load_space(Path(base_dir) / obj["space_file"])
        except ArchError as exc:
            raise ConfigError(f"cannot load search space: {exc}") from exc
        phases = tuple(
            PhaseSpec(
                budget=p.get("budget"),
                solver=SolverSettings.from_wire(p["solver"]),
                max_seconds=p.get("max_seconds"),
                pin_solver=bool(p.get("pin_solver", False)),
            )
            for p in obj["phases"]
        )
        cfg = ExperimentConfig(
            space=space,
            phases=phases,
            finetune_iterations=int(obj["finetune_iterations"]),
            refine_threshold=float(obj.get("refine_threshold", 0.5)),
            seed=int(obj.get("seed", 0)),
            evaluator=dict(obj.get("evaluator", {"kind": "surrogate"})),
            max_parallel=int(obj.get("max_parallel", 1)),
            eval_samples=int(obj.get("eval_samples", 100)),
            tpe_overrides=dict(obj.get("tpe", {})),
            carry_observations=bool(obj.get("carry_observations", False)),
            scalarize_lambda=obj.get("scalarize_lambda"),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed experiment configuration: {exc}") from exc
    return validate_config(cfg)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    p = Path(path)
    try:
        obj = json.loads(p.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p} is not valid JSON: {exc}") from exc
    return config_from_dict(obj, base_dir=p.parent)
