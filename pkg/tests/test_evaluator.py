"""Surrogate behavior and worker wire protocol."""

import json
import math
import random
import sys
from pathlib import Path

import pytest

from kwsnas.archspec import ConvLayerSpec, NetworkArch, SolverSettings, TensorShape
from kwsnas.costmodel import network_cost
from kwsnas.evaluator import (
    EvalRequest,
    EvalResponse,
    SurrogateEvaluator,
    WorkerError,
    WorkerEvaluator,
    request_from_wire,
    request_to_wire,
    response_from_wire,
    surrogate_eval,
)

WORKERS = Path(__file__).parent / "workers"


def worker_cmd(name):
    return [sys.executable, str(WORKERS / f"{name}_worker.py")]


def tiny_arch():
    return NetworkArch(
        input=TensorShape(c=1, h=1, w=1), layers=(ConvLayerSpec(kh=1, kw=1, m=1),)
    )


def full_solver():
    return SolverSettings(optimizer="adam", lr=1e-3, batch=25, iterations=40_000)


def request(arch, trial_id=0, iterations=40_000, samples=100, seed=0):
    solver = SolverSettings(optimizer="adam", lr=1e-3, batch=25, iterations=iterations)
    return EvalRequest(
        trial_id=trial_id, arch=arch, solver=solver, eval_samples=samples, seed=seed
    )


def random_arch(rng):
    layers = tuple(
        ConvLayerSpec(kh=rng.randint(1, 4), kw=rng.randint(1, 4), m=rng.randint(1, 50))
        for _ in range(rng.randint(1, 4))
    )
    return NetworkArch(input=TensorShape(c=1, h=12, w=10), layers=layers)


# ---------------------------------------------------------------------------
# surrogate


def test_surrogate_tiny_network_sits_near_floor():
    # one weight: ceiling barely above 0.5, full-length training
    resp = surrogate_eval(request(tiny_arch()))
    assert resp.ok
    assert 0.49 <= resp.top1 <= 0.51


def test_surrogate_large_network_approaches_ceiling(seed_arch):
    assert network_cost(seed_arch).total_params > 400_000
    resp = surrogate_eval(request(seed_arch))
    assert resp.ok
    assert 0.94 <= resp.top1 <= 0.96


def test_surrogate_deterministic(seed_arch):
    a = surrogate_eval(request(seed_arch, trial_id=7, seed=3))
    b = surrogate_eval(request(seed_arch, trial_id=7, seed=3))
    assert a == b


def test_surrogate_seed_changes_noise(seed_arch):
    values = {surrogate_eval(request(seed_arch, seed=s)).top1 for s in range(16)}
    assert len(values) > 1


def test_surrogate_quantizes_to_sample_count(seed_arch):
    for samples in (7, 100, 1000):
        resp = surrogate_eval(request(seed_arch, samples=samples))
        scaled = resp.top1 * samples
        assert scaled == pytest.approx(round(scaled), abs=1e-9)
        assert resp.evaluated_samples == samples


def test_surrogate_ceiling_grows_with_weight_count(seed_arch):
    small = surrogate_eval(request(tiny_arch()))
    large = surrogate_eval(request(seed_arch))
    # 0.50 vs 0.95 ceilings dwarf the +/-0.01 perturbation
    assert large.top1 > small.top1 + 0.3


def test_surrogate_shorter_training_scores_lower(seed_arch):
    # progress factor (2500/40000)^0.25 = 0.5, same noise either way
    short = surrogate_eval(request(seed_arch, iterations=2_500))
    full = surrogate_eval(request(seed_arch, iterations=40_000))
    assert short.top1 < full.top1
    assert 0.5 * full.top1 == pytest.approx(short.top1, abs=0.03)


def test_surrogate_range_on_random_archs():
    rng = random.Random(424242)
    for i in range(200):
        resp = surrogate_eval(request(random_arch(rng), trial_id=i, seed=i))
        assert resp.ok
        assert 0.0 <= resp.top1 <= 1.0


def test_surrogate_rejects_nonpositive_samples():
    resp = surrogate_eval(request(tiny_arch(), samples=0))
    assert not resp.ok
    assert "eval_samples" in resp.error


def test_surrogate_evaluator_facade(seed_arch):
    ev = SurrogateEvaluator()
    assert ev.parallel_safe
    assert ev.evaluate(request(seed_arch)) == surrogate_eval(request(seed_arch))
    ev.close()


# ---------------------------------------------------------------------------
# wire format


def test_request_round_trips_through_wire(seed_arch):
    req = EvalRequest(
        trial_id=41,
        arch=seed_arch,
        solver=SolverSettings(optimizer="adam", lr=5e-4, batch=50, iterations=8000),
        eval_samples=250,
        seed=9,
    )
    wire = request_to_wire(req)
    json.dumps(wire)  # must be plain JSON
    assert request_from_wire(wire) == req


def test_response_from_wire_accepts_result():
    doc = {"result": {"trial_id": 3, "top1": 0.91, "evaluated_samples": 100}}
    resp = response_from_wire(doc, 3)
    assert resp == EvalResponse(trial_id=3, top1=0.91, evaluated_samples=100)
    assert resp.ok


def test_response_from_wire_accepts_error():
    doc = {"error": {"trial_id": 5, "message": "diverged"}}
    resp = response_from_wire(doc, 5)
    assert not resp.ok
    assert resp.error == "diverged"


def test_response_from_wire_rejects_wrong_trial():
    doc = {"result": {"trial_id": 4, "top1": 0.5, "evaluated_samples": 10}}
    with pytest.raises(WorkerError):
        response_from_wire(doc, 3)
    with pytest.raises(WorkerError):
        response_from_wire({"error": {"trial_id": 4, "message": "x"}}, 3)


def test_response_from_wire_rejects_bad_top1():
    for top1 in (1.2, -0.1, float("nan"), float("inf")):
        doc = {"result": {"trial_id": 1, "top1": top1, "evaluated_samples": 10}}
        with pytest.raises(WorkerError):
            response_from_wire(doc, 1)


def test_response_from_wire_rejects_bad_samples():
    doc = {"result": {"trial_id": 1, "top1": 0.5, "evaluated_samples": 0}}
    with pytest.raises(WorkerError):
        response_from_wire(doc, 1)


def test_response_from_wire_rejects_unknown_document():
    with pytest.raises(WorkerError):
        response_from_wire({"banana": {}}, 1)


# ---------------------------------------------------------------------------
# worker subprocesses


def test_echo_worker_round_trip():
    with WorkerEvaluator(worker_cmd("echo"), timeout_s=20) as ev:
        for tid in (0, 1, 2):
            resp = ev.evaluate(request(tiny_arch(), trial_id=tid, samples=64))
            assert resp == EvalResponse(trial_id=tid, top1=0.5, evaluated_samples=64)


def test_bad_worker_yields_error_response():
    with WorkerEvaluator(worker_cmd("bad"), timeout_s=20) as ev:
        resp = ev.evaluate(request(tiny_arch(), trial_id=6))
        assert not resp.ok
        assert "outside" in resp.error


def test_dying_worker_yields_error_not_exception():
    with WorkerEvaluator(worker_cmd("dying"), timeout_s=20) as ev:
        for tid in (0, 1):
            resp = ev.evaluate(request(tiny_arch(), trial_id=tid))
            assert not resp.ok
            assert "exited" in resp.error


def test_flaky_worker_is_respawned_between_requests():
    # answers once then exits; once the exit is visible, checkout respawns
    import time

    with WorkerEvaluator(worker_cmd("flaky"), timeout_s=20) as ev:
        for tid in range(3):
            resp = ev.evaluate(request(tiny_arch(), trial_id=tid))
            assert resp.ok
            assert resp.top1 == 0.25
            time.sleep(0.3)


def test_slow_worker_times_out():
    with WorkerEvaluator(worker_cmd("slow"), timeout_s=0.3) as ev:
        resp = ev.evaluate(request(tiny_arch(), trial_id=0))
        assert not resp.ok
        assert "timed out" in resp.error


def test_bad_handshake_fails_fast():
    cmd = [sys.executable, "-c", "print('nonsense')"]
    with pytest.raises(WorkerError):
        WorkerEvaluator(cmd, timeout_s=5)


def test_missing_worker_command_fails_fast():
    with pytest.raises(WorkerError):
        WorkerEvaluator(["/nonexistent/worker-binary"], timeout_s=5)


def test_closed_evaluator_refuses_work():
    ev = WorkerEvaluator(worker_cmd("echo"), timeout_s=20)
    ev.close()
    with pytest.raises(WorkerError):
        ev.evaluate(request(tiny_arch()))


def test_worker_pool_serves_parallel_requests():
    import concurrent.futures

    with WorkerEvaluator(worker_cmd("echo"), timeout_s=20, procs=3) as ev:
        with concurrent.futures.ThreadPoolExecutor(max_workers=3) as pool:
            futs = [
                pool.submit(ev.evaluate, request(tiny_arch(), trial_id=t))
                for t in range(9)
            ]
            for t, fut in enumerate(futs):
                resp = fut.result(timeout=30)
                assert resp.ok and resp.trial_id == t
