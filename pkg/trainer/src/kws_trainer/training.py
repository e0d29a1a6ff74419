"""Train one candidate per request and measure its TOP-1 accuracy.

Determinism: the request seed drives torch's RNG, the batch sampler, and
the evaluation-clip draw; computation stays single-threaded. Repeating a
request therefore reproduces its accuracy bit for bit on the same machine.

Split choice: search-length requests are scored on the validation split;
requests at or beyond the full-training iteration count (the engine's
fine-tune pass) are scored on the test split.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .features import Dataset
from .model import build_model
from .protocol import TrainRequest

FULL_TRAINING_ITERATIONS = 40_000


class TrainingError(RuntimeError):
    """Raised when a request cannot be trained or evaluated."""


def _eval_split(dataset: Dataset, iterations: int, full_iterations: int):
    name = "testing" if iterations >= full_iterations else "validation"
    if name not in dataset.splits:
        name = "validation" if "validation" in dataset.splits else "training"
    return dataset.split(name)


def _make_optimizer(model: nn.Module, solver) -> torch.optim.Optimizer:
    if solver.optimizer == "sgd":
        return torch.optim.SGD(model.parameters(), lr=solver.lr)
    return torch.optim.Adam(model.parameters(), lr=solver.lr)


def run_request(
    req: TrainRequest,
    dataset: Dataset,
    device: str = "cpu",
    full_iterations: int = FULL_TRAINING_ITERATIONS,
):
    """Returns (top1, evaluated_samples) for one request."""
    torch.manual_seed(req.seed)
    torch.set_num_threads(1)

    train_x, train_y = dataset.split("training")
    if len(train_x) < 1:
        raise TrainingError("training split is empty")
    model = build_model(req.arch).to(device)
    optimizer = _make_optimizer(model, req.solver)
    scheduler = None
    if req.solver.decay_every is not None:
        scheduler = torch.optim.lr_scheduler.StepLR(
            optimizer, step_size=req.solver.decay_every, gamma=req.solver.decay_factor
        )
    loss_fn = nn.CrossEntropyLoss()
    x_all = torch.from_numpy(train_x).to(device)
    y_all = torch.from_numpy(train_y).to(device)
    sampler = torch.Generator().manual_seed(req.seed)

    model.train()
    for _step in range(req.solver.iterations):
        idx = torch.randint(len(x_all), (req.solver.batch,), generator=sampler)
        optimizer.zero_grad()
        loss = loss_fn(model(x_all[idx]), y_all[idx])
        if not torch.isfinite(loss):
            raise TrainingError(f"training diverged at step {_step}")
        loss.backward()
        optimizer.step()
        if scheduler is not None:
            scheduler.step()

    eval_x, eval_y = _eval_split(dataset, req.solver.iterations, full_iterations)
    rng = np.random.default_rng(req.seed)
    if req.eval_samples <= len(eval_x):
        chosen = rng.choice(len(eval_x), size=req.eval_samples, replace=False)
    else:
        chosen = rng.choice(len(eval_x), size=req.eval_samples, replace=True)

    model.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, len(chosen), 256):
            batch = chosen[start : start + 256]
            logits = model(torch.from_numpy(eval_x[batch]).to(device))
            pred = logits.argmax(dim=1).cpu().numpy()
            correct += int((pred == eval_y[batch]).sum())
    return correct / len(chosen), len(chosen)
