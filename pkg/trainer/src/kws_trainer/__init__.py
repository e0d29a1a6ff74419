"""Keyword-spotting trainer worker.

Speaks the evaluator wire protocol over stdin/stdout: builds the requested
convolutional network, trains it on MFCC features (real speech clips or a
synthetic toy set), and reports TOP-1 accuracy. See protocol.py for the
document shapes and serve.py for the loop.
"""

from .protocol import (
    ArchSpec,
    LayerSpec,
    ProtocolError,
    SolverSpec,
    TrainRequest,
    error_doc,
    hello_doc,
    parse_request,
    result_doc,
)
from .features import Dataset, mfcc, prepare_dataset, toy_dataset
from .model import build_model, conv_weight_count, stack_output_shape
from .training import TrainingError, run_request
from .serve import serve

__all__ = [
    "ArchSpec",
    "Dataset",
    "LayerSpec",
    "ProtocolError",
    "SolverSpec",
    "TrainRequest",
    "TrainingError",
    "build_model",
    "conv_weight_count",
    "error_doc",
    "hello_doc",
    "mfcc",
    "parse_request",
    "prepare_dataset",
    "result_doc",
    "run_request",
    "serve",
    "stack_output_shape",
    "toy_dataset",
]
