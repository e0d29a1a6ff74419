"""Cost-aware architecture search for small convolutional networks."""

__version__ = "0.1.0"

from .archspec import (  # noqa: F401
    Assignment,
    ConvLayerSpec,
    NetworkArch,
    ParamDomain,
    ParamId,
    SearchSpace,
    SolverSettings,
    TensorShape,
    apply_assignment,
    derive_space,
    freeze_param,
    validate_arch,
)
from .costmodel import LayerCost, NetworkCost, layer_ops, layer_params, network_cost, out_shape  # noqa: F401
from .engine import (  # noqa: F401
    ExperimentConfig,
    PhaseSpec,
    Trial,
    TrialLog,
    load_config,
    resume,
    run_experiment,
    trials_from_records,
)
from .evaluator import EvalRequest, EvalResponse, SurrogateEvaluator, WorkerEvaluator  # noqa: F401
from .pareto import ScoredPoint, dominates, frontier  # noqa: F401
