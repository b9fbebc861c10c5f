"""Real-time certification of neural network training.

Closed-form least-squares projections give computable upper bounds on the
best training loss a layered network could reach; comparing the live loss
against those bounds classifies every epoch as red (ineffective), yellow
(caution), or green (effective) while training runs.
"""

from .bounds import (
    CheckpointSet,
    CloudRegion,
    InfeasibleTargetError,
    YesBoundSet,
    Yes0Trace,
    classify_region,
    guidance_distance,
    least_squares_map,
    yes0_trace,
    yes_bound_set,
    yes_k_bound,
)
from .config import (
    ConfigError,
    ControlCommand,
    SessionConfig,
    config_from_dict,
    config_to_dict,
    control_from_dict,
    default_config_for_task,
)
from .linalg import NumericalError, ShapeError, pinv, svd
from .mlp import (
    ActivationKind,
    LrSchedule,
    MlpParams,
    TrainingFault,
    backward,
    forward,
    init_optimizer,
    init_params,
    loss_mse,
    optimizer_step,
)
from .session import EpochRecord, RunResult, run_session
from .tasks import Dataset, decode_label, encode_label

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "CheckpointSet",
    "CloudRegion",
    "ConfigError",
    "ControlCommand",
    "Dataset",
    "EpochRecord",
    "InfeasibleTargetError",
    "LrSchedule",
    "MlpParams",
    "NumericalError",
    "RunResult",
    "SessionConfig",
    "ShapeError",
    "TrainingFault",
    "YesBoundSet",
    "Yes0Trace",
    "backward",
    "classify_region",
    "config_from_dict",
    "config_to_dict",
    "control_from_dict",
    "decode_label",
    "default_config_for_task",
    "encode_label",
    "forward",
    "guidance_distance",
    "init_optimizer",
    "init_params",
    "least_squares_map",
    "loss_mse",
    "optimizer_step",
    "pinv",
    "run_session",
    "svd",
    "yes0_trace",
    "yes_bound_set",
    "yes_k_bound",
]
