from .loop import (
    SkelTNetPlan,
    StagePlan,
    TrainConfig,
    TrainLog,
    TrainLogRecord,
    initialize_model,
    read_train_log,
    train_skel_tnet,
    train_stage,
)
from .losses import ConvergingLossConfig, converging_loss, sampling_loss, sequence_l2
from .noise import add_gaussian_noise
from .presets import (
    FRAME_PERIOD_MS,
    LONG_HORIZON_MS,
    SHORT_HORIZON_MS,
    horizon_frames,
    reference_model_config,
    reference_train_config,
    smoke_model_config,
    smoke_pipeline_plan,
    smoke_train_config,
)

__all__ = [
    "ConvergingLossConfig",
    "FRAME_PERIOD_MS",
    "LONG_HORIZON_MS",
    "SHORT_HORIZON_MS",
    "SkelTNetPlan",
    "StagePlan",
    "TrainConfig",
    "TrainLog",
    "TrainLogRecord",
    "add_gaussian_noise",
    "converging_loss",
    "horizon_frames",
    "initialize_model",
    "read_train_log",
    "reference_model_config",
    "reference_train_config",
    "sampling_loss",
    "sequence_l2",
    "smoke_model_config",
    "smoke_pipeline_plan",
    "smoke_train_config",
    "train_skel_tnet",
    "train_stage",
]
