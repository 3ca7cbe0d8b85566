from .crnn import CRnnConfig, CRnnModel, crnn_param_count, gru_cell
from .io import load_model, save_model
from .merge import MERGE_MODES, MergeConfig, MergeModel, merge_param_count
from .skelnet import (
    SkelNetConfig,
    SkelNetModel,
    linear_param_count,
    skelnet_param_count,
)

__all__ = [
    "CRnnConfig",
    "CRnnModel",
    "MERGE_MODES",
    "MergeConfig",
    "MergeModel",
    "SkelNetConfig",
    "SkelNetModel",
    "crnn_param_count",
    "gru_cell",
    "linear_param_count",
    "load_model",
    "merge_param_count",
    "save_model",
    "skelnet_param_count",
]
