from .gradcheck import GradCheckReport, grad_check
from .optim import OptimizerConfig, clip_gradients, optimizer_step
from .params import (
    ParamStore,
    checkpoint_checksum,
    load_checkpoint,
    save_checkpoint,
)
from .tensor import (
    GradTape,
    Tensor,
    add,
    backward,
    concat,
    dropout,
    forward_op,
    lrelu,
    matmul,
    mul,
    sigmoid,
    sub,
    sum_of_squares,
    take_columns,
    tanh,
)

__all__ = [
    "GradCheckReport",
    "GradTape",
    "OptimizerConfig",
    "ParamStore",
    "Tensor",
    "add",
    "backward",
    "checkpoint_checksum",
    "clip_gradients",
    "concat",
    "dropout",
    "forward_op",
    "grad_check",
    "load_checkpoint",
    "lrelu",
    "matmul",
    "mul",
    "optimizer_step",
    "save_checkpoint",
    "sigmoid",
    "sub",
    "sum_of_squares",
    "take_columns",
    "tanh",
]
