"""Stock configurations.

``reference_*`` carry the published full-scale settings: branch widths
(64, 128, 64), GRU with 1024 units and a (512, width) head, merge stack
(1024, 512, 512, width), SGD 0.01 for the branched model, SGD 5e-5 for the
recurrent one, Adam 0.01 for the merge, loss weights alpha=1 / beta=0.1,
LReLU slope 0.2, dropout 0.2, blend weights initialized at 0.5.

``smoke_*`` shrink widths and iteration counts so directional experiments
finish in minutes on a laptop; learning rates are retuned for the smaller
models so 200 iterations make measurable progress.
"""

from __future__ import annotations

from ..models import CRnnConfig, MergeConfig, SkelNetConfig
from ..numerics import OptimizerConfig
from .loop import SkelTNetPlan, StagePlan, TrainConfig

FRAME_PERIOD_MS = 40.0
LONG_HORIZON_MS = 1000
SHORT_HORIZON_MS = 400


def horizon_frames(horizon_ms, period_ms=FRAME_PERIOD_MS):
    if horizon_ms % period_ms:
        raise ValueError(
            f"horizon {horizon_ms} ms is not a multiple of the frame period {period_ms} ms"
        )
    return int(round(horizon_ms / period_ms))


def reference_model_config(kind, scheme=None, width=None):
    if kind == "skelnet":
        return SkelNetConfig(scheme=scheme)
    if kind == "crnn":
        return CRnnConfig(width=width)
    if kind == "merge":
        return MergeConfig(width=width)
    raise ValueError(f"unknown model kind {kind!r}")


def reference_train_config(kind, horizon, seed=0, iterations=10_000, **overrides):
    base = {
        "skelnet": dict(loss="sampling", optimizer=OptimizerConfig("sgd", 0.01)),
        "crnn": dict(loss="converging", optimizer=OptimizerConfig("sgd", 5e-5), clip_norm=5.0),
        "merge": dict(loss="l2", optimizer=OptimizerConfig("adam", 0.01)),
    }[kind]
    base.update(horizon=horizon, seed=seed, iterations=iterations)
    base.update(overrides)
    return TrainConfig(**base)


def smoke_model_config(kind, scheme=None, width=None, seed_length=1,
                       activation="lrelu", dropout_rate=0.2, use_residual=True):
    if kind == "skelnet":
        return SkelNetConfig(
            scheme=scheme,
            branch_dims=(16, 32, 16),
            activation=activation,
            dropout_rate=dropout_rate,
            use_residual=use_residual,
            seed_length=seed_length,
        )
    if kind == "crnn":
        return CRnnConfig(width=width, gru_units=32, head_dims=(32, width),
                          dropout_rate=dropout_rate, use_residual=use_residual)
    if kind == "merge":
        return MergeConfig(width=width, hidden_dims=(64, 32, width),
                           dropout_rate=dropout_rate, use_residual=use_residual)
    raise ValueError(f"unknown model kind {kind!r}")


def smoke_train_config(kind, horizon, seed=0, iterations=200, **overrides):
    # free-running unrolls from random init explode without clipping at
    # these learning rates, so the smoke presets clip everything at norm 5
    base = {
        "skelnet": dict(loss="sampling", optimizer=OptimizerConfig("sgd", 0.02), clip_norm=5.0),
        "crnn": dict(loss="converging", optimizer=OptimizerConfig("sgd", 0.05), clip_norm=5.0),
        "merge": dict(loss="l2", optimizer=OptimizerConfig("adam", 0.01), clip_norm=5.0),
    }[kind]
    base.update(horizon=horizon, seed=seed, iterations=iterations, batch_size=16)
    base.update(overrides)
    return TrainConfig(**base)


def smoke_pipeline_plan(scheme, width, horizon, seed=0, iterations=200,
                        noise_variance=0.0):
    return SkelTNetPlan(
        skelnet=StagePlan(
            smoke_model_config("skelnet", scheme=scheme),
            smoke_train_config("skelnet", horizon, seed=seed, iterations=iterations,
                               noise_variance=noise_variance),
        ),
        crnn=StagePlan(
            smoke_model_config("crnn", width=width),
            smoke_train_config("crnn", horizon, seed=seed, iterations=iterations,
                               noise_variance=noise_variance),
        ),
        merge=StagePlan(
            smoke_model_config("merge", width=width),
            smoke_train_config("merge", horizon, seed=seed, iterations=iterations,
                               noise_variance=noise_variance),
        ),
    )
