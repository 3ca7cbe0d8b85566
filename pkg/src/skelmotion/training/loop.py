"""Minibatch training for the three model kinds and the two-stage pipeline:
the branched predictor and the recurrent model train first, then the
merging network trains on their frozen rollouts."""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from ..data import sample_train_batch
from ..errors import DataError, NumericFault, TrainAbort
from ..numerics import (
    GradTape,
    OptimizerConfig,
    Tensor,
    backward,
    clip_gradients,
    optimizer_step,
)
from ..models import CRnnModel, MergeModel, SkelNetModel, save_model
from .losses import ConvergingLossConfig, converging_loss, sampling_loss, sequence_l2
from .noise import add_gaussian_noise

LOSS_KINDS = ("sampling", "converging", "l2")

# Deterministic RNG stream tags, combined with the config seed.
_STREAM_INIT = 10
_STREAM_WINDOWS = 11
_STREAM_NOISE = 12
_STREAM_DROPOUT = 13


@dataclass(frozen=True)
class TrainConfig:
    horizon: int
    iterations: int = 200
    batch_size: int = 16
    seed: int = 0
    loss: str = "sampling"
    alpha: float = 1.0
    beta: float = 0.1
    noise_variance: float = 0.0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed_length: int = 1
    clip_norm: float = 0.0  # 0 disables clipping
    checkpoint_interval: int = 0  # 0 disables periodic checkpoints
    log_wall_time: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be non-negative")
        if self.loss not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss!r}")
        if self.seed_length < 1:
            raise ValueError("seed_length must be positive")

    def to_dict(self):
        d = {
            "horizon": self.horizon,
            "iterations": self.iterations,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "loss": self.loss,
            "alpha": self.alpha,
            "beta": self.beta,
            "noise_variance": self.noise_variance,
            "optimizer": {
                "kind": self.optimizer.kind,
                "learning_rate": self.optimizer.learning_rate,
                "beta1": self.optimizer.beta1,
                "beta2": self.optimizer.beta2,
                "epsilon": self.optimizer.epsilon,
            },
            "seed_length": self.seed_length,
            "clip_norm": self.clip_norm,
            "checkpoint_interval": self.checkpoint_interval,
            "log_wall_time": self.log_wall_time,
        }
        return d


@dataclass
class TrainLogRecord:
    iteration: int
    loss: float
    l_pos: float = None
    l_neg: float = None
    wall_ms: float = 0.0


@dataclass
class TrainLog:
    seed: int
    config: dict
    records: list = field(default_factory=list)

    def append(self, record):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("iteration indices must increase")
        if not np.isfinite(record.loss):
            raise NumericFault(f"non-finite loss at iteration {record.iteration}")
        self.records.append(record)

    def write(self, path):
        lines = [
            "# skelmotion train log v1",
            f"seed={self.seed}",
            "config=" + json.dumps(self.config, sort_keys=True, separators=(",", ":")),
            "iteration,loss,l_pos,l_neg,wall_ms",
        ]
        for r in self.records:
            pos = "" if r.l_pos is None else repr(r.l_pos)
            neg = "" if r.l_neg is None else repr(r.l_neg)
            lines.append(f"{r.iteration},{r.loss!r},{pos},{neg},{r.wall_ms!r}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def read_train_log(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != "# skelmotion train log v1":
        raise DataError(f"{path}: not a train log")
    seed = int(lines[1].split("=", 1)[1])
    config = json.loads(lines[2].split("=", 1)[1])
    log = TrainLog(seed=seed, config=config)
    for ln in lines[4:]:
        if not ln:
            continue
        it, loss, pos, neg, wall = ln.split(",")
        log.append(
            TrainLogRecord(
                iteration=int(it),
                loss=float(loss),
                l_pos=float(pos) if pos else None,
                l_neg=float(neg) if neg else None,
                wall_ms=float(wall),
            )
        )
    return log


def initialize_model(kind, model_config, seed):
    if kind == "skelnet":
        return SkelNetModel.initialize(model_config, seed)
    if kind == "crnn":
        return CRnnModel.initialize(model_config, seed)
    if kind == "merge":
        return MergeModel.initialize(model_config, seed)
    raise ValueError(f"unknown model kind {kind!r}")


def _frames_to_tensors(block):
    """(steps, batch, width) array -> list of (batch, width) tensors."""
    return [Tensor(block[t]) for t in range(block.shape[0])]


def _stage_rollouts(stage1, seeds_t, horizon):
    """Frozen stage-1 generations for the merge stage; eval mode, no tape."""
    skel_model, crnn_model = stage1
    a = skel_model.free_run(seeds_t, horizon, training=False)
    b = crnn_model.free_run(seeds_t, horizon, training=False)
    return a, b


def train_stage(kind, split, model_config, train_config, out_dir=None, stage1=None):
    """Run one training stage; returns (model, TrainLog).

    ``stage1`` must carry the frozen (skelnet, crnn) pair when kind is
    "merge". Checkpoints go to ``out_dir`` at the configured interval and at
    the end; a numeric fault raises TrainAbort naming the iteration and the
    last checkpoint written.
    """
    cfg = train_config
    if kind == "merge":
        if stage1 is None:
            raise DataError("merge stage requires the trained stage-1 models")
        if cfg.loss != "l2":
            raise ValueError("merge stage trains with the plain sequence loss ('l2')")
    elif cfg.loss == "l2":
        raise ValueError(f"loss 'l2' is reserved for the merge stage, not {kind!r}")
    model = initialize_model(kind, model_config, (cfg.seed, _STREAM_INIT))
    log = TrainLog(seed=cfg.seed, config={"kind": kind, **cfg.to_dict()})
    conv_cfg = ConvergingLossConfig(cfg.alpha, cfg.beta)
    last_checkpoint = None

    def emit_checkpoint(tag):
        nonlocal last_checkpoint
        if out_dir is None:
            return None
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{kind}{tag}.ckpt")
        save_model(model, path, run_config=log.config)
        last_checkpoint = path
        return path

    for it in range(cfg.iterations):
        t0 = time.perf_counter()
        rng_w = np.random.default_rng((cfg.seed, _STREAM_WINDOWS, it))
        seeds, truth = sample_train_batch(
            split.train_pre, cfg.batch_size, cfg.seed_length, cfg.horizon, rng_w
        )
        if cfg.noise_variance > 0:
            seeds = add_gaussian_noise(seeds, cfg.noise_variance, (cfg.seed, _STREAM_NOISE, it, 0))
            teacher = add_gaussian_noise(
                truth[: cfg.horizon - 1], cfg.noise_variance, (cfg.seed, _STREAM_NOISE, it, 1)
            )
        else:
            teacher = truth[: cfg.horizon - 1]
        seeds_t = _frames_to_tensors(seeds)
        truth_t = _frames_to_tensors(truth)
        teacher_t = _frames_to_tensors(teacher)
        drop_seed = (cfg.seed, _STREAM_DROPOUT, it)
        try:
            l_pos_v = l_neg_v = None
            with GradTape() as tape:
                if kind == "merge":
                    a, b = _stage_rollouts(stage1, seeds_t, cfg.horizon)
                    merged = model.merge(a, b, training=True, seed=drop_seed)
                    loss = sequence_l2(merged, truth_t)
                elif cfg.loss == "sampling":
                    loss = sampling_loss(
                        model, seeds_t, truth_t, cfg.horizon, training=True, seed=drop_seed
                    )
                elif cfg.loss == "converging":
                    loss, l_pos, l_neg = converging_loss(
                        model, seeds_t, truth_t, cfg.horizon, conv_cfg,
                        training=True, seed=drop_seed, teacher_inputs=teacher_t,
                    )
                    l_pos_v, l_neg_v = l_pos.item(), l_neg.item()
                else:
                    raise ValueError(f"loss {cfg.loss!r} not valid for kind {kind!r}")
            loss_v = loss.item()
            backward(tape, loss, model.store)
            if cfg.clip_norm > 0:
                clip_gradients(model.store, cfg.clip_norm)
            optimizer_step(model.store, cfg.optimizer)
        except NumericFault as fault:
            raise TrainAbort(
                f"{kind} training hit a numeric fault at iteration {it}: {fault}",
                iteration=it,
                last_checkpoint=last_checkpoint,
            ) from fault
        wall = (time.perf_counter() - t0) * 1000.0 if cfg.log_wall_time else 0.0
        log.append(TrainLogRecord(it, loss_v, l_pos_v, l_neg_v, wall))
        if cfg.checkpoint_interval and (it + 1) % cfg.checkpoint_interval == 0:
            emit_checkpoint(f"_iter{it + 1:06d}")
    emit_checkpoint("")
    if out_dir is not None:
        log.write(os.path.join(out_dir, f"{kind}.log"))
    return model, log


@dataclass(frozen=True)
class StagePlan:
    model_config: object
    train: TrainConfig


@dataclass(frozen=True)
class SkelTNetPlan:
    skelnet: StagePlan
    crnn: StagePlan
    merge: StagePlan


def train_skel_tnet(split, plan, out_dir=None):
    """Two-stage pipeline training; returns ((skel, crnn, merge), logs).

    Stage 1 trains the branched and recurrent models independently; stage 2
    freezes them and fits the merging network on their rollouts.
    """
    skel_model, skel_log = train_stage(
        "skelnet", split, plan.skelnet.model_config, plan.skelnet.train, out_dir
    )
    crnn_model, crnn_log = train_stage(
        "crnn", split, plan.crnn.model_config, plan.crnn.train, out_dir
    )
    merge_model, merge_log = train_stage(
        "merge", split, plan.merge.model_config, plan.merge.train, out_dir,
        stage1=(skel_model, crnn_model),
    )
    return (skel_model, crnn_model, merge_model), (skel_log, crnn_log, merge_log)
