"""Sequence losses over rollouts.

The two-phase loss weights a teacher-forced (positive) and a free-running
(negative) rollout error: total = alpha * L_pos + beta * L_neg. Both
rollouts branch from one shared warmup and one parameter snapshot, so a
single backward pass sends gradients through both phases.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ShapeError
from ..numerics import Tensor, add, mul, sub, sum_of_squares


@dataclass(frozen=True)
class ConvergingLossConfig:
    alpha: float = 1.0
    beta: float = 0.1

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be non-negative")
        if self.alpha + self.beta <= 0:
            raise ValueError("at least one loss weight must be positive")


def sequence_l2(pred, truth):
    """Mean over frames (and batch rows) of the squared frame distance."""
    if len(pred) != len(truth):
        raise ShapeError(f"sequence lengths differ: {len(pred)} vs {len(truth)}")
    if not pred:
        raise ShapeError("sequences are empty")
    total = None
    batch = pred[0].shape[0]
    for p, y in zip(pred, truth):
        if p.shape != y.shape:
            raise ShapeError(f"frame shapes differ: {p.shape} vs {y.shape}")
        ss = sum_of_squares(sub(p, y))
        total = ss if total is None else add(total, ss)
    return mul(total, Tensor(1.0 / (len(pred) * batch)))


def sampling_loss(model, seeds, truth, horizon, training=False, seed=()):
    """Error of the free-running rollout against the ground truth."""
    if len(truth) < horizon:
        raise ShapeError(f"need {horizon} truth frames, got {len(truth)}")
    outputs = model.free_run(seeds, horizon, training, seed)
    return sequence_l2(outputs, truth[:horizon])


def converging_loss(model, seeds, truth, horizon, config=None,
                    training=False, seed=(), teacher_inputs=None):
    """Weighted two-phase loss; returns (total, l_pos, l_neg) tensors.

    ``teacher_inputs`` overrides the frames fed during the positive phase
    (used for noise injection); it defaults to the truth frames themselves.
    """
    config = config or ConvergingLossConfig()
    if len(truth) < horizon:
        raise ShapeError(f"need {horizon} truth frames, got {len(truth)}")
    inputs = truth[: horizon - 1] if teacher_inputs is None else teacher_inputs
    pos_out, neg_out = model.paired_runs(seeds, inputs, horizon, training, seed)
    l_pos = sequence_l2(pos_out, truth[:horizon])
    l_neg = sequence_l2(neg_out, truth[:horizon])
    total = add(mul(Tensor(config.alpha), l_pos), mul(Tensor(config.beta), l_neg))
    return total, l_pos, l_neg
