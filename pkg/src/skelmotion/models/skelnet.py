"""Branched feed-forward next-frame predictor with residual velocity output.

Each partition group flows through its own stack of hidden layers; the
shared output layer maps the concatenated branch representations back to
frame width. With the ``whole`` scheme this collapses to the plain
feed-forward baseline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from ..numerics import ParamStore, Tensor, add, concat, dropout, lrelu, matmul, take_columns, tanh
from ..skeleton import PartitionScheme

ACTIVATIONS = ("lrelu", "tanh", "none")


def glorot(rng, fan_in, fan_out, shape=None):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out) if shape is None else shape)


def linear_param_count(dims):
    """Weights plus biases along a chain of layer widths."""
    return sum(a * b + b for a, b in zip(dims[:-1], dims[1:]))


def apply_activation(x, kind, slope):
    if kind == "lrelu":
        return lrelu(x, slope)
    if kind == "tanh":
        return tanh(x)
    return x


@dataclass(frozen=True)
class SkelNetConfig:
    scheme: PartitionScheme
    branch_dims: tuple = (64, 128, 64)
    activation: str = "lrelu"
    lrelu_slope: float = 0.2
    dropout_rate: float = 0.2
    use_residual: bool = True
    seed_length: int = 1

    def __post_init__(self):
        if not self.branch_dims:
            raise ValueError("branch_dims must be non-empty")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.seed_length < 1:
            raise ValueError("seed_length must be positive")
        object.__setattr__(self, "branch_dims", tuple(self.branch_dims))

    @property
    def width(self):
        return self.scheme.width

    def to_dict(self):
        return {
            "scheme": {
                "name": self.scheme.name,
                "groups": [[g.name, list(g.indices)] for g in self.scheme.groups],
            },
            "branch_dims": list(self.branch_dims),
            "activation": self.activation,
            "lrelu_slope": self.lrelu_slope,
            "dropout_rate": self.dropout_rate,
            "use_residual": self.use_residual,
            "seed_length": self.seed_length,
        }

    @classmethod
    def from_dict(cls, d):
        from ..skeleton import Group

        scheme = PartitionScheme(
            d["scheme"]["name"],
            tuple(Group(name, tuple(idx)) for name, idx in d["scheme"]["groups"]),
        )
        return cls(
            scheme=scheme,
            branch_dims=tuple(d["branch_dims"]),
            activation=d["activation"],
            lrelu_slope=d["lrelu_slope"],
            dropout_rate=d["dropout_rate"],
            use_residual=d["use_residual"],
            seed_length=d["seed_length"],
        )


def skelnet_param_count(config):
    """Closed-form parameter total for a config."""
    total = 0
    for g in config.scheme.groups:
        dims = (len(g.indices) * config.seed_length,) + config.branch_dims
        total += linear_param_count(dims)
    shared_in = config.branch_dims[-1] * len(config.scheme.groups)
    total += linear_param_count((shared_in, config.width))
    return total


class SkelNetModel:
    kind = "skelnet"

    def __init__(self, config, store):
        self.config = config
        self.store = store

    @classmethod
    def initialize(cls, config, seed):
        rng = np.random.default_rng(seed)
        store = ParamStore()
        for gi, g in enumerate(config.scheme.groups):
            dims = (len(g.indices) * config.seed_length,) + config.branch_dims
            for li, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
                store.add(f"branch{gi}.w{li}", glorot(rng, fan_in, fan_out))
                store.add(f"branch{gi}.b{li}", np.zeros(fan_out))
        shared_in = config.branch_dims[-1] * len(config.scheme.groups)
        store.add("shared.w", glorot(rng, shared_in, config.width))
        store.add("shared.b", np.zeros(config.width))
        return cls(config, store)

    def param_count(self):
        return self.store.total_parameter_count()

    def step(self, history, training=False, seed=()):
        """Predict the next frame from the last ``seed_length`` frames.

        ``history`` is a list of (batch, width) tensors, most recent last.
        """
        cfg = self.config
        if len(history) < cfg.seed_length:
            raise ShapeError(
                f"need {cfg.seed_length} conditioning frames, got {len(history)}"
            )
        recent = history[-cfg.seed_length :]
        for frame in recent:
            if frame.shape[-1] != cfg.width:
                raise ShapeError(
                    f"frame width {frame.shape[-1]} does not match scheme width {cfg.width}"
                )
        outputs = []
        for gi, g in enumerate(self.config.scheme.groups):
            slices = [take_columns(frame, g.indices) for frame in recent]
            x = slices[0] if len(slices) == 1 else concat(slices, axis=1)
            n_layers = len(cfg.branch_dims)
            for li in range(n_layers):
                x = add(matmul(x, self.store[f"branch{gi}.w{li}"]), self.store[f"branch{gi}.b{li}"])
                x = apply_activation(x, cfg.activation, cfg.lrelu_slope)
                x = dropout(x, cfg.dropout_rate, training, tuple(seed) + (gi, li))
            outputs.append(x)
        z = outputs[0] if len(outputs) == 1 else concat(outputs, axis=1)
        y = add(matmul(z, self.store["shared.w"]), self.store["shared.b"])
        if cfg.use_residual:
            y = add(y, recent[-1])
        return y

    def _rollout(self, seeds, horizon, next_inputs, training, seed):
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        history = list(seeds[-self.config.seed_length :])
        if len(history) < self.config.seed_length:
            raise ShapeError(
                f"rollout needs at least {self.config.seed_length} seed frames"
            )
        outputs = []
        for t in range(horizon):
            y = self.step(history, training, tuple(seed) + (t,))
            outputs.append(y)
            nxt = next_inputs(t, y)
            if nxt is not None:
                history = history[1:] + [nxt]
        return outputs

    def free_run(self, seeds, horizon, training=False, seed=()):
        """Autoregressive generation: each step consumes its own prediction."""
        return self._rollout(seeds, horizon, lambda t, y: y, training, tuple(seed) + (0,))

    def teacher_run(self, seeds, inputs, horizon, training=False, seed=()):
        """Feed ground-truth frames: step t+1 consumes inputs[t]."""
        if len(inputs) < horizon - 1:
            raise ShapeError(
                f"teacher-forced run over horizon {horizon} needs {horizon - 1} input frames"
            )
        return self._rollout(
            seeds, horizon, lambda t, y: inputs[t] if t < horizon - 1 else None,
            training, tuple(seed) + (1,),
        )

    def paired_runs(self, seeds, inputs, horizon, training=False, seed=()):
        """Teacher-forced and free-running rollouts from the same seeds."""
        return (
            self.teacher_run(seeds, inputs, horizon, training, seed),
            self.free_run(seeds, horizon, training, seed),
        )

    def to_meta(self):
        return {"kind": self.kind, "config": self.config.to_dict()}
