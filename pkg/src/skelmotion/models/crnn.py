"""Single-GRU sequence model with a small feed-forward head and a residual
connection from each step's input frame to its prediction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..numerics import ParamStore, Tensor, add, concat, dropout, lrelu, matmul, mul, sigmoid, tanh
from .skelnet import glorot, linear_param_count

_ONE = Tensor(1.0)
_NEG_ONE = Tensor(-1.0)


@dataclass(frozen=True)
class CRnnConfig:
    width: int
    gru_units: int = 1024
    head_dims: tuple = None  # defaults to (512, width)
    dropout_rate: float = 0.2
    lrelu_slope: float = 0.2
    use_residual: bool = True

    def __post_init__(self):
        if self.gru_units <= 0:
            raise ValueError("gru_units must be positive")
        head = (512, self.width) if self.head_dims is None else tuple(self.head_dims)
        if head[-1] != self.width:
            raise ValueError(
                f"last head dimension {head[-1]} must equal frame width {self.width}"
            )
        object.__setattr__(self, "head_dims", head)

    def to_dict(self):
        return {
            "width": self.width,
            "gru_units": self.gru_units,
            "head_dims": list(self.head_dims),
            "dropout_rate": self.dropout_rate,
            "lrelu_slope": self.lrelu_slope,
            "use_residual": self.use_residual,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            width=d["width"],
            gru_units=d["gru_units"],
            head_dims=tuple(d["head_dims"]),
            dropout_rate=d["dropout_rate"],
            lrelu_slope=d["lrelu_slope"],
            use_residual=d["use_residual"],
        )


def crnn_param_count(config):
    gru = 3 * ((config.width + config.gru_units) * config.gru_units + config.gru_units)
    head = linear_param_count((config.gru_units,) + config.head_dims)
    return gru + head


def gru_cell(x, h_prev, store, prefix="gru"):
    """One gated-recurrent step.

    z = sigmoid(Wz [x, h] + bz); r = sigmoid(Wr [x, h] + br);
    cand = tanh(Wh [x, r * h] + bh); h' = (1 - z) * h + z * cand.
    """
    xh = concat([x, h_prev], axis=1)
    z = sigmoid(add(matmul(xh, store[f"{prefix}.wz"]), store[f"{prefix}.bz"]))
    r = sigmoid(add(matmul(xh, store[f"{prefix}.wr"]), store[f"{prefix}.br"]))
    xrh = concat([x, mul(r, h_prev)], axis=1)
    cand = tanh(add(matmul(xrh, store[f"{prefix}.wh"]), store[f"{prefix}.bh"]))
    keep = add(_ONE, mul(z, _NEG_ONE))  # 1 - z
    return add(mul(keep, h_prev), mul(z, cand))


class CRnnModel:
    kind = "crnn"

    def __init__(self, config, store):
        self.config = config
        self.store = store

    @classmethod
    def initialize(cls, config, seed):
        rng = np.random.default_rng(seed)
        store = ParamStore()
        fan_in = config.width + config.gru_units
        for gate in ("z", "r", "h"):
            store.add(f"gru.w{gate}", glorot(rng, fan_in, config.gru_units))
            store.add(f"gru.b{gate}", np.zeros(config.gru_units))
        dims = (config.gru_units,) + config.head_dims
        for li, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
            store.add(f"head.w{li}", glorot(rng, a, b))
            store.add(f"head.b{li}", np.zeros(b))
        return cls(config, store)

    def param_count(self):
        return self.store.total_parameter_count()

    def initial_state(self, batch):
        return Tensor(np.zeros((batch, self.config.gru_units)))

    def warmup(self, seeds):
        """Run the GRU over all but the last seed frame; returns the state."""
        h = self.initial_state(seeds[0].shape[0])
        for frame in seeds[:-1]:
            h = gru_cell(frame, h, self.store)
        return h

    def _head(self, h, x, training, seed):
        cfg = self.config
        a = h
        n = len(cfg.head_dims)
        for li in range(n):
            a = add(matmul(a, self.store[f"head.w{li}"]), self.store[f"head.b{li}"])
            if li < n - 1:  # hidden layers only; the output layer stays linear
                a = lrelu(a, cfg.lrelu_slope)
                a = dropout(a, cfg.dropout_rate, training, tuple(seed) + (li,))
        if cfg.use_residual:
            a = add(a, x)
        return a

    def unroll(self, h, first_input, horizon, next_inputs, training, seed):
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        x = first_input
        outputs = []
        for t in range(horizon):
            if x.shape[-1] != self.config.width:
                raise ShapeError(
                    f"input width {x.shape[-1]} does not match model width {self.config.width}"
                )
            h = gru_cell(x, h, self.store)
            y = self._head(h, x, training, tuple(seed) + (t,))
            outputs.append(y)
            nxt = next_inputs(t, y)
            if nxt is not None:
                x = nxt
        return outputs

    def free_run(self, seeds, horizon, training=False, seed=(), state=None):
        h = self.warmup(seeds) if state is None else state
        return self.unroll(
            h, seeds[-1], horizon, lambda t, y: y, training, tuple(seed) + (0,)
        )

    def teacher_run(self, seeds, inputs, horizon, training=False, seed=(), state=None):
        if len(inputs) < horizon - 1:
            raise ShapeError(
                f"teacher-forced run over horizon {horizon} needs {horizon - 1} input frames"
            )
        h = self.warmup(seeds) if state is None else state
        return self.unroll(
            h, seeds[-1], horizon,
            lambda t, y: inputs[t] if t < horizon - 1 else None,
            training, tuple(seed) + (1,),
        )

    def paired_runs(self, seeds, inputs, horizon, training=False, seed=()):
        """Both phases branch from one shared hidden-state warmup."""
        h = self.warmup(seeds)
        pos = self.teacher_run(seeds, inputs, horizon, training, seed, state=h)
        neg = self.free_run(seeds, horizon, training, seed, state=h)
        return pos, neg

    def to_meta(self):
        return {"kind": self.kind, "config": self.config.to_dict()}
