"""Blend-and-refine network combining two predicted sequences into one.

Two trainable scalar weights mix the inputs frame by frame; the blend then
passes through a feed-forward stack with a residual connection. ``average``
and the passthrough modes implement the degenerate wirings used by the
pipeline ablations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..numerics import ParamStore, Tensor, add, dropout, lrelu, matmul, mul
from .skelnet import glorot, linear_param_count

MERGE_MODES = ("network", "average", "passthrough_skel", "passthrough_crnn")


@dataclass(frozen=True)
class MergeConfig:
    width: int
    hidden_dims: tuple = None  # defaults to (1024, 512, 512, width)
    mode: str = "network"
    dropout_rate: float = 0.2
    lrelu_slope: float = 0.2
    use_residual: bool = True
    blend_init: float = 0.5

    def __post_init__(self):
        if self.mode not in MERGE_MODES:
            raise ValueError(f"unknown merge mode {self.mode!r}")
        dims = (1024, 512, 512, self.width) if self.hidden_dims is None else tuple(self.hidden_dims)
        if dims[-1] != self.width:
            raise ValueError(
                f"last stack dimension {dims[-1]} must equal frame width {self.width}"
            )
        object.__setattr__(self, "hidden_dims", dims)

    def to_dict(self):
        return {
            "width": self.width,
            "hidden_dims": list(self.hidden_dims),
            "mode": self.mode,
            "dropout_rate": self.dropout_rate,
            "lrelu_slope": self.lrelu_slope,
            "use_residual": self.use_residual,
            "blend_init": self.blend_init,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            width=d["width"],
            hidden_dims=tuple(d["hidden_dims"]),
            mode=d["mode"],
            dropout_rate=d["dropout_rate"],
            lrelu_slope=d["lrelu_slope"],
            use_residual=d["use_residual"],
            blend_init=d["blend_init"],
        )


def merge_param_count(config):
    if config.mode != "network":
        return 0
    return 2 + linear_param_count((config.width,) + config.hidden_dims)


class MergeModel:
    kind = "merge"

    def __init__(self, config, store):
        self.config = config
        self.store = store

    @classmethod
    def initialize(cls, config, seed):
        store = ParamStore()
        if config.mode != "network":
            return cls(config, store)
        rng = np.random.default_rng(seed)
        store.add("blend.w1", np.array(config.blend_init))
        store.add("blend.w2", np.array(config.blend_init))
        dims = (config.width,) + config.hidden_dims
        for li, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
            store.add(f"stack.w{li}", glorot(rng, a, b))
            store.add(f"stack.b{li}", np.zeros(b))
        return cls(config, store)

    def param_count(self):
        return self.store.total_parameter_count()

    def merge(self, seq_a, seq_b, training=False, seed=()):
        """Frame-wise combination of two equal-length sequences."""
        if len(seq_a) != len(seq_b):
            raise ShapeError(f"sequence lengths differ: {len(seq_a)} vs {len(seq_b)}")
        for a, b in zip(seq_a, seq_b):
            if a.shape != b.shape:
                raise ShapeError(f"frame shapes differ: {a.shape} vs {b.shape}")
        mode = self.config.mode
        if mode == "passthrough_skel":
            return list(seq_a)
        if mode == "passthrough_crnn":
            return list(seq_b)
        if mode == "average":
            half = Tensor(0.5)
            return [mul(add(a, b), half) for a, b in zip(seq_a, seq_b)]
        out = []
        cfg = self.config
        n = len(cfg.hidden_dims)
        for t, (a, b) in enumerate(zip(seq_a, seq_b)):
            u = add(mul(self.store["blend.w1"], a), mul(self.store["blend.w2"], b))
            x = u
            for li in range(n):
                x = add(matmul(x, self.store[f"stack.w{li}"]), self.store[f"stack.b{li}"])
                if li < n - 1:
                    x = lrelu(x, cfg.lrelu_slope)
                    x = dropout(x, cfg.dropout_rate, training, tuple(seed) + (t, li))
            if cfg.use_residual:
                x = add(x, u)
            out.append(x)
        return out

    def to_meta(self):
        return {"kind": self.kind, "config": self.config.to_dict()}
