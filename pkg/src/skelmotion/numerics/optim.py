"""SGD and Adam updates over a ParamStore."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericFault


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "sgd"
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def clip_gradients(store, max_norm):
    """Scale all gradients so their global L2 norm is at most max_norm."""
    total_sq = sum(float(np.sum(e.grad * e.grad)) for _, e in store.entries())
    total = float(np.sqrt(total_sq))
    if total > max_norm:
        scale = max_norm / total
        for _, entry in store.entries():
            entry.grad *= scale
    return total


def optimizer_step(store, config):
    """Apply one update; gradient slots are zeroed afterwards.

    A non-finite gradient aborts before any parameter is touched.
    """
    for name, entry in store.entries():
        if not np.all(np.isfinite(entry.grad)):
            raise NumericFault(f"non-finite gradient for {name!r}; step aborted")
    lr = config.learning_rate
    if config.kind == "sgd":
        for _, entry in store.entries():
            entry.value = type(entry.value)(entry.value.data - lr * entry.grad)
    else:
        b1, b2, eps = config.beta1, config.beta2, config.epsilon
        for _, entry in store.entries():
            state = entry.state
            if "m" not in state:
                state["m"] = np.zeros_like(entry.grad)
                state["v"] = np.zeros_like(entry.grad)
                state["t"] = 0
            state["t"] += 1
            t = state["t"]
            state["m"] = b1 * state["m"] + (1 - b1) * entry.grad
            state["v"] = b2 * state["v"] + (1 - b2) * entry.grad * entry.grad
            m_hat = state["m"] / (1 - b1**t)
            v_hat = state["v"] / (1 - b2**t)
            entry.value = type(entry.value)(
                entry.value.data - lr * m_hat / (np.sqrt(v_hat) + eps)
            )
    store.zero_gradients()
    return store
