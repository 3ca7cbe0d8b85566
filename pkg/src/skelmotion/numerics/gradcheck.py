"""Analytic-versus-finite-difference gradient verification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import GradTape, backward


@dataclass
class GradCheckReport:
    tolerance: float
    per_param: dict = field(default_factory=dict)  # name -> max relative error

    @property
    def max_error(self):
        return max(self.per_param.values(), default=0.0)

    @property
    def passed(self):
        return all(err < self.tolerance for err in self.per_param.values())

    def __str__(self):
        lines = [f"grad_check tolerance={self.tolerance:g} passed={self.passed}"]
        for name, err in sorted(self.per_param.items()):
            lines.append(f"  {name}: max_rel_err={err:.3e}")
        return "\n".join(lines)


def grad_check(closure, params, tolerance=1e-5, step=1e-5):
    """Compare backward() output against central finite differences.

    ``closure`` must map the current store values to a scalar loss Tensor
    deterministically (dropout off or seed-fixed); it is called repeatedly
    while entries are perturbed one scalar at a time.
    """
    first = closure().item()
    second = closure().item()
    if first != second:
        raise RuntimeError(
            f"closure is not deterministic: {first!r} != {second!r}"
        )

    params.zero_gradients()
    with GradTape() as tape:
        loss = closure()
    backward(tape, loss, params)
    analytic = {name: entry.grad.copy() for name, entry in params.entries()}
    params.zero_gradients()

    report = GradCheckReport(tolerance=tolerance)
    for name, entry in params.entries():
        base = entry.value.numpy()
        flat = base.reshape(-1)
        worst = 0.0
        for i in range(flat.size):
            for sign, slot in ((+1.0, 0), (-1.0, 1)):
                bumped = base.copy().reshape(-1)
                bumped[i] += sign * step
                params.set_value(name, bumped.reshape(base.shape))
                if slot == 0:
                    up = closure().item()
                else:
                    down = closure().item()
            numeric = (up - down) / (2.0 * step)
            a = float(analytic[name].reshape(-1)[i])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
        params.set_value(name, base)
        report.per_param[name] = worst
    return report
