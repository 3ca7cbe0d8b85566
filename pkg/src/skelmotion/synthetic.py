"""Deterministic synthetic motion: per-group oscillators on a toy skeleton.

Each partition group carries quadrature sine/cosine pairs, so the next
frame is an exact linear function of the current one and the dynamics are
block-diagonal across groups when coupling is zero. Pair frequencies are
drawn once per dataset; phases and amplitudes vary per sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import MotionSequence, make_split
from .errors import DataError
from .skeleton import Joint, SkeletonSpec, scheme_from_spec


@dataclass(frozen=True)
class OscillatorParams:
    freq_hz: tuple = (0.3, 1.5)
    amplitude: tuple = (0.3, 0.8)
    phase: tuple = (0.0, 2.0 * np.pi)


@dataclass(frozen=True)
class SyntheticSpec:
    oscillators: dict = field(default_factory=dict)  # group name -> OscillatorParams
    coupling: float = 0.0
    length: int = 120
    count: int = 12
    seed: int = 0
    period_ms: float = 40.0
    activity: str = "synthetic"

    def __post_init__(self):
        if not 0.0 <= self.coupling <= 1.0:
            raise ValueError("coupling must lie in [0, 1]")
        for params in self.oscillators.values():
            if params.freq_hz[0] <= 0:
                raise ValueError("frequencies must be positive")

    def params_for(self, group):
        return self.oscillators.get(group, OscillatorParams())


def default_skeleton():
    """Toy 11-joint skeleton (33 dims) with all four partition schemes."""
    names = [
        ("root_pos", True),
        ("spine", False),
        ("head", False),
        ("l_shoulder", False),
        ("l_elbow", False),
        ("r_shoulder", False),
        ("r_elbow", False),
        ("l_hip", False),
        ("l_knee", False),
        ("r_hip", False),
        ("r_knee", False),
    ]
    joints = tuple(
        Joint(name, start=3 * i, length=3, is_global=is_global)
        for i, (name, is_global) in enumerate(names)
    )
    five = {
        "l_shoulder": "upper_left_arm",
        "l_elbow": "upper_left_arm",
        "r_shoulder": "upper_right_arm",
        "r_elbow": "upper_right_arm",
        "l_hip": "lower_left_leg",
        "l_knee": "lower_left_leg",
        "r_hip": "lower_right_leg",
        "r_knee": "lower_right_leg",
        "root_pos": "torso",
        "spine": "torso",
        "head": "torso",
    }
    lr = {
        "l_shoulder": "left",
        "l_elbow": "left",
        "l_hip": "left",
        "l_knee": "left",
        "r_shoulder": "right",
        "r_elbow": "right",
        "r_hip": "right",
        "r_knee": "right",
        "root_pos": "torso",
        "spine": "torso",
        "head": "torso",
    }
    ud = {
        "l_shoulder": "arms",
        "l_elbow": "arms",
        "r_shoulder": "arms",
        "r_elbow": "arms",
        "l_hip": "legs",
        "l_knee": "legs",
        "r_hip": "legs",
        "r_knee": "legs",
        "root_pos": "torso",
        "spine": "torso",
        "head": "torso",
    }
    return SkeletonSpec(
        joints, group_maps={"five_part": five, "lr_three": lr, "ud_three": ud}
    )


_MIN_FREQ_GAP_HZ = 0.02


def _group_plan(scheme, spec, seed):
    """Per-dataset pair layout: (group, dim pairs, leftover dim, frequencies).

    Frequencies are rejection-sampled to keep a minimum pairwise gap, so
    oscillators in different groups decorrelate over a few hundred seconds.
    """
    rng = np.random.default_rng((seed, 0))
    plan = []
    taken = []

    def draw(lo, hi):
        for _ in range(200):
            f = float(rng.uniform(lo, hi))
            if all(abs(f - g) >= _MIN_FREQ_GAP_HZ for g in taken):
                taken.append(f)
                return f
        taken.append(f)  # range too narrow for spacing; accept the last draw
        return f

    for group in scheme.groups:
        dims = list(group.indices)
        pairs = [(dims[2 * k], dims[2 * k + 1]) for k in range(len(dims) // 2)]
        leftover = dims[-1] if len(dims) % 2 else None
        params = spec.params_for(group.name)
        freqs = np.array([draw(*params.freq_hz) for _ in pairs])
        plan.append((group.name, pairs, leftover, freqs, params))
    shared_freq = draw(0.3, 1.5)
    return plan, shared_freq


def generate_synthetic(spec, skeleton, still_threshold=1e-4):
    """Build a DatasetSplit of oscillator sequences; 80/20 split by sequence."""
    try:
        scheme = scheme_from_spec(skeleton, "five_part")
    except DataError:
        raise DataError("synthetic generation requires a five_part scheme") from None
    plan, shared_freq = _group_plan(scheme, spec, spec.seed)
    dt = spec.period_ms / 1000.0
    t = np.arange(spec.length) * dt
    sequences = []
    for s in range(spec.count):
        rng = np.random.default_rng((spec.seed, 1, s))
        frames = np.zeros((spec.length, skeleton.total_dim))
        shared_phase = float(rng.uniform(0.0, 2.0 * np.pi))
        shared_sin = np.sin(2.0 * np.pi * shared_freq * t + shared_phase)
        shared_cos = np.cos(2.0 * np.pi * shared_freq * t + shared_phase)
        for _, pairs, leftover, freqs, params in plan:
            first_arg = None
            for k, (di, dj) in enumerate(pairs):
                amp = float(rng.uniform(params.amplitude[0], params.amplitude[1]))
                phase = float(rng.uniform(params.phase[0], params.phase[1]))
                arg = 2.0 * np.pi * freqs[k] * t + phase
                if first_arg is None:
                    first_arg = arg
                c = spec.coupling
                frames[:, di] = amp * ((1 - c) * np.sin(arg) + c * shared_sin)
                frames[:, dj] = amp * ((1 - c) * np.cos(arg) + c * shared_cos)
            if leftover is not None:
                amp = float(rng.uniform(params.amplitude[0], params.amplitude[1]))
                if first_arg is None:
                    frames[:, leftover] = amp  # single-dim group: constant
                else:
                    c = spec.coupling
                    frames[:, leftover] = amp * (
                        (1 - c) * np.sin(first_arg) + c * shared_sin
                    )
        sequences.append(
            MotionSequence(activity=spec.activity, frames=frames, period_ms=spec.period_ms)
        )
    n_test = max(1, round(spec.count / 5))
    if n_test >= spec.count:
        raise DataError("sequence count too small for an 80/20 split")
    return make_split(
        sequences[: spec.count - n_test], sequences[spec.count - n_test :],
        skeleton, still_threshold,
    )
