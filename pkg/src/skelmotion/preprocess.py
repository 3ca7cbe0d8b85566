"""Still-dimension removal and per-dimension standardization.

Fitted on the training split only; still dimensions keep their constant
value so inversion reconstructs full-width frames.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DataError, ShapeError


@dataclass(frozen=True)
class PreprocessStats:
    mean: np.ndarray  # (width,) over the training split
    std: np.ndarray  # (width,) population std
    still: tuple  # raw indices with std below the threshold
    retained: tuple  # raw indices that survive
    threshold: float

    @property
    def width(self):
        return self.mean.shape[0]

    @property
    def retained_width(self):
        return len(self.retained)

    def to_dict(self):
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "still": list(self.still),
            "retained": list(self.retained),
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            mean=np.asarray(d["mean"], dtype=np.float64),
            std=np.asarray(d["std"], dtype=np.float64),
            still=tuple(d["still"]),
            retained=tuple(d["retained"]),
            threshold=float(d["threshold"]),
        )


def _frames_of(obj):
    return obj if isinstance(obj, np.ndarray) else obj.frames


def _with_frames(obj, frames):
    if isinstance(obj, np.ndarray):
        return frames
    return dataclasses.replace(obj, frames=frames)


def fit_preprocess(train, still_threshold=1e-4):
    """Compute mean/std and the still-dimension set over training sequences."""
    mats = [_frames_of(s) for s in train]
    if not mats:
        raise DataError("cannot fit preprocessing on an empty training split")
    stacked = np.concatenate(mats, axis=0)
    mean = stacked.mean(axis=0)
    std = stacked.std(axis=0)
    still = tuple(int(i) for i in np.flatnonzero(std < still_threshold))
    retained = tuple(int(i) for i in np.flatnonzero(std >= still_threshold))
    if any(std[i] == 0.0 for i in retained):
        raise RuntimeError(
            "internal error: retained dimension with zero variance after thresholding"
        )
    return PreprocessStats(
        mean=mean, std=std, still=still, retained=retained, threshold=float(still_threshold)
    )


def apply_preprocess(seq, stats):
    """Drop still dimensions and standardize the rest."""
    frames = _frames_of(seq)
    if frames.shape[1] != stats.width:
        raise ShapeError(
            f"frame width {frames.shape[1]} does not match fitted width {stats.width}"
        )
    idx = list(stats.retained)
    out = (frames[:, idx] - stats.mean[idx]) / stats.std[idx]
    return _with_frames(seq, out)


def invert_preprocess(seq, stats):
    """Restore still constants and de-standardize; inverse of apply_preprocess."""
    frames = _frames_of(seq)
    if frames.shape[1] != stats.retained_width:
        raise ShapeError(
            f"frame width {frames.shape[1]} does not match retained width "
            f"{stats.retained_width}"
        )
    out = np.empty((frames.shape[0], stats.width), dtype=np.float64)
    out[:, list(stats.still)] = stats.mean[list(stats.still)]
    idx = list(stats.retained)
    out[:, idx] = frames * stats.std[idx] + stats.mean[idx]
    return _with_frames(seq, out)
