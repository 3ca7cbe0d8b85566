"""Input validation helpers for the estimator API."""

from __future__ import annotations

import numpy as np
from sklearn.exceptions import NotFittedError

from .data import MotionSequence
from .errors import ShapeError


def check_sequences(X, width=None, min_frames=1):
    """Validate a list of MotionSequence inputs; returns it as a list.

    Raw (F, D) arrays are wrapped into unlabeled sequences so the estimators
    also accept plain matrices.
    """
    if isinstance(X, (MotionSequence, np.ndarray)):
        X = [X]
    out = []
    for i, item in enumerate(X):
        if isinstance(item, np.ndarray):
            item = MotionSequence(activity="unlabeled", frames=item)
        if not isinstance(item, MotionSequence):
            raise TypeError(
                f"X[{i}] is {type(item).__name__}, expected MotionSequence or ndarray"
            )
        if width is not None and item.width != width:
            raise ShapeError(f"X[{i}] has width {item.width}, expected {width}")
        if item.length < min_frames:
            raise ShapeError(f"X[{i}] has {item.length} frames, need {min_frames}")
        out.append(item)
    if not out:
        raise ValueError("X is empty")
    return out


def check_fitted(estimator, attribute):
    if not hasattr(estimator, attribute):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() first"
        )
