"""Motion sequence container, the on-disk sequence format, dataset loading,
and the seeded window samplers.

Sequence file format (one sequence per file, extension ``.seq``):

    activity=<label> dims=<D> period_ms=<P>
    v1,v2,...,vD          # one line per frame

Floats are emitted with ``repr`` so parse -> emit round-trips are
byte-exact. Directory layout: ``<root>/<activity>/<train|test>/<name>.seq``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ShapeError
from .preprocess import apply_preprocess, fit_preprocess


@dataclass(frozen=True)
class MotionSequence:
    activity: str
    frames: np.ndarray  # (F, D) exponential-map features, or preprocessed
    period_ms: float = 40.0

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1:
            raise ShapeError(f"frames must be a non-empty (F, D) matrix, got {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise DataError(f"sequence {self.activity!r} contains non-finite values")
        object.__setattr__(self, "frames", frames)

    @property
    def length(self):
        return self.frames.shape[0]

    @property
    def width(self):
        return self.frames.shape[1]


def _fmt(x):
    return repr(float(x))


def write_sequence(seq, path):
    lines = [f"activity={seq.activity} dims={seq.width} period_ms={_fmt(seq.period_ms)}"]
    for row in seq.frames:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sequence(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        fields = {}
        for token in header.split():
            if "=" not in token:
                raise DataError(f"{path}:1: malformed header token {token!r}")
            key, value = token.split("=", 1)
            fields[key] = value
        try:
            activity = fields["activity"]
            dims = int(fields["dims"])
            period_ms = float(fields["period_ms"])
        except (KeyError, ValueError):
            raise DataError(f"{path}:1: header must carry activity, dims, period_ms") from None
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != dims:
                raise DataError(
                    f"{path}:{lineno}: expected {dims} columns, found {len(cells)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric cell") from None
    if not rows:
        raise DataError(f"{path}: sequence has no frames")
    return MotionSequence(activity=activity, frames=np.array(rows), period_ms=period_ms)


@dataclass
class DatasetSplit:
    train: list  # raw MotionSequences
    test: list
    spec: object  # SkeletonSpec
    stats: object  # PreprocessStats, fitted on train only
    train_pre: list = field(default_factory=list)  # preprocessed views
    test_pre: list = field(default_factory=list)

    @property
    def activities(self):
        return sorted({s.activity for s in self.test})


def make_split(train, test, spec, still_threshold=1e-4):
    """Fit preprocessing on train only, then apply to both splits."""
    if not train:
        raise DataError("training split is empty")
    if not test:
        raise DataError("test split is empty")
    for seq in list(train) + list(test):
        if seq.width != spec.total_dim:
            raise DataError(
                f"sequence {seq.activity!r} has width {seq.width}, skeleton "
                f"expects {spec.total_dim}"
            )
    stats = fit_preprocess(train, still_threshold)
    return DatasetSplit(
        train=list(train),
        test=list(test),
        spec=spec,
        stats=stats,
        train_pre=[apply_preprocess(s, stats) for s in train],
        test_pre=[apply_preprocess(s, stats) for s in test],
    )


def load_dataset(root, spec, still_threshold=1e-4):
    """Read ``<root>/<activity>/<train|test>/*.seq`` into a DatasetSplit.

    File order is sorted for determinism; widths are validated against the
    skeleton before preprocessing is fitted.
    """
    if not os.path.isdir(root):
        raise DataError(f"dataset root {root!r} is not a directory")
    train, test = [], []
    for activity in sorted(os.listdir(root)):
        adir = os.path.join(root, activity)
        if not os.path.isdir(adir):
            continue
        for part, bucket in (("train", train), ("test", test)):
            pdir = os.path.join(adir, part)
            if not os.path.isdir(pdir):
                continue
            for name in sorted(os.listdir(pdir)):
                if not name.endswith(".seq"):
                    continue
                seq = read_sequence(os.path.join(pdir, name))
                if seq.width != spec.total_dim:
                    raise DataError(
                        f"{os.path.join(pdir, name)}: width {seq.width} does not "
                        f"match skeleton dimension {spec.total_dim}"
                    )
                bucket.append(seq)
    return make_split(train, test, spec, still_threshold)


def save_dataset(split, root):
    """Write both splits back out in the directory layout above."""
    counters = {}
    for part, seqs in (("train", split.train), ("test", split.test)):
        for seq in seqs:
            key = (seq.activity, part)
            counters[key] = counters.get(key, 0) + 1
            d = os.path.join(root, seq.activity, part)
            os.makedirs(d, exist_ok=True)
            write_sequence(seq, os.path.join(d, f"{counters[key]:04d}.seq"))


@dataclass(frozen=True)
class Window:
    """One evaluation window: seed frames plus ground-truth continuation."""

    activity: str
    sequence_index: int
    start: int
    seeds_raw: np.ndarray  # (seed_length, D)
    truth_raw: np.ndarray  # (horizon, D)
    seeds_pre: np.ndarray  # (seed_length, D')
    truth_pre: np.ndarray  # (horizon, D')
    period_ms: float = 40.0


def sample_test_windows(split, count=8, seed=0, seed_length=1, horizon=25):
    """Draw ``count`` windows per activity with a fixed seed.

    Identical (split, seed, count, lengths) produce identical windows across
    runs and machines.
    """
    need = seed_length + horizon
    windows = []
    for ai, activity in enumerate(split.activities):
        idx = [i for i, s in enumerate(split.test) if s.activity == activity]
        for i in idx:
            if split.test[i].length < need:
                raise DataError(
                    f"test sequence {i} of activity {activity!r} has "
                    f"{split.test[i].length} frames, need {need}"
                )
        rng = np.random.default_rng((seed, ai))
        for _ in range(count):
            j = idx[int(rng.integers(len(idx)))]
            start = int(rng.integers(split.test[j].length - need + 1))
            raw = split.test[j].frames
            pre = split.test_pre[j].frames
            windows.append(
                Window(
                    activity=activity,
                    sequence_index=j,
                    start=start,
                    seeds_raw=raw[start : start + seed_length].copy(),
                    truth_raw=raw[start + seed_length : start + need].copy(),
                    seeds_pre=pre[start : start + seed_length].copy(),
                    truth_pre=pre[start + seed_length : start + need].copy(),
                    period_ms=split.test[j].period_ms,
                )
            )
    return windows


def sample_train_batch(sequences_pre, batch_size, seed_length, horizon, rng):
    """Uniformly sample windows over all valid (sequence, start) pairs.

    Returns (seeds, truth) with shapes (seed_length, B, D) and (horizon, B, D).
    """
    need = seed_length + horizon
    counts = [max(0, s.length - need + 1) for s in sequences_pre]
    total = sum(counts)
    if total == 0:
        raise DataError(
            f"no training sequence is long enough for a {need}-frame window"
        )
    bounds = np.cumsum(counts)
    width = sequences_pre[0].width
    seeds = np.empty((seed_length, batch_size, width))
    truth = np.empty((horizon, batch_size, width))
    for b in range(batch_size):
        flat = int(rng.integers(total))
        j = int(np.searchsorted(bounds, flat, side="right"))
        start = flat - (int(bounds[j - 1]) if j > 0 else 0)
        frames = sequences_pre[j].frames
        seeds[:, b, :] = frames[start : start + seed_length]
        truth[:, b, :] = frames[start + seed_length : start + need]
    return seeds, truth
