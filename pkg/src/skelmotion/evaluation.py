"""Angle-space evaluation: per-horizon errors and the mean-over-frames
summary, with machine-readable report and plot-data emission.

Pipelines map preprocessed seed frames to a preprocessed prediction; the
metric always inverts preprocessing first, so it is computed in the
original angle space and is invariant to the standardization parameters.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ShapeError
from .numerics import Tensor
from .preprocess import invert_preprocess
from .rotations import frame_euler_error
from .training.noise import add_gaussian_noise

REPORT_HEADER = "# skelmotion eval report v1"


class ModelPipeline:
    """Free-running rollout of a single model, in eval mode."""

    def __init__(self, model):
        self.model = model

    def predict(self, seeds_pre, horizon):
        seeds = [Tensor(row[None, :]) for row in seeds_pre]
        outs = self.model.free_run(seeds, horizon, training=False)
        return np.vstack([o.data[0] for o in outs])


class SkelTNetPipeline:
    """End-to-end composition: two stage-1 rollouts fed to the merge model."""

    def __init__(self, skel_model, crnn_model, merge_model):
        self.skel_model = skel_model
        self.crnn_model = crnn_model
        self.merge_model = merge_model

    def predict(self, seeds_pre, horizon):
        seeds = [Tensor(row[None, :]) for row in seeds_pre]
        a = self.skel_model.free_run(seeds, horizon, training=False)
        b = self.crnn_model.free_run(seeds, horizon, training=False)
        merged = self.merge_model.merge(a, b, training=False)
        return np.vstack([o.data[0] for o in merged])


@dataclass
class EvalReport:
    sampler_seed: int
    horizon_frames: int
    frame_period_ms: float
    window_counts: dict = field(default_factory=dict)
    per_frame: dict = field(default_factory=dict)  # activity -> [err per frame]
    horizons: dict = field(default_factory=dict)  # activity -> [(ms, err)]
    mof: dict = field(default_factory=dict)
    mof_average: float = 0.0
    mof_stddev: float = 0.0
    group_errors: dict = field(default_factory=dict)  # activity -> group -> [err]
    checkpoints: list = field(default_factory=list)
    config: dict = None


def _window_errors(pipeline, window, horizon, stats, spec, noise_variance, noise_seed, wi,
                   group_joints=None):
    seeds = window.seeds_pre
    if noise_variance > 0:
        seeds = add_gaussian_noise(seeds, noise_variance, (noise_seed, wi))
    pred_pre = pipeline.predict(seeds, horizon)
    if pred_pre.shape[0] < horizon:
        raise ShapeError(
            f"pipeline produced {pred_pre.shape[0]} frames, need {horizon}"
        )
    pred_raw = invert_preprocess(pred_pre[:horizon], stats)
    errs = np.empty(horizon)
    group_errs = None
    if group_joints:
        group_errs = {g: np.empty(horizon) for g in group_joints}
    for t in range(horizon):
        errs[t] = frame_euler_error(pred_raw[t], window.truth_raw[t], spec)
        if group_errs is not None:
            for g, joints in group_joints.items():
                group_errs[g][t] = frame_euler_error(
                    pred_raw[t], window.truth_raw[t], spec, joints=joints
                )
    return errs, group_errs


def evaluate_pipeline(pipeline, windows, horizon, stats, spec, horizons_ms=None,
                      sampler_seed=0, checkpoints=(), config=None, group_map=None,
                      noise_variance=0.0, noise_seed=0, threads=1):
    """Roll out every window and aggregate angle-space errors per activity."""
    if not windows:
        raise DataError("no evaluation windows")
    for w in windows:
        if w.truth_raw.shape[0] < horizon:
            raise DataError(
                f"window holds {w.truth_raw.shape[0]} truth frames, need {horizon}"
            )
    period = windows[0].period_ms
    if any(w.period_ms != period for w in windows):
        raise DataError("windows mix frame periods")
    group_joints = None
    if group_map:
        group_joints = {}
        for joint, group in group_map.items():
            group_joints.setdefault(group, []).append(joint)

    def run(item):
        wi, w = item
        return _window_errors(
            pipeline, w, horizon, stats, spec, noise_variance, noise_seed, wi,
            group_joints,
        )

    items = list(enumerate(windows))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]

    report = EvalReport(
        sampler_seed=sampler_seed,
        horizon_frames=horizon,
        frame_period_ms=period,
        checkpoints=list(checkpoints),
        config=config,
    )
    by_activity = {}
    for (wi, w), (errs, gerrs) in zip(items, results):
        by_activity.setdefault(w.activity, []).append((errs, gerrs))
    for activity in sorted(by_activity):
        rows = by_activity[activity]
        stack = np.vstack([errs for errs, _ in rows])
        per_frame = stack.mean(axis=0)
        report.window_counts[activity] = len(rows)
        report.per_frame[activity] = per_frame.tolist()
        report.mof[activity] = float(per_frame.mean())
        if group_joints:
            report.group_errors[activity] = {
                g: np.vstack([gerrs[g] for _, gerrs in rows]).mean(axis=0).tolist()
                for g in sorted(group_joints)
            }
        if horizons_ms:
            pairs = []
            for ms in horizons_ms:
                if ms % period:
                    raise DataError(
                        f"horizon {ms} ms is not a multiple of the {period} ms frame period"
                    )
                idx = int(round(ms / period)) - 1
                if idx >= horizon:
                    raise DataError(f"horizon {ms} ms lies beyond the rollout")
                pairs.append((float(ms), float(per_frame[idx])))
            report.horizons[activity] = pairs
    values = np.array([report.mof[a] for a in sorted(report.mof)])
    report.mof_average = float(values.mean())
    report.mof_stddev = float(values.std())  # population, across activities
    return report


def eval_horizons(pipeline, windows, horizons_ms, stats, spec, **kwargs):
    """Per-activity mean error at each requested horizon."""
    period = windows[0].period_ms
    horizon = max(int(round(ms / period)) for ms in horizons_ms)
    report = evaluate_pipeline(
        pipeline, windows, horizon, stats, spec, horizons_ms=horizons_ms, **kwargs
    )
    return report.horizons


def eval_mof(pipeline, windows, horizon, stats, spec, **kwargs):
    """Mean error over all predicted frames and windows, per activity."""
    report = evaluate_pipeline(pipeline, windows, horizon, stats, spec, **kwargs)
    return report.mof, report.mof_average, report.mof_stddev


def emit_report(report, out_dir):
    """Write the structured report plus one plot CSV per activity."""
    os.makedirs(out_dir, exist_ok=True)
    plots = os.path.join(out_dir, "plots")
    os.makedirs(plots, exist_ok=True)
    lines = [
        REPORT_HEADER,
        f"sampler_seed={report.sampler_seed}",
        f"horizon_frames={report.horizon_frames}",
        f"frame_period_ms={report.frame_period_ms!r}",
        "stddev_definition=population_across_activities",
        f"mof_average={report.mof_average!r}",
        f"mof_stddev={report.mof_stddev!r}",
    ]
    for ck in report.checkpoints:
        lines.append(f"checkpoint={ck}")
    if report.config is not None:
        lines.append("config=" + json.dumps(report.config, sort_keys=True, separators=(",", ":")))
    for activity in sorted(report.per_frame):
        lines.append(f"[activity {activity}]")
        lines.append(f"windows={report.window_counts[activity]}")
        lines.append(f"mof={report.mof[activity]!r}")
        for ms, err in report.horizons.get(activity, []):
            lines.append(f"horizon {ms!r} {err!r}")
        for t, err in enumerate(report.per_frame[activity]):
            lines.append(f"frame {t} {err!r}")
        for group, errs in report.group_errors.get(activity, {}).items():
            for t, err in enumerate(errs):
                lines.append(f"group {group} {t} {err!r}")
    path = os.path.join(out_dir, "report.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    for activity in sorted(report.per_frame):
        csv_path = os.path.join(plots, f"{activity}.csv")
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("frame_index,ms,error\n")
            for t, err in enumerate(report.per_frame[activity]):
                ms = (t + 1) * report.frame_period_ms
                fh.write(f"{t},{ms!r},{err!r}\n")
    return path


def parse_report(path):
    """Read a report file back; inverse of emit_report for the text part."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != REPORT_HEADER:
        raise DataError(f"{path}: not an eval report")
    report = EvalReport(sampler_seed=0, horizon_frames=0, frame_period_ms=0.0)
    activity = None
    for ln in lines[1:]:
        if not ln:
            continue
        if ln.startswith("[activity "):
            activity = ln[len("[activity ") : -1]
            report.per_frame[activity] = []
            continue
        if activity is None:
            key, value = ln.split("=", 1)
            if key == "sampler_seed":
                report.sampler_seed = int(value)
            elif key == "horizon_frames":
                report.horizon_frames = int(value)
            elif key == "frame_period_ms":
                report.frame_period_ms = float(value)
            elif key == "mof_average":
                report.mof_average = float(value)
            elif key == "mof_stddev":
                report.mof_stddev = float(value)
            elif key == "checkpoint":
                report.checkpoints.append(value)
            elif key == "config":
                report.config = json.loads(value)
            continue
        if "=" in ln and " " not in ln.split("=", 1)[0]:
            key, value = ln.split("=", 1)
            if key == "mof":
                report.mof[activity] = float(value)
            elif key == "windows":
                report.window_counts[activity] = int(value)
            continue
        parts = ln.split()
        if parts[0] == "horizon":
            report.horizons.setdefault(activity, []).append(
                (float(parts[1]), float(parts[2]))
            )
        elif parts[0] == "frame":
            report.per_frame[activity].append(float(parts[2]))
        elif parts[0] == "group":
            report.group_errors.setdefault(activity, {}).setdefault(parts[1], []).append(
                float(parts[3])
            )
    return report
