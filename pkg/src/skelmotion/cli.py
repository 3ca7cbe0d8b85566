"""Command-line surface: train, eval, ablate, paramcount, gen-synthetic,
convert.

Options resolve as defaults <- config file <- flags. The config file is
INI-style with one section per command (keys use underscores); pass it with
``--config``. Every artifact embeds the fully resolved run configuration.

Exit codes: 0 success, 2 usage errors, 3 data errors, 4 numeric faults.
"""

from __future__ import annotations

import configparser
import dataclasses
import functools
import json
import os
import sys

import click
import numpy as np

from .ablate import VARIANTS, run_ablation, summarize, write_ablation_csv
from .data import MotionSequence, load_dataset, sample_test_windows, save_dataset, write_sequence
from .errors import DataError, SkelMotionError
from .evaluation import ModelPipeline, SkelTNetPipeline, emit_report, evaluate_pipeline
from .models import (
    CRnnModel,
    MergeConfig,
    MergeModel,
    SkelNetModel,
    crnn_param_count,
    load_model,
    merge_param_count,
    skelnet_param_count,
)
from .numerics import OptimizerConfig
from .skeleton import parse_skeleton_file, scheme_from_spec, write_skeleton_file
from .synthetic import SyntheticSpec, default_skeleton, generate_synthetic
from .training import (
    SkelTNetPlan,
    StagePlan,
    TrainConfig,
    horizon_frames,
    reference_model_config,
    reference_train_config,
    smoke_model_config,
    smoke_pipeline_plan,
    smoke_train_config,
    train_skel_tnet,
    train_stage,
)

# Published total for the reference five-branch configuration; the computed
# closed-form count is reported next to it because the two do not agree.
PUBLISHED_REFERENCE_TOTAL = "~0.3m"

STANDARD_HORIZONS_MS = (80, 160, 240, 320, 400)


def _load_default_map(path):
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise DataError(f"config file {path!r} not found or unreadable")
    return {section: dict(parser.items(section)) for section in parser.sections()}


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SkelMotionError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


def _run_config(ctx):
    """JSON-serializable snapshot of the resolved parameters."""
    out = {"command": ctx.command.name}
    for key, value in sorted(ctx.params.items()):
        if isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="INI config file; one section per command.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Global cap on worker threads.")
@click.pass_context
def main(ctx, config_path, threads):
    """Skeletal motion prediction: training, evaluation and ablations."""
    if config_path:
        try:
            ctx.default_map = _load_default_map(config_path)
        except SkelMotionError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)
    ctx.obj = {"threads": max(1, threads)}


def data_options(fn):
    fn = click.option("--synthetic", is_flag=True, help="Generate data in-process.")(fn)
    fn = click.option("--data", "data_dir", type=click.Path(), default=None,
                      help="Dataset root directory.")(fn)
    fn = click.option("--skeleton", "skeleton_file", type=click.Path(), default=None,
                      help="Skeleton description file (required with --data).")(fn)
    fn = click.option("--data-seed", type=int, default=0, show_default=True,
                      help="Seed for synthetic data generation.")(fn)
    fn = click.option("--count", type=int, default=12, show_default=True,
                      help="Synthetic sequence count.")(fn)
    fn = click.option("--length", type=int, default=120, show_default=True,
                      help="Synthetic sequence length in frames.")(fn)
    fn = click.option("--coupling", type=float, default=0.0, show_default=True,
                      help="Synthetic cross-group coupling in [0, 1].")(fn)
    fn = click.option("--still-threshold", type=float, default=1e-4, show_default=True)(fn)
    return fn


def _resolve_split(synthetic, data_dir, skeleton_file, data_seed, count, length,
                   coupling, still_threshold):
    if synthetic and data_dir:
        raise click.UsageError("--synthetic and --data are mutually exclusive")
    if synthetic:
        skeleton = default_skeleton()
        spec = SyntheticSpec(seed=data_seed, count=count, length=length, coupling=coupling)
        return generate_synthetic(spec, skeleton, still_threshold), skeleton
    if not data_dir:
        raise click.UsageError("pass --synthetic or --data DIR")
    if not skeleton_file:
        raise click.UsageError("--data requires --skeleton FILE")
    skeleton = parse_skeleton_file(skeleton_file)
    return load_dataset(data_dir, skeleton, still_threshold), skeleton


def _period_of(split):
    return split.train[0].period_ms


@main.command()
@click.option("--model", "model_kind",
              type=click.Choice(["skelnet", "crnn", "skeltnet", "baseline"]),
              required=True)
@data_options
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--preset", type=click.Choice(["smoke", "reference"]), default="smoke",
              show_default=True, help="Model/optimizer size preset.")
@click.option("--loss", type=click.Choice(["sampling", "converging"]), default=None)
@click.option("--scheme", type=click.Choice(["five_part", "lr_three", "ud_three", "whole"]),
              default=None)
@click.option("--horizon-ms", type=int, default=1000, show_default=True)
@click.option("--seed-length", type=int, default=1, show_default=True)
@click.option("--iterations", type=int, default=None,
              help="Defaults to 200 (smoke) or 10000 (reference).")
@click.option("--batch-size", type=int, default=16, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise-variance", type=float, default=0.0, show_default=True)
@click.option("--lr", "learning_rate", type=float, default=None,
              help="Override the preset learning rate.")
@click.option("--optimizer", "optimizer_kind", type=click.Choice(["sgd", "adam"]),
              default=None, help="Override the preset optimizer.")
@click.option("--alpha", type=float, default=1.0, show_default=True)
@click.option("--beta", type=float, default=0.1, show_default=True)
@click.option("--checkpoint-interval", type=int, default=0, show_default=True)
@click.option("--log-wall-time", is_flag=True,
              help="Record real per-iteration times (breaks byte-reproducible logs).")
@click.pass_context
@handle_errors
def train(ctx, model_kind, synthetic, data_dir, skeleton_file, data_seed, count,
          length, coupling, still_threshold, out_dir, preset, loss, scheme,
          horizon_ms, seed_length, iterations, batch_size, seed, noise_variance,
          learning_rate, optimizer_kind, alpha, beta, checkpoint_interval,
          log_wall_time):
    """Train one model or the full two-stage pipeline."""
    if model_kind == "skeltnet" and loss is not None:
        raise click.UsageError(
            "--loss does not apply to skeltnet: stage losses are fixed "
            "(sampling / converging / l2 for the merge stage)"
        )
    if model_kind == "baseline" and scheme not in (None, "whole"):
        raise click.UsageError("--model baseline implies --scheme whole")
    split, skeleton = _resolve_split(
        synthetic, data_dir, skeleton_file, data_seed, count, length, coupling,
        still_threshold,
    )
    horizon = horizon_frames(horizon_ms, _period_of(split))
    run_config = _run_config(ctx)
    if iterations is None:
        iterations = 200 if preset == "smoke" else 10_000

    overrides = dict(
        batch_size=batch_size,
        noise_variance=noise_variance,
        seed_length=seed_length,
        alpha=alpha,
        beta=beta,
        checkpoint_interval=checkpoint_interval,
        log_wall_time=log_wall_time,
    )
    if model_kind == "skeltnet":
        plan = smoke_pipeline_plan(
            scheme_from_spec(skeleton, scheme or "five_part", split.stats.retained),
            split.stats.retained_width, horizon, seed=seed, iterations=iterations,
            noise_variance=noise_variance,
        )
        if preset == "reference":
            width = split.stats.retained_width
            plan = SkelTNetPlan(
                skelnet=StagePlan(
                    reference_model_config("skelnet", scheme=plan.skelnet.model_config.scheme),
                    reference_train_config("skelnet", horizon, seed=seed,
                                           iterations=iterations, **overrides),
                ),
                crnn=StagePlan(
                    reference_model_config("crnn", width=width),
                    reference_train_config("crnn", horizon, seed=seed,
                                           iterations=iterations, **overrides),
                ),
                merge=StagePlan(
                    reference_model_config("merge", width=width),
                    reference_train_config("merge", horizon, seed=seed,
                                           iterations=iterations, **overrides),
                ),
            )
        models, logs = train_skel_tnet(split, plan, out_dir)
        for model in models:
            click.echo(f"trained {model.kind}: {model.param_count()} parameters")
        click.echo(f"checkpoints and logs written to {out_dir}")
        return

    kind = "skelnet" if model_kind == "baseline" else model_kind
    scheme_name = "whole" if model_kind == "baseline" else (scheme or "five_part")
    width = split.stats.retained_width
    part = scheme_from_spec(skeleton, scheme_name, split.stats.retained)
    if preset == "smoke":
        model_cfg = smoke_model_config(kind, scheme=part, width=width,
                                       seed_length=seed_length)
        train_cfg = smoke_train_config(kind, horizon, seed=seed, iterations=iterations,
                                       **overrides)
    else:
        model_cfg = reference_model_config(kind, scheme=part, width=width)
        train_cfg = reference_train_config(kind, horizon, seed=seed,
                                           iterations=iterations, **overrides)
    updates = {}
    if loss is not None:
        updates["loss"] = loss
    if learning_rate is not None or optimizer_kind is not None:
        updates["optimizer"] = OptimizerConfig(
            optimizer_kind or train_cfg.optimizer.kind,
            learning_rate if learning_rate is not None else train_cfg.optimizer.learning_rate,
        )
    if updates:
        train_cfg = dataclasses.replace(train_cfg, **updates)
    # the run config rides along in the checkpoint meta via the train log config
    model, log = train_stage(kind, split, model_cfg, train_cfg, out_dir)
    log.config["run_config"] = run_config
    log.write(os.path.join(out_dir, f"{kind}.log"))
    click.echo(f"trained {kind}: {model.param_count()} parameters, "
               f"final loss {log.records[-1].loss if log.records else float('nan')}")


def _load_models(paths):
    models = {}
    for path in paths:
        if not os.path.exists(path):
            raise DataError(f"checkpoint {path!r} does not exist")
        model, meta = load_model(path)
        if model.kind in models:
            raise DataError(f"two checkpoints of kind {model.kind!r} given")
        models[model.kind] = (model, path)
    return models


@main.command(name="eval")
@click.option("--checkpoint", "checkpoints", type=click.Path(), multiple=True,
              required=True, help="One model checkpoint, or the three pipeline ones.")
@data_options
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--horizon-ms", type=int, default=400, show_default=True)
@click.option("--horizons-ms", default=None,
              help="Comma-separated report horizons; defaults to the standard five.")
@click.option("--windows", "window_count", type=int, default=8, show_default=True)
@click.option("--window-seed", type=int, default=8, show_default=True)
@click.option("--merge-mode", type=click.Choice(["network", "average",
              "passthrough_skel", "passthrough_crnn"]), default=None,
              help="Override the merge wiring (pipeline eval only).")
@click.option("--scheme", "expect_scheme", default=None,
              help="Assert the checkpoint's partition scheme matches.")
@click.option("--noise-variance", type=float, default=0.0, show_default=True)
@click.option("--noise-seed", type=int, default=0, show_default=True)
@click.option("--groups", "group_breakdown", is_flag=True,
              help="Add a per-group error breakdown to the report.")
@click.pass_context
@handle_errors
def eval_cmd(ctx, checkpoints, synthetic, data_dir, skeleton_file, data_seed, count,
             length, coupling, still_threshold, out_dir, horizon_ms, horizons_ms,
             window_count, window_seed, merge_mode, expect_scheme, noise_variance,
             noise_seed, group_breakdown):
    """Evaluate checkpoints: per-horizon errors and mean-over-frames."""
    split, skeleton = _resolve_split(
        synthetic, data_dir, skeleton_file, data_seed, count, length, coupling,
        still_threshold,
    )
    period = _period_of(split)
    horizon = horizon_frames(horizon_ms, period)
    models = _load_models(checkpoints)

    if expect_scheme and "skelnet" in models:
        actual = models["skelnet"][0].config.scheme.name
        if actual != expect_scheme:
            raise DataError(
                f"checkpoint disagrees with flags: scheme is {actual!r}, "
                f"--scheme asked for {expect_scheme!r}"
            )

    seed_length = 1
    if "skelnet" in models:
        seed_length = models["skelnet"][0].config.seed_length
    if set(models) == {"skelnet", "crnn", "merge"}:
        merge_model = models["merge"][0]
        if merge_mode and merge_model.config.mode != merge_mode:
            merge_model = MergeModel(
                dataclasses.replace(merge_model.config, mode=merge_mode),
                merge_model.store,
            )
        pipeline = SkelTNetPipeline(models["skelnet"][0], models["crnn"][0], merge_model)
    elif len(models) == 1:
        if merge_mode:
            raise click.UsageError("--merge-mode applies to pipeline evaluation")
        pipeline = ModelPipeline(next(iter(models.values()))[0])
    else:
        raise DataError(
            f"expected one checkpoint or the skelnet/crnn/merge triple, got {sorted(models)}"
        )

    if horizons_ms is None:
        horizons = [ms for ms in STANDARD_HORIZONS_MS if ms <= horizon_ms]
    else:
        horizons = [int(tok) for tok in str(horizons_ms).split(",") if tok]
    windows = sample_test_windows(split, count=window_count, seed=window_seed,
                                  seed_length=seed_length, horizon=horizon)
    group_map = None
    if group_breakdown:
        group_map = skeleton.group_maps.get("five_part")
        if group_map is None:
            raise DataError("--groups requires a skeleton with a five_part scheme")
    from .numerics import checkpoint_checksum

    ids = [f"{os.path.basename(p)}:{checkpoint_checksum(p)[:12]}"
           for _, p in models.values()]
    report = evaluate_pipeline(
        pipeline, windows, horizon, split.stats, skeleton, horizons_ms=horizons,
        sampler_seed=window_seed, checkpoints=ids, config=_run_config(ctx),
        group_map=group_map, noise_variance=noise_variance, noise_seed=noise_seed,
        threads=ctx.obj["threads"],
    )
    path = emit_report(report, out_dir)
    click.echo(f"report written to {path}")
    for activity in sorted(report.mof):
        click.echo(f"  {activity}: MoF {report.mof[activity]:.6f}")
    click.echo(f"  average {report.mof_average:.6f} stddev {report.mof_stddev:.6f}")


@main.command()
@data_options
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--variants", default="full,no_branches", show_default=True,
              help=f"Comma-separated subset of: {','.join(VARIANTS)}")
@click.option("--noise-variance", "noise_variances", default="0.0", show_default=True,
              help="Comma-separated noise variances for the robustness sweep.")
@click.option("--seeds", default="0", show_default=True,
              help="Comma-separated training seeds.")
@click.option("--iterations", type=int, default=200, show_default=True)
@click.option("--horizon-ms", type=int, default=400, show_default=True)
@click.option("--windows", "window_count", type=int, default=8, show_default=True)
@click.option("--window-seed", type=int, default=8, show_default=True)
@click.pass_context
@handle_errors
def ablate(ctx, synthetic, data_dir, skeleton_file, data_seed, count, length,
           coupling, still_threshold, out_dir, variants, noise_variances, seeds,
           iterations, horizon_ms, window_count, window_seed):
    """Train and score architecture variants; emits a variant-by-MoF table."""
    split, skeleton = _resolve_split(
        synthetic, data_dir, skeleton_file, data_seed, count, length, coupling,
        still_threshold,
    )
    horizon = horizon_frames(horizon_ms, _period_of(split))
    variant_list = [v.strip() for v in variants.split(",") if v.strip()]
    noise_list = [float(v) for v in noise_variances.split(",") if v]
    seed_list = [int(v) for v in seeds.split(",") if v]
    rows = run_ablation(
        split, skeleton, variant_list, horizon, iterations=iterations,
        seeds=seed_list, noise_variances=noise_list, window_seed=window_seed,
        window_count=window_count,
        progress=lambda row: click.echo(
            f"  {row.variant} noise={row.noise_variance} seed={row.seed} "
            f"MoF={row.mof:.6f}"
        ),
    )
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "ablation.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("# config=" + json.dumps(_run_config(ctx), sort_keys=True,
                                          separators=(",", ":")) + "\n")
    with open(csv_path, "a", encoding="utf-8") as fh:
        fh.write("variant,noise_variance,seed,mof\n")
        for r in rows:
            fh.write(f"{r.variant},{r.noise_variance!r},{r.seed},{r.mof!r}\n")
    click.echo(f"grid written to {csv_path}")
    click.echo("median MoF per cell:")
    for (variant, noise), mof in summarize(rows).items():
        click.echo(f"  {variant} noise={noise}: {mof:.6f}")


@main.command()
@click.option("--width", type=int, default=54, show_default=True,
              help="Frame width after still-joint removal.")
@click.option("--preset", type=click.Choice(["smoke", "reference"]), default="reference",
              show_default=True)
@click.option("--seed-length", type=int, default=1, show_default=True)
@handle_errors
def paramcount(width, preset, seed_length):
    """Closed-form and instantiated parameter totals per model."""
    from .skeleton import Group, PartitionScheme

    sizes = [width - 4 * (width // 5)] + [width // 5] * 4
    cursor = 0
    groups = []
    names = ["torso", "upper_left_arm", "upper_right_arm", "lower_left_leg",
             "lower_right_leg"]
    for name, size in zip(names, sizes):
        groups.append(Group(name, tuple(range(cursor, cursor + size))))
        cursor += size
    scheme = PartitionScheme("five_part", tuple(groups))
    whole = PartitionScheme("whole", (Group("whole", tuple(range(width))),))

    make_model = {
        "smoke": lambda kind, **kw: smoke_model_config(kind, **kw),
        "reference": lambda kind, **kw: reference_model_config(kind, **kw),
    }[preset]
    rows = []
    for label, cfg, counter, cls in (
        ("skelnet/five_part", make_model("skelnet", scheme=scheme), skelnet_param_count, SkelNetModel),
        ("skelnet/whole", make_model("skelnet", scheme=whole), skelnet_param_count, SkelNetModel),
        ("crnn", make_model("crnn", width=width), crnn_param_count, CRnnModel),
        ("merge", make_model("merge", width=width), merge_param_count, MergeModel),
    ):
        if label.startswith("skelnet") and seed_length > 1:
            cfg = dataclasses.replace(cfg, seed_length=seed_length)
        closed = counter(cfg)
        instantiated = cls.initialize(cfg, seed=0).param_count()
        rows.append((label, closed, instantiated))
    for label, closed, instantiated in rows:
        marker = "OK" if closed == instantiated else "MISMATCH"
        click.echo(f"{label}: closed-form {closed}  instantiated {instantiated}  [{marker}]")
        if closed != instantiated:
            raise SkelMotionError(f"parameter count mismatch for {label}")
    if preset == "reference" and width == 54 and seed_length == 1:
        total = rows[0][1]
        click.echo(
            f"note: published total for this configuration is {PUBLISHED_REFERENCE_TOTAL}; "
            f"the architecture as specified counts {total} (~0.1m). The computed "
            "count is authoritative here; the published figure is reported for "
            "reference and agreement is not required."
        )


@main.command(name="gen-synthetic")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=12, show_default=True)
@click.option("--length", type=int, default=120, show_default=True)
@click.option("--coupling", type=float, default=0.0, show_default=True)
@click.option("--period-ms", type=float, default=40.0, show_default=True)
@click.option("--activities", default="synthetic", show_default=True,
              help="Comma-separated activity labels; one dataset per label.")
@handle_errors
def gen_synthetic(out_dir, seed, count, length, coupling, period_ms, activities):
    """Write a synthetic dataset plus its skeleton description file."""
    skeleton = default_skeleton()
    labels = [a.strip() for a in activities.split(",") if a.strip()]
    for i, label in enumerate(labels):
        spec = SyntheticSpec(seed=seed + i, count=count, length=length,
                             coupling=coupling, period_ms=period_ms, activity=label)
        split = generate_synthetic(spec, skeleton)
        save_dataset(split, out_dir)
    write_skeleton_file(skeleton, os.path.join(out_dir, "skeleton.txt"))
    click.echo(f"wrote {len(labels)} activity set(s) under {out_dir}")


@main.command()
@click.option("--input", "input_file", type=click.Path(), required=True,
              help="Plain-text frame matrix, one frame per row.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--activity", required=True)
@click.option("--part", type=click.Choice(["train", "test"]), default="train",
              show_default=True)
@click.option("--period-ms", type=float, default=40.0, show_default=True)
@click.option("--delimiter", default=None,
              help="Cell delimiter; default splits on comma or whitespace.")
@handle_errors
def convert(input_file, out_dir, activity, part, period_ms, delimiter):
    """Convert a public mocap text export into a sequence file."""
    rows = []
    with open(input_file, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(delimiter) if delimiter else line.replace(",", " ").split()
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DataError(f"{input_file}:{lineno}: non-numeric cell") from None
    if not rows:
        raise DataError(f"{input_file}: no frames found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{input_file}: inconsistent column counts {sorted(widths)}")
    seq = MotionSequence(activity=activity, frames=np.array(rows), period_ms=period_ms)
    dest = os.path.join(out_dir, activity, part)
    os.makedirs(dest, exist_ok=True)
    name = os.path.splitext(os.path.basename(input_file))[0] + ".seq"
    path = os.path.join(dest, name)
    write_sequence(seq, path)
    click.echo(f"wrote {path} ({seq.length} frames x {seq.width} dims)")


if __name__ == "__main__":
    main()
