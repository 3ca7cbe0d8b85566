"""Named architecture variants and the grid runner behind ``ablate``.

Each variant is a delta against the full branched model: coarser partition
schemes, alternative activations, no residual connection, and the
plain-feed-forward baseline. The runner trains and scores every
(variant, noise variance, seed) cell with a shared window sampler seed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .data import sample_test_windows
from .errors import DataError
from .evaluation import ModelPipeline, evaluate_pipeline
from .skeleton import scheme_from_spec
from .training import smoke_model_config, smoke_train_config, train_stage

VARIANTS = (
    "full",
    "long_prior",
    "tanh",
    "no_residual",
    "no_branches",
    "no_branches_no_lrelu",
    "no_branches_no_lrelu_no_dropout",
    "ud",
    "lr",
)

_SCHEMES = {"full": "five_part", "ud": "ud_three", "lr": "lr_three"}


def variant_model_config(variant, skeleton, retained):
    """SkelNet config for a named variant at smoke scale."""
    if variant not in VARIANTS:
        raise DataError(f"unknown ablation variant {variant!r}")
    scheme_name = _SCHEMES.get(variant, "five_part")
    seed_length = 1
    activation = "lrelu"
    dropout_rate = 0.2
    use_residual = True
    if variant == "long_prior":
        seed_length = 3
    elif variant == "tanh":
        activation = "tanh"
    elif variant == "no_residual":
        use_residual = False
    elif variant.startswith("no_branches"):
        scheme_name = "whole"
        if "no_lrelu" in variant:
            activation = "none"
        if "no_dropout" in variant:
            dropout_rate = 0.0
    scheme = scheme_from_spec(skeleton, scheme_name, retained)
    return smoke_model_config(
        "skelnet", scheme=scheme, seed_length=seed_length, activation=activation,
        dropout_rate=dropout_rate, use_residual=use_residual,
    )


@dataclass(frozen=True)
class AblationRow:
    variant: str
    noise_variance: float
    seed: int
    mof: float


def run_ablation(split, skeleton, variants, horizon, iterations=200, seeds=(0,),
                 noise_variances=(0.0,), window_seed=8, window_count=8,
                 progress=None):
    """Train and evaluate each grid cell; returns a list of AblationRow."""
    rows = []
    for variant in variants:
        for noise in noise_variances:
            for seed in seeds:
                model_cfg = variant_model_config(variant, skeleton, split.stats.retained)
                train_cfg = smoke_train_config(
                    "skelnet", horizon, seed=seed, iterations=iterations,
                    noise_variance=noise, seed_length=model_cfg.seed_length,
                )
                model, _ = train_stage("skelnet", split, model_cfg, train_cfg)
                windows = sample_test_windows(
                    split, count=window_count, seed=window_seed,
                    seed_length=model_cfg.seed_length, horizon=horizon,
                )
                report = evaluate_pipeline(
                    ModelPipeline(model), windows, horizon, split.stats, skeleton,
                    sampler_seed=window_seed, noise_variance=noise,
                    noise_seed=seed,
                )
                rows.append(AblationRow(variant, noise, seed, report.mof_average))
                if progress is not None:
                    progress(rows[-1])
    return rows


def write_ablation_csv(rows, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("variant,noise_variance,seed,mof\n")
        for r in rows:
            fh.write(f"{r.variant},{r.noise_variance!r},{r.seed},{r.mof!r}\n")


def median(values):
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    return ordered[mid] if n % 2 else 0.5 * (ordered[mid - 1] + ordered[mid])


def summarize(rows):
    """Median MoF per (variant, noise variance) across seeds."""
    cells = {}
    for r in rows:
        cells.setdefault((r.variant, r.noise_variance), []).append(r.mof)
    return {key: median(vals) for key, vals in sorted(cells.items())}
