"""Scikit-learn style wrappers over the preprocessing and model stack.

Estimators take lists of MotionSequence (or raw (F, D) arrays) and keep the
usual conventions: constructor args stored verbatim, fitted state in
trailing-underscore attributes, ``fit`` returns self, and
``get_params`` / ``set_params`` come from BaseEstimator.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .data import MotionSequence, make_split
from .errors import DataError
from .evaluation import ModelPipeline, SkelTNetPipeline
from .numerics import OptimizerConfig
from .preprocess import apply_preprocess, fit_preprocess, invert_preprocess
from .skeleton import scheme_from_spec
from .training import (
    SkelTNetPlan,
    StagePlan,
    TrainConfig,
    train_skel_tnet,
    train_stage,
)
from .models import CRnnConfig, MergeConfig, SkelNetConfig
from .validation import check_fitted, check_sequences


class MotionPreprocessor(BaseEstimator, TransformerMixin):
    """Still-dimension removal plus per-dimension standardization."""

    def __init__(self, still_threshold=1e-4):
        self.still_threshold = still_threshold

    def fit(self, X, y=None):
        X = check_sequences(X)
        self.stats_ = fit_preprocess(X, self.still_threshold)
        self.n_features_in_ = self.stats_.width
        return self

    def transform(self, X):
        check_fitted(self, "stats_")
        X = check_sequences(X, width=self.stats_.width)
        return [apply_preprocess(s, self.stats_) for s in X]

    def inverse_transform(self, X):
        check_fitted(self, "stats_")
        X = check_sequences(X, width=self.stats_.retained_width)
        return [invert_preprocess(s, self.stats_) for s in X]


def _as_split(X, skeleton, still_threshold):
    """Train on everything; a one-sequence test split keeps make_split happy."""
    X = check_sequences(X, width=skeleton.total_dim, min_frames=2)
    return make_split(X, [X[-1]], skeleton, still_threshold)


class _PredictorMixin:
    """Shared predict/rollout logic once ``pipeline_`` and ``stats_`` exist."""

    def predict(self, X, horizon=None):
        check_fitted(self, "pipeline_")
        horizon = self.horizon if horizon is None else horizon
        seqs = check_sequences(X, width=self.stats_.width, min_frames=self.seed_length)
        out = []
        for seq in seqs:
            seeds_pre = apply_preprocess(seq.frames[-self.seed_length :], self.stats_)
            pred_pre = self.pipeline_.predict(seeds_pre, horizon)
            frames = invert_preprocess(pred_pre, self.stats_)
            out.append(
                MotionSequence(activity=seq.activity, frames=frames, period_ms=seq.period_ms)
            )
        return out


class SkelNetPredictor(BaseEstimator, _PredictorMixin):
    """Branched next-frame predictor trained on free-running rollouts."""

    def __init__(self, skeleton=None, scheme="five_part", branch_dims=(64, 128, 64),
                 activation="lrelu", dropout_rate=0.2, use_residual=True,
                 seed_length=1, horizon=25, loss="sampling", alpha=1.0, beta=0.1,
                 optimizer="sgd", learning_rate=0.01, iterations=200, batch_size=16,
                 noise_variance=0.0, still_threshold=1e-4, random_state=0):
        self.skeleton = skeleton
        self.scheme = scheme
        self.branch_dims = branch_dims
        self.activation = activation
        self.dropout_rate = dropout_rate
        self.use_residual = use_residual
        self.seed_length = seed_length
        self.horizon = horizon
        self.loss = loss
        self.alpha = alpha
        self.beta = beta
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.batch_size = batch_size
        self.noise_variance = noise_variance
        self.still_threshold = still_threshold
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.skeleton is None:
            raise DataError("SkelNetPredictor requires a SkeletonSpec")
        split = _as_split(X, self.skeleton, self.still_threshold)
        self.stats_ = split.stats
        scheme = scheme_from_spec(self.skeleton, self.scheme, split.stats.retained)
        config = SkelNetConfig(
            scheme=scheme,
            branch_dims=tuple(self.branch_dims),
            activation=self.activation,
            dropout_rate=self.dropout_rate,
            use_residual=self.use_residual,
            seed_length=self.seed_length,
        )
        train_config = TrainConfig(
            horizon=self.horizon,
            iterations=self.iterations,
            batch_size=self.batch_size,
            seed=self.random_state,
            loss=self.loss,
            alpha=self.alpha,
            beta=self.beta,
            noise_variance=self.noise_variance,
            optimizer=OptimizerConfig(self.optimizer, self.learning_rate),
            seed_length=self.seed_length,
        )
        self.model_, self.log_ = train_stage("skelnet", split, config, train_config)
        self.pipeline_ = ModelPipeline(self.model_)
        return self


class CRnnPredictor(BaseEstimator, _PredictorMixin):
    """GRU sequence model trained with the two-phase loss by default."""

    def __init__(self, skeleton=None, gru_units=1024, head_dims=None,
                 dropout_rate=0.2, use_residual=True, seed_length=1, horizon=10,
                 loss="converging", alpha=1.0, beta=0.1, optimizer="sgd",
                 learning_rate=5e-5, iterations=200, batch_size=16, clip_norm=5.0,
                 noise_variance=0.0, still_threshold=1e-4, random_state=0):
        self.skeleton = skeleton
        self.gru_units = gru_units
        self.head_dims = head_dims
        self.dropout_rate = dropout_rate
        self.use_residual = use_residual
        self.seed_length = seed_length
        self.horizon = horizon
        self.loss = loss
        self.alpha = alpha
        self.beta = beta
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.batch_size = batch_size
        self.clip_norm = clip_norm
        self.noise_variance = noise_variance
        self.still_threshold = still_threshold
        self.random_state = random_state

    def fit(self, X, y=None):
        if self.skeleton is None:
            raise DataError("CRnnPredictor requires a SkeletonSpec")
        split = _as_split(X, self.skeleton, self.still_threshold)
        self.stats_ = split.stats
        width = split.stats.retained_width
        config = CRnnConfig(
            width=width,
            gru_units=self.gru_units,
            head_dims=None if self.head_dims is None else tuple(self.head_dims),
            dropout_rate=self.dropout_rate,
            use_residual=self.use_residual,
        )
        train_config = TrainConfig(
            horizon=self.horizon,
            iterations=self.iterations,
            batch_size=self.batch_size,
            seed=self.random_state,
            loss=self.loss,
            alpha=self.alpha,
            beta=self.beta,
            noise_variance=self.noise_variance,
            optimizer=OptimizerConfig(self.optimizer, self.learning_rate),
            seed_length=self.seed_length,
            clip_norm=self.clip_norm,
        )
        self.model_, self.log_ = train_stage("crnn", split, config, train_config)
        self.pipeline_ = ModelPipeline(self.model_)
        return self


class SkelTNetPredictor(BaseEstimator, _PredictorMixin):
    """Staged pipeline: branched and recurrent models, then a merge network."""

    def __init__(self, skeleton=None, scheme="five_part", merge_mode="network",
                 seed_length=1, horizon=10, iterations=200, batch_size=16,
                 noise_variance=0.0, still_threshold=1e-4, random_state=0,
                 skelnet_params=None, crnn_params=None, merge_params=None):
        self.skeleton = skeleton
        self.scheme = scheme
        self.merge_mode = merge_mode
        self.seed_length = seed_length
        self.horizon = horizon
        self.iterations = iterations
        self.batch_size = batch_size
        self.noise_variance = noise_variance
        self.still_threshold = still_threshold
        self.random_state = random_state
        self.skelnet_params = skelnet_params
        self.crnn_params = crnn_params
        self.merge_params = merge_params

    def fit(self, X, y=None):
        if self.skeleton is None:
            raise DataError("SkelTNetPredictor requires a SkeletonSpec")
        split = _as_split(X, self.skeleton, self.still_threshold)
        self.stats_ = split.stats
        width = split.stats.retained_width
        scheme = scheme_from_spec(self.skeleton, self.scheme, split.stats.retained)
        shared = dict(
            horizon=self.horizon,
            iterations=self.iterations,
            batch_size=self.batch_size,
            seed=self.random_state,
            noise_variance=self.noise_variance,
            seed_length=self.seed_length,
        )
        skel_cfg = SkelNetConfig(scheme=scheme, seed_length=self.seed_length,
                                 **(self.skelnet_params or {}))
        crnn_cfg = CRnnConfig(width=width, **(self.crnn_params or {}))
        merge_cfg = MergeConfig(width=width, mode=self.merge_mode,
                                **(self.merge_params or {}))
        plan = SkelTNetPlan(
            skelnet=StagePlan(
                skel_cfg,
                TrainConfig(loss="sampling", optimizer=OptimizerConfig("sgd", 0.01), **shared),
            ),
            crnn=StagePlan(
                crnn_cfg,
                TrainConfig(loss="converging", optimizer=OptimizerConfig("sgd", 5e-5),
                            clip_norm=5.0, **shared),
            ),
            merge=StagePlan(
                merge_cfg,
                TrainConfig(loss="l2", optimizer=OptimizerConfig("adam", 0.01), **shared),
            ),
        )
        (skel, crnn, merge), self.logs_ = train_skel_tnet(split, plan)
        self.models_ = (skel, crnn, merge)
        self.pipeline_ = SkelTNetPipeline(skel, crnn, merge)
        return self
