"""Autoregressive skeletal motion prediction.

A branched per-body-part next-frame network, a GRU sequence model trained
with a two-phase (teacher-forced + free-running) loss, and a staged
pipeline that merges their rollouts. Built on an in-package float64 tensor
engine with tape-based reverse-mode differentiation so every gradient is
checkable against finite differences.
"""

from .data import (
    DatasetSplit,
    MotionSequence,
    Window,
    load_dataset,
    make_split,
    read_sequence,
    sample_test_windows,
    save_dataset,
    write_sequence,
)
from .errors import DataError, NumericFault, ShapeError, SkelMotionError, TrainAbort
from .estimators import (
    CRnnPredictor,
    MotionPreprocessor,
    SkelNetPredictor,
    SkelTNetPredictor,
)
from .evaluation import (
    EvalReport,
    ModelPipeline,
    SkelTNetPipeline,
    emit_report,
    eval_horizons,
    eval_mof,
    evaluate_pipeline,
    parse_report,
)
from .preprocess import PreprocessStats, apply_preprocess, fit_preprocess, invert_preprocess
from .rotations import (
    canonicalize_expmap,
    euler_to_rotmat,
    expmap_to_rotmat,
    frame_euler_error,
    rotmat_to_euler,
    rotmat_to_expmap,
)
from .skeleton import (
    Group,
    Joint,
    PartitionScheme,
    SkeletonSpec,
    build_partition,
    gather,
    parse_skeleton_file,
    scatter,
    scheme_from_spec,
    write_skeleton_file,
)
from .synthetic import OscillatorParams, SyntheticSpec, default_skeleton, generate_synthetic

__version__ = "0.1.0"
