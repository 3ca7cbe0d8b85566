"""Self-describing model checkpoints: parameter payload plus a config
record, so a file can be loaded without external flags."""

from __future__ import annotations

from ..errors import DataError
from ..numerics import load_checkpoint, save_checkpoint
from .crnn import CRnnConfig, CRnnModel
from .merge import MergeConfig, MergeModel
from .skelnet import SkelNetConfig, SkelNetModel

_KINDS = {
    "skelnet": (SkelNetConfig, SkelNetModel),
    "crnn": (CRnnConfig, CRnnModel),
    "merge": (MergeConfig, MergeModel),
}


def save_model(model, path, run_config=None):
    meta = model.to_meta()
    if run_config is not None:
        meta["run_config"] = run_config
    save_checkpoint(model.store, path, meta)


def load_model(path):
    store, meta = load_checkpoint(path)
    kind = meta.get("kind")
    if kind not in _KINDS:
        raise DataError(f"{path}: checkpoint has unknown model kind {kind!r}")
    config_cls, model_cls = _KINDS[kind]
    config = config_cls.from_dict(meta["config"])
    return model_cls(config, store), meta
