"""Convolutional sparse-coding toolkit for visible/infrared fusion.

The pipeline works entirely in the coefficient domain of one shared
convolutional dictionary: encode the visible image, transfer its coefficients
to pseudo-infrared ones, recalibrate, gate atom-wise, and reconstruct.
"""

from .containers import CoeffMap, Dictionary, FilmParams, Image, TransferOp
from .fusion import FusionWeights, GateConfig, fuse, fuse_pipeline, fusion_losses, gate
from .learning import JsrlConfig, TrainState, ivdlb_step, learn_dictionary
from .metrics import MetricReport, ag, ei, en, metric_report, sf
from .pgm import PgmFormatError, read_image, write_image
from .solvers import (
    SpectrumCache,
    StageParams,
    StageSchedule,
    prox_coeff,
    prox_dict,
    reconstruct,
    solve_coeff_dc,
    solve_dict_dc,
    solve_dict_dc_batch,
)
from .tensorio import TensorFormatError, deserialize_tensor, serialize_tensor
from .transfer import (
    SemanticProvider,
    apply_transfer,
    calibrate_film,
    encode,
    film_modulate,
    fit_transfer,
    infer_ir,
    inference_losses,
)

__version__ = "0.1.0"

__all__ = [
    "CoeffMap", "Dictionary", "FilmParams", "Image", "TransferOp",
    "FusionWeights", "GateConfig", "fuse", "fuse_pipeline", "fusion_losses", "gate",
    "JsrlConfig", "TrainState", "ivdlb_step", "learn_dictionary",
    "MetricReport", "ag", "ei", "en", "metric_report", "sf",
    "PgmFormatError", "read_image", "write_image",
    "SpectrumCache", "StageParams", "StageSchedule",
    "prox_coeff", "prox_dict", "reconstruct",
    "solve_coeff_dc", "solve_dict_dc", "solve_dict_dc_batch",
    "TensorFormatError", "deserialize_tensor", "serialize_tensor",
    "SemanticProvider", "apply_transfer", "calibrate_film", "encode",
    "film_modulate", "fit_transfer", "infer_ir", "inference_losses",
    "__version__",
]
