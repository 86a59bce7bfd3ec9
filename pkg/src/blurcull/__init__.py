"""Blur-aware dataset curation and detection evaluation.

Scores image sharpness by the variance of the Laplacian response, culls
low-scoring images from detection training sets over a threshold grid,
synthesizes seeded blur corpora, and evaluates detections with a
from-scratch COCO-style AP metric.
"""

from .apeval import ApResult, Detection, average_precision, evaluate, iou, match_detections
from .blur import (
    BlurScore,
    BoxBlur,
    DegradationSpec,
    GaussianBlur,
    MotionBlur,
    blur_score,
    degrade,
    is_rejected,
    make_kernel,
)
from .dataset import (
    Annotation,
    Box,
    DatasetManifest,
    FilterReport,
    ImageRecord,
    count_table,
    filter_training,
    load_manifest,
    save_manifest,
)
from .errors import DataError, DetectorHookError
from .images import (
    BorderMode,
    Kernel,
    KernelClass,
    convolve,
    decode_image,
    encode_pgm,
    laplacian_kernel,
    variance,
)
from .jsonio import TOOL_VERSION
from .stub import stub_detect
from .sweep import SweepConfig, SweepReport, emit_tables, run_score, run_sweep
from .synth import SynthConfig, generate_corpus

__version__ = TOOL_VERSION
