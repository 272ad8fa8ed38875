"""Pose-estimation metrics and evaluation reports."""

from src.evaluation.metrics import (
    COCO_DEFAULT_SIGMA,
    APARResult,
    DegenerateAlignmentError,
    Detection2D,
    GroundTruth2D,
    MetricError,
    UndefinedMetricError,
    ap_ar,
    mpjpe,
    oks,
    pa_mpjpe,
    procrustes_align,
)
from src.evaluation.report import EvaluationInputError, load_predictions, run_eval

__all__ = [
    "COCO_DEFAULT_SIGMA",
    "APARResult",
    "DegenerateAlignmentError",
    "Detection2D",
    "EvaluationInputError",
    "GroundTruth2D",
    "MetricError",
    "UndefinedMetricError",
    "ap_ar",
    "load_predictions",
    "mpjpe",
    "oks",
    "pa_mpjpe",
    "procrustes_align",
    "run_eval",
]
