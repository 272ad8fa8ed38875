"""Evaluation of prediction files against a generated dataset's index."""

import json
import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.dataset.annotation import NUM_JOINTS, SMPL_JOINT_NAMES
from src.dataset.writer import DatasetIndex, DatasetReadError
from src.evaluation.metrics import (
    Detection2D,
    GroundTruth2D,
    ap_ar,
    mpjpe,
    pa_mpjpe,
    per_joint_errors,
)

logger = logging.getLogger(__name__)

EvalMode = Literal["2d", "3d"]


class EvaluationInputError(Exception):
    """Raised when predictions or groundtruth do not match the expected schema."""

    pass


# ═══════════════════════════════════════════════════════════════
# PREDICTION SCHEMAS
# ═══════════════════════════════════════════════════════════════


class DetectionRecord(BaseModel):
    """COCO result entry: keypoints flattened as [u, v, confidence] * 24."""

    model_config = ConfigDict(extra="forbid")

    image_id: int
    category_id: int = 1
    keypoints: list[float]
    score: float = Field(ge=0, le=1)

    @field_validator("keypoints")
    @classmethod
    def validate_keypoints(cls, v: list[float]) -> list[float]:
        if len(v) != 3 * NUM_JOINTS:
            raise ValueError(f"Expected {3 * NUM_JOINTS} values (24 joints x [u, v, c]), got {len(v)}")
        values = np.asarray(v, dtype=np.float64).reshape(NUM_JOINTS, 3)
        if not np.all(np.isfinite(values[:, :2])):
            raise ValueError("Keypoint coordinates must be finite")
        if np.any((values[:, 2] < 0) | (values[:, 2] > 1)):
            raise ValueError("Keypoint confidences must lie in [0, 1]")
        return v

    def to_detection(self) -> Detection2D:
        values = np.asarray(self.keypoints, dtype=np.float64).reshape(NUM_JOINTS, 3)
        return Detection2D(
            image_id=self.image_id,
            keypoints=values[:, :2],
            score=self.score,
            keypoint_scores=values[:, 2],
        )


class PoseRecord(BaseModel):
    """3D estimate for one image: 24 camera-frame joints in millimeters."""

    model_config = ConfigDict(extra="forbid")

    image_id: int
    joints: list[list[float]]

    @field_validator("joints")
    @classmethod
    def validate_joints(cls, v: list[list[float]]) -> list[list[float]]:
        if len(v) != NUM_JOINTS or any(len(row) != 3 for row in v):
            raise ValueError(f"Expected {NUM_JOINTS}x3 joints, got {len(v)} rows")
        if not np.all(np.isfinite(np.asarray(v, dtype=np.float64))):
            raise ValueError("Joints must be finite")
        return v


class Predictions2D(BaseModel):
    model_config = ConfigDict(extra="forbid")

    detections: list[DetectionRecord]


class Predictions3D(BaseModel):
    model_config = ConfigDict(extra="forbid")

    estimates: list[PoseRecord]


def load_predictions(path: str | Path, mode: EvalMode) -> Predictions2D | Predictions3D:
    """
    Read a prediction file.

    Raises:
        EvaluationInputError: If the file is unreadable or does not match the schema
    """
    path = Path(path)
    schema: type[Predictions2D] | type[Predictions3D] = Predictions2D if mode == "2d" else Predictions3D
    try:
        return schema.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise EvaluationInputError(f"Cannot read predictions {path}: {e}") from e
    except ValidationError as e:
        raise EvaluationInputError(f"Predictions {path} do not match the {mode} schema: {e}") from e


# ═══════════════════════════════════════════════════════════════
# EVALUATION
# ═══════════════════════════════════════════════════════════════


def _load_index(gt_root: str | Path) -> DatasetIndex:
    index = DatasetIndex.load(gt_root)
    if not index.path.exists():
        raise DatasetReadError(f"No dataset index under {gt_root}")
    return index


def groundtruth_2d(index: DatasetIndex) -> list[GroundTruth2D]:
    """One GroundTruth2D per indexed view; OKS area is the bbox area."""
    return [
        GroundTruth2D(
            image_id=int(annotation["image_id"]),
            keypoints=index.keypoints_array(annotation),
            area=float(annotation["area"]),
        )
        for annotation in index.annotations
    ]


def groundtruth_3d(index: DatasetIndex) -> dict[int, np.ndarray]:
    """Camera-frame joints (mm) per image id."""
    return {
        int(annotation["image_id"]): np.asarray(annotation["keypoints_cam"], dtype=np.float64)
        for annotation in index.annotations
    }


def evaluate_2d(predictions: Predictions2D, index: DatasetIndex) -> dict[str, Any]:
    result = ap_ar([record.to_detection() for record in predictions.detections], groundtruth_2d(index))
    return {
        "mode": "2d",
        "ap": result.ap,
        "ar": result.ar,
        "per_threshold": result.per_threshold.to_dict(orient="records"),
        "n_groundtruth": result.n_groundtruth,
        "n_detections": result.n_detections,
        "oks_area": "bbox",
    }


def evaluate_3d(predictions: Predictions3D, index: DatasetIndex) -> dict[str, Any]:
    gt = groundtruth_3d(index)
    if not predictions.estimates:
        raise EvaluationInputError("No 3D estimates to evaluate")

    errors, pa_errors, joint_errors = [], [], []
    for estimate in predictions.estimates:
        if estimate.image_id not in gt:
            raise EvaluationInputError(f"Estimate for unknown image_id {estimate.image_id}")
        pred = np.asarray(estimate.joints, dtype=np.float64)
        target = gt[estimate.image_id]
        errors.append(mpjpe(pred, target))
        pa_errors.append(pa_mpjpe(pred, target))
        joint_errors.append(per_joint_errors(pred, target))

    per_joint = pd.Series(np.mean(joint_errors, axis=0), index=list(SMPL_JOINT_NAMES))
    return {
        "mode": "3d",
        "mpjpe_mm": float(np.mean(errors)),
        "pa_mpjpe_mm": float(np.mean(pa_errors)),
        "samples": len(errors),
        "per_joint_mpjpe_mm": per_joint.to_dict(),
    }


def _restrict(
    predictions: Predictions2D | Predictions3D, image_ids: set[int]
) -> Predictions2D | Predictions3D:
    """Drop predictions for images outside the scored split."""
    if isinstance(predictions, Predictions2D):
        return Predictions2D(detections=[d for d in predictions.detections if d.image_id in image_ids])
    return Predictions3D(estimates=[e for e in predictions.estimates if e.image_id in image_ids])


def run_eval(
    pred_file: str | Path,
    gt_root: str | Path,
    mode: EvalMode,
    out: str | Path | None = None,
    split: str | None = None,
) -> dict[str, Any]:
    """
    Evaluate predictions against a dataset and optionally write the report.

    Args:
        pred_file: Prediction file (2d: detections, 3d: estimates)
        gt_root: Dataset root with index.json
        mode: "2d" for AP/AR, "3d" for MPJPE / PA-MPJPE
        out: Report destination (JSON)
        split: Only score groundtruth images of this split ("train" or "val")

    Returns:
        Report dictionary

    Raises:
        EvaluationInputError: On schema mismatch
        DatasetReadError: If the dataset index is missing
    """
    predictions = load_predictions(pred_file, mode)
    index = _load_index(gt_root)
    if split is not None:
        index = index.subset(split)
        predictions = _restrict(predictions, {int(img["id"]) for img in index.images})
        logger.info(f"ℹ️ Scoring the '{split}' split: {len(index.images)} images")

    if isinstance(predictions, Predictions2D):
        report = evaluate_2d(predictions, index)
        logger.info(f"✅ 2D evaluation: AP={report['ap']:.4f} AR={report['ar']:.4f}")
    else:
        report = evaluate_3d(predictions, index)
        logger.info(
            f"✅ 3D evaluation: MPJPE={report['mpjpe_mm']:.2f} mm "
            f"PA-MPJPE={report['pa_mpjpe_mm']:.2f} mm over {report['samples']} samples"
        )
    if split is not None:
        report["split"] = split

    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report, indent=2), encoding="utf-8")
        logger.info(f"ℹ️ Report written to {out}")
    return report
