"""
Pose evaluation measures: MPJPE, PA-MPJPE, OKS and OKS-thresholded AP/AR.

AP/AR follow the COCO keypoint protocol: greedy score-ordered matching per
image at OKS thresholds 0.50:0.05:0.95, 101-point interpolated precision and
at most 20 detections per image. Crowd and ignore regions are not modelled.
"""

import logging
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

COCO_DEFAULT_SIGMA = 0.079
OKS_THRESHOLDS = np.round(np.arange(0.50, 0.951, 0.05), 2)
RECALL_POINTS = np.linspace(0.0, 1.0, 101)
MAX_DETECTIONS = 20


class MetricError(Exception):
    """Raised for invalid metric inputs."""

    pass


class UndefinedMetricError(MetricError):
    """Raised when a metric has no defined value (no labelled joints, no groundtruth)."""

    pass


class DegenerateAlignmentError(MetricError):
    """Raised when Procrustes alignment is undefined (groundtruth without spread)."""

    pass


def _as_joints(values: np.ndarray, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 2 or array.shape[1] != 3:
        raise MetricError(f"{name} must have shape (J, 3), got {array.shape}")
    if not np.all(np.isfinite(array)):
        raise MetricError(f"{name} contains NaN or infinite values")
    return array


def _check_pair(pred: np.ndarray, gt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = _as_joints(pred, "pred")
    gt = _as_joints(gt, "gt")
    if pred.shape != gt.shape:
        raise MetricError(f"Joint counts differ: pred {pred.shape[0]}, gt {gt.shape[0]}")
    return pred, gt


# ═══════════════════════════════════════════════════════════════
# 3D METRICS
# ═══════════════════════════════════════════════════════════════


def per_joint_errors(pred: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """Euclidean error of each joint, shape (J,)."""
    pred, gt = _check_pair(pred, gt)
    return np.linalg.norm(pred - gt, axis=-1)


def mpjpe(pred: np.ndarray, gt: np.ndarray) -> float:
    """
    Mean per-joint position error in the units of the input (millimeters).

    Raises:
        MetricError: On shape mismatch or non-finite input
    """
    return float(np.mean(per_joint_errors(pred, gt)))


def procrustes_align(pred: np.ndarray, gt: np.ndarray, scale: bool = True) -> np.ndarray:
    """
    Align pred onto gt with the optimal similarity transform (Umeyama).

    Reflections are excluded by the determinant correction.

    Args:
        pred: Predicted joints (J, 3)
        gt: Groundtruth joints (J, 3)
        scale: Include uniform scale; False gives a rigid alignment

    Returns:
        Aligned prediction (J, 3)

    Raises:
        DegenerateAlignmentError: If gt has zero variance
    """
    pred, gt = _check_pair(pred, gt)
    mu_pred = pred.mean(axis=0)
    mu_gt = gt.mean(axis=0)
    x = pred - mu_pred
    y = gt - mu_gt

    if np.sum(y**2) <= np.finfo(np.float64).tiny:
        raise DegenerateAlignmentError("Groundtruth joints coincide; alignment is undefined")

    var_pred = np.sum(x**2) / len(pred)
    cov = y.T @ x / len(pred)
    U, S, Vt = np.linalg.svd(cov)
    D = np.eye(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        D[2, 2] = -1.0
    R = U @ D @ Vt

    s = 1.0
    if scale:
        s = float(np.sum(S * np.diag(D)) / var_pred) if var_pred > 0 else 0.0
    return s * x @ R.T + mu_gt


def pa_mpjpe(pred: np.ndarray, gt: np.ndarray, scale: bool = True) -> float:
    """MPJPE after Procrustes alignment of pred onto gt."""
    return mpjpe(procrustes_align(pred, gt, scale=scale), gt)


# ═══════════════════════════════════════════════════════════════
# 2D METRICS
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class Detection2D:
    """Detected person: keypoints (J, 2) px, per-keypoint confidences (J,) and a score."""

    image_id: int
    keypoints: np.ndarray
    score: float = 1.0
    keypoint_scores: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class GroundTruth2D:
    """Annotated person: keypoints (J, 3) as [u, v, vis] and the bbox area in px²."""

    image_id: int
    keypoints: np.ndarray
    area: float

    @property
    def labelled(self) -> np.ndarray:
        return np.asarray(self.keypoints)[:, 2] > 0


@dataclass(eq=False)
class APARResult:
    """AP and AR averaged over thresholds, plus the per-threshold table."""

    ap: float
    ar: float
    per_threshold: pd.DataFrame
    n_groundtruth: int
    n_detections: int


def default_sigmas(num_joints: int) -> np.ndarray:
    return np.full(num_joints, COCO_DEFAULT_SIGMA)


def oks(
    det_keypoints: np.ndarray,
    gt_keypoints: np.ndarray,
    area: float,
    sigmas: Sequence[float] | np.ndarray | None = None,
) -> float:
    """
    Object keypoint similarity, mean over labelled joints of exp(-d² / (2 area k²)), k = 2 sigma.

    Args:
        det_keypoints: Detected keypoints (J, 2) or (J, 3); only u, v are used
        gt_keypoints: Groundtruth (J, 3) as [u, v, vis]; vis = 0 joints are excluded
        area: Object area in px²
        sigmas: Per-joint sigmas (default 0.079 each)

    Returns:
        OKS in [0, 1]

    Raises:
        UndefinedMetricError: If no groundtruth joint is labelled
        MetricError: If area or sigmas are not positive
    """
    det = np.asarray(det_keypoints, dtype=np.float64)
    gt = np.asarray(gt_keypoints, dtype=np.float64)
    if det.shape[0] != gt.shape[0]:
        raise MetricError(f"Joint counts differ: det {det.shape[0]}, gt {gt.shape[0]}")
    if not area > 0:
        raise MetricError(f"OKS needs a positive area, got {area}")
    sig = default_sigmas(gt.shape[0]) if sigmas is None else np.asarray(sigmas, dtype=np.float64)
    if sig.shape != (gt.shape[0],) or np.any(sig <= 0):
        raise MetricError("sigmas must be positive, one per joint")

    labelled = gt[:, 2] > 0
    if not np.any(labelled):
        raise UndefinedMetricError("OKS is undefined when no groundtruth joint is labelled")

    d2 = np.sum((det[:, :2] - gt[:, :2]) ** 2, axis=-1)
    k = 2.0 * sig
    e = d2 / (2.0 * area * k**2)
    return float(np.mean(np.exp(-e[labelled])))


def _match_image(
    dets: list[Detection2D],
    gts: list[GroundTruth2D],
    sigmas: np.ndarray,
) -> np.ndarray:
    """Boolean (thresholds, dets) true-positive table for dets sorted by score."""
    matched = np.zeros((len(OKS_THRESHOLDS), len(dets)), dtype=bool)
    if not gts or not dets:
        return matched

    similarity = np.array(
        [[oks(det.keypoints, gt.keypoints, gt.area, sigmas) for gt in gts] for det in dets]
    )
    for t, threshold in enumerate(OKS_THRESHOLDS):
        taken = np.zeros(len(gts), dtype=bool)
        for d in range(len(dets)):
            candidates = np.where(taken, -1.0, similarity[d])
            best = int(np.argmax(candidates))
            if candidates[best] >= threshold:
                taken[best] = True
                matched[t, d] = True
    return matched


def _interpolated_precision(tp: np.ndarray, n_gt: int) -> tuple[float, float]:
    if tp.size == 0:
        return 0.0, 0.0
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(~tp)
    recall = tp_cum / n_gt
    precision = tp_cum / (tp_cum + fp_cum)
    # precision envelope, non-increasing in recall
    precision = np.maximum.accumulate(precision[::-1])[::-1]

    positions = np.searchsorted(recall, RECALL_POINTS, side="left")
    sampled = np.where(positions < len(precision), precision[np.minimum(positions, len(precision) - 1)], 0.0)
    return float(np.mean(sampled)), float(recall[-1])


def ap_ar(
    dets: Sequence[Detection2D],
    gts: Sequence[GroundTruth2D],
    sigmas: Sequence[float] | np.ndarray | None = None,
    max_dets: int = MAX_DETECTIONS,
) -> APARResult:
    """
    COCO-style keypoint AP and AR.

    Groundtruth without labelled joints or with zero area cannot be scored
    and is left out; detections on images without scorable groundtruth are
    false positives.

    Args:
        dets: Detections over all images
        gts: Groundtruth over all images
        sigmas: Per-joint OKS sigmas (default 0.079 each)
        max_dets: Highest-scoring detections kept per image

    Returns:
        APARResult

    Raises:
        UndefinedMetricError: If there is no scorable groundtruth
    """
    scorable = [gt for gt in gts if gt.area > 0 and np.any(gt.labelled)]
    if not scorable:
        raise UndefinedMetricError("AP/AR are undefined without labelled groundtruth")
    n_joints = np.asarray(scorable[0].keypoints).shape[0]
    sig = default_sigmas(n_joints) if sigmas is None else np.asarray(sigmas, dtype=np.float64)

    gts_by_image: dict[int, list[GroundTruth2D]] = defaultdict(list)
    for gt in scorable:
        gts_by_image[gt.image_id].append(gt)
    dets_by_image: dict[int, list[Detection2D]] = defaultdict(list)
    for det in dets:
        dets_by_image[det.image_id].append(det)

    scores: list[np.ndarray] = []
    tps: list[np.ndarray] = []
    for image_id, image_dets in dets_by_image.items():
        ranked = sorted(image_dets, key=lambda det: -det.score)[:max_dets]
        tps.append(_match_image(ranked, gts_by_image.get(image_id, []), sig))
        scores.append(np.array([det.score for det in ranked]))

    rows = []
    if scores:
        all_scores = np.concatenate(scores)
        all_tp = np.concatenate(tps, axis=1)
        order = np.argsort(-all_scores, kind="mergesort")
        all_tp = all_tp[:, order]
    for t, threshold in enumerate(OKS_THRESHOLDS):
        tp = all_tp[t] if scores else np.zeros(0, dtype=bool)
        ap, ar = _interpolated_precision(tp, len(scorable))
        rows.append({"threshold": float(threshold), "ap": ap, "ar": ar})

    table = pd.DataFrame(rows)
    result = APARResult(
        ap=float(table["ap"].mean()),
        ar=float(table["ar"].mean()),
        per_threshold=table,
        n_groundtruth=len(scorable),
        n_detections=int(sum(len(s) for s in scores)),
    )
    logger.debug(f"🐞 AP={result.ap:.4f} AR={result.ar:.4f} over {result.n_groundtruth} groundtruth")
    return result
