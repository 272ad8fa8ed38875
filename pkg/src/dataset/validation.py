"""Dataset validation: schema conformance, file existence and annotation invariants."""

import json
import logging
from pathlib import Path
from typing import Any, Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from src.dataset.annotation import NUM_JOINTS, VIS_OUTSIDE, RenderSetRecord
from src.dataset.writer import ANNOTATION_FILE, INDEX_FILE, SPLITS, TRAIN_SPLIT, DatasetReadError
from src.geometry.fisheye import project_points
from src.geometry.rig import RIG_SIZE

logger = logging.getLogger(__name__)

REPROJECTION_TOLERANCE = 1e-6  # pixels

ViolationKind = Literal["schema", "missing_file", "invariant"]


class Violation(BaseModel):
    """One problem found in a dataset, located by file and JSON path."""

    kind: ViolationKind
    path: str
    message: str


class ValidationReport(BaseModel):
    """Machine-readable result of validate_dataset."""

    root: str
    sets_checked: int = 0
    violations: list[Violation] = []

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, kind: ViolationKind, path: str, message: str) -> None:
        self.violations.append(Violation(kind=kind, path=path, message=message))

    def counts(self) -> dict[str, int]:
        counts = {"schema": 0, "missing_file": 0, "invariant": 0}
        for violation in self.violations:
            counts[violation.kind] += 1
        return counts

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame(
            [v.model_dump() for v in self.violations], columns=["kind", "path", "message"]
        )


def _format_errors(error: ValidationError) -> str:
    parts = []
    for detail in error.errors():
        location = "/".join(str(p) for p in detail["loc"])
        parts.append(f"/{location}: {detail['msg']}")
    return "; ".join(parts)


# ═══════════════════════════════════════════════════════════════
# PER-SET CHECKS
# ═══════════════════════════════════════════════════════════════


def _check_files(record: RenderSetRecord, directory: Path, rel: str, report: ValidationReport) -> None:
    for view in record.views:
        for name in (view.image, view.mask, view.alpha):
            if name is not None and not (directory / name).is_file():
                report.add("missing_file", f"{rel}/{name}", f"File of camera {view.camera_index} is missing")


def _check_invariants(record: RenderSetRecord, rel: str, report: ValidationReport) -> None:
    where = f"{rel}/{ANNOTATION_FILE}"
    joints = record.joints

    indices = [view.camera_index for view in record.views]
    if indices != list(range(RIG_SIZE)):
        report.add("invariant", f"{where}#/views", f"Camera indices must be 0..8 in order, got {indices}")

    for view in record.views:
        if not 0 <= view.camera_index < len(record.cameras):
            continue
        cam = record.cameras[view.camera_index].to_camera()
        intr = cam.intrinsics
        pointer = f"{where}#/views/{view.camera_index}"
        batch = project_points(joints, cam)

        stored = np.array([[kp.u, kp.v] for kp in view.keypoints])
        error = np.max(np.abs(stored - np.stack([batch.u, batch.v], axis=-1)), axis=-1)
        for j in np.flatnonzero(error > REPROJECTION_TOLERANCE):
            report.add(
                "invariant",
                f"{pointer}/keypoints/{j}",
                f"Stored keypoint differs from reprojection by {error[j]:.3e} px",
            )

        for j, kp in enumerate(view.keypoints):
            if kp.vis != VIS_OUTSIDE and not batch.valid[j]:
                report.add(
                    "invariant",
                    f"{pointer}/keypoints/{j}",
                    f"Keypoint marked vis={kp.vis} lies outside the image or image circle",
                )

        if view.bbox is not None:
            x, y, w, h = view.bbox
            if x + w > intr.width or y + h > intr.height:
                report.add(
                    "invariant",
                    f"{pointer}/bbox",
                    f"bbox {view.bbox} exceeds the {intr.width}x{intr.height} image",
                )


def _check_set(path: Path, root: Path, report: ValidationReport) -> RenderSetRecord | None:
    rel = path.parent.relative_to(root).as_posix()
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        report.add("schema", f"{rel}/{ANNOTATION_FILE}", f"Unreadable annotation record: {e}")
        return None

    try:
        record = RenderSetRecord.model_validate(payload)
    except ValidationError as e:
        report.add("schema", f"{rel}/{ANNOTATION_FILE}", _format_errors(e))
        return None

    _check_files(record, path.parent, rel, report)
    _check_invariants(record, rel, report)
    return record


def _check_index(root: Path, n_sets: int, report: ValidationReport) -> None:
    path = root / INDEX_FILE
    if not path.is_file():
        report.add("missing_file", INDEX_FILE, "Dataset index is missing")
        return
    try:
        index: dict[str, Any] = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        report.add("schema", INDEX_FILE, f"Unreadable index: {e}")
        return

    expected = RIG_SIZE * n_sets
    for key in ("images", "annotations"):
        entries = index.get(key)
        if not isinstance(entries, list):
            report.add("schema", f"{INDEX_FILE}#/{key}", f"Index has no '{key}' list")
        elif len(entries) != expected:
            report.add(
                "invariant",
                f"{INDEX_FILE}#/{key}",
                f"Index lists {len(entries)} {key}, expected {expected} for {n_sets} sets",
            )

    for position, image in enumerate(index.get("images") or []):
        if isinstance(image, dict) and image.get("split", TRAIN_SPLIT) not in SPLITS:
            report.add("schema", f"{INDEX_FILE}#/images/{position}/split", f"Unknown split {image.get('split')!r}")

    for position, annotation in enumerate(index.get("annotations") or []):
        keypoints = annotation.get("keypoints") if isinstance(annotation, dict) else None
        if not isinstance(keypoints, list) or len(keypoints) != 3 * NUM_JOINTS:
            report.add(
                "schema",
                f"{INDEX_FILE}#/annotations/{position}/keypoints",
                f"Expected {3 * NUM_JOINTS} flattened keypoint values",
            )


def validate_dataset(root: str | Path) -> ValidationReport:
    """
    Check a generated dataset.

    Every ``annotation.json`` below root is parsed against the record schema
    (one schema violation per invalid record), its referenced files must
    exist, stored keypoints must reproduce the projection of the stored
    joints through the stored cameras, visibility must agree with the image
    bounds, and bboxes must lie inside the image. The index must list nine
    images and annotations per set.

    Args:
        root: Dataset root

    Returns:
        ValidationReport listing every violation

    Raises:
        DatasetReadError: If root does not exist
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetReadError(f"Dataset root does not exist: {root}")

    report = ValidationReport(root=str(root))
    record_files = sorted(root.rglob(ANNOTATION_FILE))
    for path in record_files:
        _check_set(path, root, report)
    report.sets_checked = len(record_files)
    _check_index(root, len(record_files), report)

    if report.ok:
        logger.info(f"✅ Dataset {root} valid: {report.sets_checked} sets")
    else:
        logger.warning(f"⚠️ Dataset {root}: {len(report.violations)} violations {report.counts()}")
    return report
