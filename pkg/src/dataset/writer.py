"""Dataset layout on disk: render-set directories and the COCO-style index."""

import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from src.dataset.annotation import (
    NUM_JOINTS,
    SMPL_JOINT_NAMES,
    SMPL_PARENTS,
    RenderSetRecord,
    joints_in_camera_mm,
)
from src.rendering.images import save_alpha16, save_mask, save_rgb
from src.rendering.renderer import RenderOutput

logger = logging.getLogger(__name__)

ANNOTATION_FILE = "annotation.json"
INDEX_FILE = "index.json"
PERSON_CATEGORY_ID = 1
TRAIN_SPLIT = "train"
VAL_SPLIT = "val"
SPLITS = (TRAIN_SPLIT, VAL_SPLIT)


class DatasetError(Exception):
    """Base error for dataset files."""

    pass


class DatasetWriteError(DatasetError):
    """Raised when writing a render set or the index fails; carries the failing path."""

    def __init__(self, message: str, path: Path) -> None:
        super().__init__(f"{message}: {path}")
        self.path = path


class DatasetReadError(DatasetError):
    """Raised when a dataset root or record cannot be read."""

    pass


def pass_dir_name(h: float, R_circle: float) -> str:
    return f"{h:.2f}_{R_circle:.2f}"


def set_dir(root: str | Path, actor: str, h: float, R_circle: float, frame_id: int) -> Path:
    """``{root}/{actor}/{h}_{R}/{frame:06}``"""
    return Path(root) / actor / pass_dir_name(h, R_circle) / f"{frame_id:06d}"


def _write_json_atomic(path: Path, payload: Any) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    os.replace(tmp, path)


@dataclass
class RenderSetManifest:
    """Files written for one set, relative to the dataset root."""

    set_dir: Path
    images: list[str] = field(default_factory=list)
    masks: list[str] = field(default_factory=list)
    alphas: list[str] = field(default_factory=list)
    annotation: str = ""

    @property
    def file_count(self) -> int:
        return len(self.images) + len(self.masks) + len(self.alphas) + (1 if self.annotation else 0)


def write_render_set(
    root: str | Path,
    outputs: list[RenderOutput],
    record: RenderSetRecord,
    index: "DatasetIndex | None" = None,
) -> RenderSetManifest:
    """
    Write one set: 9 RGB images, 9 masks, optional alphas and the annotation record.

    On failure every file of the set written so far is removed.

    Args:
        root: Dataset root
        outputs: Nine render outputs in rig order
        record: Annotation record naming the files
        index: Index to register the set in (saved by the caller)

    Returns:
        RenderSetManifest

    Raises:
        DatasetWriteError: On any I/O failure, with the failing path
    """
    root = Path(root)
    if len(outputs) != len(record.views):
        raise ValueError(f"Expected {len(record.views)} render outputs, got {len(outputs)}")

    directory = set_dir(root, record.actor, record.rig.h, record.rig.R_circle, record.frame_id)
    manifest = RenderSetManifest(set_dir=directory.relative_to(root))
    written: list[Path] = []
    current = directory

    try:
        directory.mkdir(parents=True, exist_ok=True)
        for output, view in zip(outputs, record.views, strict=True):
            current = directory / view.image
            written.append(save_rgb(current, output.rgb))
            manifest.images.append(str(current.relative_to(root)))

            current = directory / view.mask
            written.append(save_mask(current, output.mask))
            manifest.masks.append(str(current.relative_to(root)))

            if view.alpha is not None:
                current = directory / view.alpha
                written.append(save_alpha16(current, output.alpha))
                manifest.alphas.append(str(current.relative_to(root)))

        current = directory / ANNOTATION_FILE
        _write_json_atomic(current, record.model_dump(mode="json"))
        written.append(current)
        manifest.annotation = str(current.relative_to(root))
    except OSError as e:
        for path in written:
            path.unlink(missing_ok=True)
        logger.error(f"❌ Failed writing render set {directory}: {e}")
        raise DatasetWriteError(f"Cannot write render set file ({e.strerror or e})", current) from e

    if index is not None:
        index.add_render_set(record, manifest.set_dir)

    logger.debug(f"🐞 Wrote {manifest.file_count} files to {directory}")
    return manifest


def read_render_set(directory: str | Path) -> RenderSetRecord:
    """
    Read the annotation record of a set directory.

    Raises:
        DatasetReadError: If the record is missing or invalid
    """
    path = Path(directory) / ANNOTATION_FILE
    try:
        return RenderSetRecord.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise DatasetReadError(f"Cannot read {path}: {e}") from e
    except ValidationError as e:
        raise DatasetReadError(f"Invalid annotation record {path}: {e}") from e


# ═══════════════════════════════════════════════════════════════
# INDEX
# ═══════════════════════════════════════════════════════════════


def _max_id(entries: list[dict[str, Any]]) -> int:
    return max((int(entry["id"]) for entry in entries), default=0)


def person_category() -> dict[str, Any]:
    """COCO keypoint category for the 24 SMPL joints (skeleton edges are 1-based)."""
    return {
        "id": PERSON_CATEGORY_ID,
        "name": "person",
        "supercategory": "person",
        "keypoints": list(SMPL_JOINT_NAMES),
        "skeleton": [[child + 1, parent + 1] for child, parent in enumerate(SMPL_PARENTS) if parent >= 0],
    }


class DatasetIndex:
    """
    COCO-style keypoint index over every set of a dataset.

    One image and one annotation entry per camera. Registering a set that is
    already indexed replaces its entries, so reruns do not duplicate. Ids are
    never reused. Every image carries a ``split`` derived from its actor: the
    actors listed in ``info.val_actors`` are validation, all others training.
    Single writer: only the render loop and ``assign_splits`` mutate and save
    the index.
    """

    def __init__(self, root: str | Path, data: dict[str, Any] | None = None) -> None:
        self.root = Path(root)
        self.data = data or {
            "info": {"description": "Top-view fisheye render sets", "version": "1.0"},
            "categories": [person_category()],
            "images": [],
            "annotations": [],
        }
        self._next_image_id = _max_id(self.images) + 1
        self._next_annotation_id = _max_id(self.annotations) + 1

    @property
    def path(self) -> Path:
        return self.root / INDEX_FILE

    @property
    def images(self) -> list[dict[str, Any]]:
        return self.data["images"]  # type: ignore[no-any-return]

    @property
    def annotations(self) -> list[dict[str, Any]]:
        return self.data["annotations"]  # type: ignore[no-any-return]

    @classmethod
    def load(cls, root: str | Path) -> "DatasetIndex":
        """Load the index of a dataset root, or start an empty one."""
        path = Path(root) / INDEX_FILE
        if not path.exists():
            return cls(root)
        try:
            return cls(root, json.loads(path.read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as e:
            raise DatasetReadError(f"Cannot read index {path}: {e}") from e

    @property
    def val_actors(self) -> list[str]:
        return list(self.data["info"].get("val_actors", []))

    def split_of(self, actor: str) -> str:
        return VAL_SPLIT if actor in self.val_actors else TRAIN_SPLIT

    def assign_splits(self, val_actors: list[str]) -> dict[str, int]:
        """
        Split the dataset by actor and label every image entry.

        Args:
            val_actors: Actors held out for validation

        Returns:
            Image count per split
        """
        known = {str(img["actor"]) for img in self.images}
        for actor in sorted(set(val_actors) - known):
            logger.warning(f"⚠️ Validation actor '{actor}' has no images in {self.root}")
        self.data["info"]["val_actors"] = sorted(set(val_actors))
        for img in self.images:
            img["split"] = self.split_of(str(img["actor"]))
        counts = {split: sum(1 for img in self.images if img["split"] == split) for split in SPLITS}
        logger.info(f"ℹ️ Split {self.root}: {counts[TRAIN_SPLIT]} train, {counts[VAL_SPLIT]} val images")
        return counts

    def subset(self, split: str) -> "DatasetIndex":
        """In-memory index restricted to one split."""
        images = [img for img in self.images if img.get("split", self.split_of(str(img["actor"]))) == split]
        ids = {img["id"] for img in images}
        data = {
            **self.data,
            "images": images,
            "annotations": [a for a in self.annotations if a["image_id"] in ids],
        }
        return DatasetIndex(self.root, data)

    def add_render_set(self, record: RenderSetRecord, set_dir_rel: Path) -> None:
        """Register the nine views of a set."""
        prefix = f"{set_dir_rel.as_posix()}/"
        stale = {img["id"] for img in self.images if str(img["file_name"]).startswith(prefix)}
        if stale:
            self.data["images"] = [img for img in self.images if img["id"] not in stale]
            self.data["annotations"] = [a for a in self.annotations if a["image_id"] not in stale]

        joints = record.joints
        for view, cam_record in zip(record.views, record.cameras, strict=True):
            image_id = self._next_image_id
            self._next_image_id += 1
            self.images.append(
                {
                    "id": image_id,
                    "file_name": f"{prefix}{view.image}",
                    "mask_file": f"{prefix}{view.mask}",
                    "width": cam_record.width,
                    "height": cam_record.height,
                    "actor": record.actor,
                    "frame_id": record.frame_id,
                    "camera": view.camera_name,
                    "camera_index": view.camera_index,
                    "h": record.rig.h,
                    "R_circle": record.rig.R_circle,
                    "split": self.split_of(record.actor),
                }
            )

            flat: list[float] = []
            for kp in view.keypoints:
                flat.extend([kp.u, kp.v, kp.vis])
            bbox = view.bbox or [0, 0, 0, 0]
            keypoints_cam = joints_in_camera_mm(joints, cam_record.to_camera())
            self.annotations.append(
                {
                    "id": self._next_annotation_id,
                    "image_id": image_id,
                    "category_id": PERSON_CATEGORY_ID,
                    "keypoints": flat,
                    "num_keypoints": sum(1 for kp in view.keypoints if kp.vis > 0),
                    "bbox": bbox,
                    "area": bbox[2] * bbox[3],
                    "iscrowd": 0,
                    "keypoints_3d": record.joints_3d,
                    "keypoints_cam": keypoints_cam.tolist(),
                }
            )
            self._next_annotation_id += 1

    def save(self) -> Path:
        """Atomically replace the index file."""
        self.root.mkdir(parents=True, exist_ok=True)
        self.data["info"]["date_created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        try:
            _write_json_atomic(self.path, self.data)
        except OSError as e:
            raise DatasetWriteError(f"Cannot write index ({e.strerror or e})", self.path) from e
        logger.debug(f"🐞 Index saved: {len(self.images)} images")
        return self.path

    def keypoints_array(self, annotation: dict[str, Any]) -> np.ndarray:
        """Annotation keypoints as (24, 3) [u, v, vis]."""
        return np.asarray(annotation["keypoints"], dtype=np.float64).reshape(NUM_JOINTS, 3)
