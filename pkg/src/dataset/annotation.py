"""Groundtruth keypoint annotations for rendered top-view sets."""

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.geometry.camera_io import CameraRecord
from src.geometry.fisheye import Camera, Ray, project_points, world_to_camera
from src.geometry.rig import RenderRig
from src.rendering.fields import RadianceField
from src.rendering.renderer import RenderOptions, transmittance

logger = logging.getLogger(__name__)

# ═══════════════════════════════════════════════════════════════
# SMPL SKELETON
# ═══════════════════════════════════════════════════════════════

SMPL_JOINT_NAMES = (
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hand",
    "right_hand",
)
NUM_JOINTS = len(SMPL_JOINT_NAMES)
NUM_BETAS = 10
PELVIS_INDEX = 0

# Kinematic tree parent of each joint (-1 for the root)
SMPL_PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21)

# Left/right joint pairs, used for mirror checks
SMPL_FLIP_PAIRS = ((1, 2), (4, 5), (7, 8), (10, 11), (13, 14), (16, 17), (18, 19), (20, 21), (22, 23))

VIS_OUTSIDE = 0
VIS_OCCLUDED = 1
VIS_VISIBLE = 2

OCCLUSION_MARGIN = 0.01  # meters
OCCLUSION_THRESHOLD = 0.5


class GroundTruthError(Exception):
    """Raised when a groundtruth sequence file cannot be read."""

    pass


def _check_matrix(value: list[list[float]], rows: int, name: str) -> list[list[float]]:
    if len(value) != rows or any(len(row) != 3 for row in value):
        raise ValueError(f"{name} must be {rows}x3, got {len(value)} rows")
    if not all(math.isfinite(x) for row in value for x in row):
        raise ValueError(f"{name} contains non-finite values")
    return value


# ═══════════════════════════════════════════════════════════════
# GROUNDTRUTH INPUT
# ═══════════════════════════════════════════════════════════════


class FrameGroundTruth(BaseModel):
    """
    One mocap frame: 24 world-space joints plus SMPL parameters carried through.

    In sequence files the SMPL parameters are stored as ``betas`` and ``pose``.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    frame_id: int = Field(ge=0)
    joints_3d: list[list[float]]
    smpl_betas: list[float] = Field(
        default_factory=lambda: [0.0] * NUM_BETAS,
        alias="betas",
        min_length=NUM_BETAS,
        max_length=NUM_BETAS,
    )
    smpl_pose: list[list[float]] = Field(
        default_factory=lambda: [[0.0, 0.0, 0.0] for _ in range(NUM_JOINTS)],
        alias="pose",
    )

    @field_validator("joints_3d")
    @classmethod
    def validate_joints(cls, v: list[list[float]]) -> list[list[float]]:
        return _check_matrix(v, NUM_JOINTS, "joints_3d")

    @field_validator("smpl_pose")
    @classmethod
    def validate_pose(cls, v: list[list[float]]) -> list[list[float]]:
        return _check_matrix(v, NUM_JOINTS, "pose")

    @property
    def joints(self) -> np.ndarray:
        return np.asarray(self.joints_3d, dtype=np.float64)

    @property
    def pelvis(self) -> np.ndarray:
        return self.joints[PELVIS_INDEX]


class SequenceGroundTruth(BaseModel):
    """Groundtruth for one actor: frames in file order."""

    model_config = ConfigDict(extra="forbid")

    actor: str = Field(min_length=1)
    frames: list[FrameGroundTruth]

    def strided(self, stride: int) -> list[FrameGroundTruth]:
        """Every ``stride``-th frame, starting with the first."""
        return self.frames[::stride]


def load_sequence(path: str | Path) -> SequenceGroundTruth:
    """
    Read a groundtruth sequence file.

    Raises:
        GroundTruthError: If the file is missing or does not match the schema
    """
    path = Path(path)
    try:
        return SequenceGroundTruth.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise GroundTruthError(f"Cannot read groundtruth file {path}: {e}") from e
    except ValidationError as e:
        raise GroundTruthError(f"Invalid groundtruth file {path}: {e}") from e


def save_sequence(path: str | Path, sequence: SequenceGroundTruth) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(sequence.model_dump(by_alias=True), indent=2), encoding="utf-8"
    )
    return path


# ═══════════════════════════════════════════════════════════════
# RECORDS
# ═══════════════════════════════════════════════════════════════


class Keypoint2D(BaseModel):
    """Projected joint: pixel position and COCO visibility (0 outside, 1 occluded, 2 visible)."""

    model_config = ConfigDict(extra="forbid")

    u: float
    v: float
    vis: int = Field(ge=VIS_OUTSIDE, le=VIS_VISIBLE)


class RigRecord(BaseModel):
    """Placement of the rig that produced a set."""

    model_config = ConfigDict(extra="forbid")

    h: float = Field(gt=0)
    R_circle: float = Field(ge=0)
    pelvis_xy: list[float] = Field(min_length=2, max_length=2)
    recentering: str = "per_frame"


class ViewRecord(BaseModel):
    """Annotations and files of one camera in a set."""

    model_config = ConfigDict(extra="forbid")

    camera_index: int = Field(ge=0, le=8)
    camera_name: str
    image: str
    mask: str
    alpha: str | None = None
    keypoints: list[Keypoint2D] = Field(min_length=NUM_JOINTS, max_length=NUM_JOINTS)
    bbox: list[int] | None = Field(default=None, min_length=4, max_length=4)
    render_seconds: float = Field(default=0.0, ge=0)

    @field_validator("bbox")
    @classmethod
    def validate_bbox(cls, v: list[int] | None) -> list[int] | None:
        if v is not None and (v[0] < 0 or v[1] < 0 or v[2] < 1 or v[3] < 1):
            raise ValueError(f"bbox needs x, y >= 0 and w, h >= 1, got {v}")
        return v


class RenderSetRecord(BaseModel):
    """Annotation record of one nine-camera render set."""

    model_config = ConfigDict(extra="forbid")

    actor: str
    frame_id: int = Field(ge=0)
    rig: RigRecord
    cameras: list[CameraRecord] = Field(min_length=9, max_length=9)
    joints_3d: list[list[float]]
    smpl_betas: list[float] = Field(min_length=NUM_BETAS, max_length=NUM_BETAS)
    smpl_pose: list[list[float]]
    views: list[ViewRecord] = Field(min_length=9, max_length=9)
    render: dict[str, Any] = Field(default_factory=dict)
    provenance: dict[str, Any] | None = None

    @field_validator("joints_3d")
    @classmethod
    def validate_joints(cls, v: list[list[float]]) -> list[list[float]]:
        return _check_matrix(v, NUM_JOINTS, "joints_3d")

    @field_validator("smpl_pose")
    @classmethod
    def validate_pose(cls, v: list[list[float]]) -> list[list[float]]:
        return _check_matrix(v, NUM_JOINTS, "smpl_pose")

    @property
    def joints(self) -> np.ndarray:
        return np.asarray(self.joints_3d, dtype=np.float64)

    def camera_objects(self) -> list[Camera]:
        return [record.to_camera() for record in self.cameras]


# ═══════════════════════════════════════════════════════════════
# KEYPOINTS AND VISIBILITY
# ═══════════════════════════════════════════════════════════════


def occlusion_visibility(
    joint: np.ndarray,
    cam: Camera,
    field: RadianceField,
    opts: RenderOptions | None = None,
    margin: float = OCCLUSION_MARGIN,
) -> int:
    """
    Visible (2) or occluded (1) by the transmittance from the camera to the joint.

    The ray stops ``margin`` short of the joint so the density the joint sits
    in does not count against it. Parts of a composite field that contain the
    joint (its own limb, head or torso) are left out as well.

    Args:
        joint: World joint position (3,)
        cam: Camera the joint projects validly into
        field: Field used for the render
        opts: Render options; n_samples sets the quadrature resolution
        margin: Stand-off from the joint in meters

    Returns:
        VIS_VISIBLE if T >= 0.5, else VIS_OCCLUDED
    """
    opts = opts or RenderOptions()
    offset = np.asarray(joint, dtype=np.float64) - cam.center
    distance = float(np.linalg.norm(offset))
    if distance <= margin:
        return VIS_VISIBLE

    occluders = field.without_parts_at(joint)
    if occluders is None:
        return VIS_VISIBLE

    ray = Ray(o=cam.center, d=offset / distance)
    t_enter, t_exit, hit = occluders.bounds().intersect_rays(ray.o[None, :], ray.d[None, :])
    t_a = float(t_enter[0])
    t_b = min(float(t_exit[0]), distance - margin)
    if not hit[0] or t_b <= t_a:
        return VIS_VISIBLE

    T = transmittance(occluders, ray, t_a, t_b, opts.n_samples)
    return VIS_VISIBLE if T >= OCCLUSION_THRESHOLD else VIS_OCCLUDED


def project_keypoints(
    gt: FrameGroundTruth,
    cam: Camera,
    field: RadianceField | None = None,
    opts: RenderOptions | None = None,
) -> list[Keypoint2D]:
    """
    Project the 24 joints of a frame into one camera.

    Joints outside the image or the image circle, or at the camera center,
    get vis=0. Valid joints get vis=2, refined by occlusion_visibility when a
    field is given.

    Args:
        gt: Frame groundtruth
        cam: Camera
        field: Optional field for occlusion tests
        opts: Render options passed to occlusion tests

    Returns:
        24 Keypoint2D in SMPL joint order
    """
    joints = gt.joints
    batch = project_points(joints, cam)

    keypoints = []
    for j in range(NUM_JOINTS):
        if not batch.valid[j]:
            vis = VIS_OUTSIDE
        elif field is not None:
            vis = occlusion_visibility(joints[j], cam, field, opts)
        else:
            vis = VIS_VISIBLE
        keypoints.append(Keypoint2D(u=float(batch.u[j]), v=float(batch.v[j]), vis=vis))
    return keypoints


def joints_in_camera_mm(joints_3d: np.ndarray, cam: Camera) -> np.ndarray:
    """Camera-frame joint positions in millimeters, shape (24, 3)."""
    return world_to_camera(np.asarray(joints_3d, dtype=np.float64), cam.extrinsics) * 1000.0


def bbox_from_mask(mask: np.ndarray) -> tuple[int, int, int, int] | None:
    """
    Tight box (x, y, w, h) around the True pixels of an (H, W) mask.

    Returns:
        Box in pixels, or None for an empty mask
    """
    mask = np.asarray(mask, dtype=bool)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return None
    x, y = int(cols[0]), int(rows[0])
    return x, y, int(cols[-1]) - x + 1, int(rows[-1]) - y + 1


def build_render_set_record(
    actor: str,
    gt: FrameGroundTruth,
    rig: RenderRig,
    masks: list[np.ndarray],
    field: RadianceField | None = None,
    opts: RenderOptions | None = None,
    recentering: str = "per_frame",
    alpha_files: bool = False,
    timings: list[float] | None = None,
    render_info: dict[str, Any] | None = None,
    provenance: dict[str, Any] | None = None,
) -> RenderSetRecord:
    """
    Assemble the annotation record of one set.

    Args:
        actor: Actor / sequence name
        gt: Frame groundtruth
        rig: Rig used for the set
        masks: Nine (H, W) boolean masks in rig order
        field: Field for occlusion tests (None marks every valid joint visible)
        opts: Render options
        recentering: Rig recentering policy recorded with the set
        alpha_files: Whether 16-bit alpha images are written alongside
        timings: Per-camera render seconds
        render_info: Render settings to record (samples, seed, ...)
        provenance: Field provenance copied untouched

    Returns:
        RenderSetRecord
    """
    timings = timings or [0.0] * len(rig)
    views = []
    for index, (cam, mask) in enumerate(zip(rig.cameras, masks, strict=True)):
        stem = f"{gt.frame_id:06d}_{index:02d}"
        bbox = bbox_from_mask(mask)
        views.append(
            ViewRecord(
                camera_index=index,
                camera_name=cam.name,
                image=f"{stem}.png",
                mask=f"{stem}_mask.png",
                alpha=f"{stem}_alpha.png" if alpha_files else None,
                keypoints=project_keypoints(gt, cam, field, opts),
                bbox=list(bbox) if bbox is not None else None,
                render_seconds=float(timings[index]),
            )
        )

    cfg = rig.config
    return RenderSetRecord(
        actor=actor,
        frame_id=gt.frame_id,
        rig=RigRecord(
            h=cfg.h, R_circle=cfg.R_circle, pelvis_xy=list(cfg.pelvis_xy), recentering=recentering
        ),
        cameras=[CameraRecord.from_camera(cam) for cam in rig.cameras],
        joints_3d=gt.joints_3d,
        smpl_betas=gt.smpl_betas,
        smpl_pose=gt.smpl_pose,
        views=views,
        render=render_info or {},
        provenance=provenance,
    )
