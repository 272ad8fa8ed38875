"""Virtual top-view camera rig: one center camera plus eight surround cameras."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from src.geometry.fisheye import Camera, CameraModelError, Extrinsics, Intrinsics

logger = logging.getLogger(__name__)

CENTER_NAME = "C"
# n = 0..7, counter-clockwise from +x (east)
SURROUND_NAMES = ("E", "NE", "N", "NW", "W", "SW", "S", "SE")
RIG_SIZE = 1 + len(SURROUND_NAMES)


@dataclass(frozen=True)
class RigConfig:
    """
    Rig placement for one render pass.

    Attributes:
        h: Camera height above the pelvis plane origin (meters, world z)
        R_circle: Radius of the surround circle (meters)
        pelvis_xy: Horizontal pelvis position (x_p, y_p) in meters
        intrinsics: Intrinsics shared by all nine cameras
    """

    h: float
    R_circle: float
    pelvis_xy: tuple[float, float]
    intrinsics: Intrinsics

    def __post_init__(self) -> None:
        if not (math.isfinite(self.h) and self.h > 0):
            raise CameraModelError(f"Rig height h must be positive, got {self.h}")
        if not (math.isfinite(self.R_circle) and self.R_circle >= 0):
            raise CameraModelError(f"Rig radius must be >= 0, got {self.R_circle}")
        x_p, y_p = self.pelvis_xy
        object.__setattr__(self, "pelvis_xy", (float(x_p), float(y_p)))


@dataclass(frozen=True, eq=False)
class RenderRig:
    """Nine downward cameras: index 0 is the center, 1 + n the surround position n."""

    cameras: tuple[Camera, ...]
    config: RigConfig

    def __post_init__(self) -> None:
        if len(self.cameras) != RIG_SIZE:
            raise CameraModelError(f"A render rig has {RIG_SIZE} cameras, got {len(self.cameras)}")

    def __len__(self) -> int:
        return len(self.cameras)

    def __iter__(self):
        return iter(self.cameras)

    @property
    def names(self) -> list[str]:
        return [cam.name for cam in self.cameras]


def downward_rotation() -> np.ndarray:
    """
    World-to-camera rotation of a camera looking straight down.

    camera +z = world -z, camera +x = world +x, camera +y = world -y.
    """
    return np.diag([1.0, -1.0, -1.0])


def surround_offsets(R_circle: float) -> np.ndarray:
    """Horizontal offsets (R cos(n pi/4), R sin(n pi/4)) for n = 0..7, shape (8, 2)."""
    angles = np.arange(len(SURROUND_NAMES)) * (math.pi / 4)
    return R_circle * np.stack([np.cos(angles), np.sin(angles)], axis=-1)


def camera_centers(cfg: RigConfig) -> np.ndarray:
    """World camera centers of a rig, shape (9, 3), center camera first."""
    x_p, y_p = cfg.pelvis_xy
    base = np.array([x_p, y_p, cfg.h])
    centers = np.tile(base, (RIG_SIZE, 1))
    centers[1:, :2] += surround_offsets(cfg.R_circle)
    return centers


def make_rig(cfg: RigConfig) -> RenderRig:
    """
    Build the nine-camera rig above the pelvis.

    The pass parameters give camera centers; extrinsic translations are
    derived as T = -R @ C so that every camera sits where it is placed.

    Args:
        cfg: Rig configuration

    Returns:
        RenderRig
    """
    R = downward_rotation()
    names = (CENTER_NAME, *SURROUND_NAMES)
    cameras = tuple(
        Camera(
            intrinsics=cfg.intrinsics,
            extrinsics=Extrinsics.from_center(R, center),
            name=name,
        )
        for name, center in zip(names, camera_centers(cfg), strict=True)
    )
    logger.debug(
        f"🐞 Built rig h={cfg.h} R={cfg.R_circle} at pelvis "
        f"({cfg.pelvis_xy[0]:.3f}, {cfg.pelvis_xy[1]:.3f})"
    )
    return RenderRig(cameras=cameras, config=cfg)


def make_multi_rig(
    passes: Sequence[tuple[float, float]],
    pelvis_xy: tuple[float, float],
    intrinsics: Intrinsics,
) -> list[RenderRig]:
    """
    One rig per (h, R_circle) pass, in input order.

    Raises:
        CameraModelError: If the pass list is empty
    """
    if not passes:
        raise CameraModelError("At least one (h, R) render pass is required")
    return [
        make_rig(RigConfig(h=h, R_circle=r, pelvis_xy=pelvis_xy, intrinsics=intrinsics))
        for h, r in passes
    ]
