"""Fisheye camera geometry and virtual camera rigs."""

from src.geometry.camera_io import CameraRecord, load_camera, save_camera
from src.geometry.fisheye import (
    Camera,
    CameraModelError,
    DegenerateProjectionError,
    Extrinsics,
    Intrinsics,
    OutsideImageCircleError,
    PixelProjection,
    PlaneSingularityError,
    Ray,
    camera_center,
    camera_to_world,
    project,
    project_points,
    ray_crossing_diagnostic,
    ray_for_pixel,
    ray_for_pixel_plane,
    rays_for_pixels,
    world_to_camera,
)
from src.geometry.rig import (
    RenderRig,
    RigConfig,
    downward_rotation,
    make_multi_rig,
    make_rig,
)

__all__ = [
    "Camera",
    "CameraModelError",
    "CameraRecord",
    "DegenerateProjectionError",
    "Extrinsics",
    "Intrinsics",
    "OutsideImageCircleError",
    "PixelProjection",
    "PlaneSingularityError",
    "Ray",
    "RenderRig",
    "RigConfig",
    "camera_center",
    "camera_to_world",
    "downward_rotation",
    "load_camera",
    "make_multi_rig",
    "make_rig",
    "project",
    "project_points",
    "ray_crossing_diagnostic",
    "ray_for_pixel",
    "ray_for_pixel_plane",
    "rays_for_pixels",
    "save_camera",
    "world_to_camera",
]
