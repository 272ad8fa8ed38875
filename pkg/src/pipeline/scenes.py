"""Scene construction: radiance fields for each groundtruth frame."""

import logging
from functools import lru_cache

import numpy as np

from src.dataset.annotation import FrameGroundTruth
from src.pipeline.config import (
    AnalyticScene,
    BoxPrimitive,
    GaussianPrimitive,
    PersonProxyScene,
    Scene,
    SpherePrimitive,
    VoxelScene,
)
from src.rendering.fields import (
    BoxField,
    GaussianBlobField,
    RadianceField,
    TranslatedField,
    UniformSphereField,
    UnionField,
)
from src.rendering.voxel import VoxelGrid, load_voxel_grid

logger = logging.getLogger(__name__)

HEAD = 15
TORSO_JOINTS = (0, 1, 2, 3, 6, 9, 12, 13, 14, 16, 17)
LEFT_LIMBS = ((1, 4), (4, 7), (7, 10), (16, 18), (18, 20), (20, 22))
RIGHT_LIMBS = ((2, 5), (5, 8), (8, 11), (17, 19), (19, 21), (21, 23))
NECK = ((12, 15),)

SKIN = (0.91, 0.76, 0.62)
TORSO = (0.20, 0.40, 0.80)
LEFT = (0.80, 0.30, 0.30)
RIGHT = (0.30, 0.75, 0.35)


def primitive_field(primitive: SpherePrimitive | BoxPrimitive | GaussianPrimitive) -> RadianceField:
    if isinstance(primitive, SpherePrimitive):
        return UniformSphereField(primitive.center, primitive.radius, primitive.sigma, primitive.color)
    if isinstance(primitive, BoxPrimitive):
        return BoxField(primitive.lower, primitive.upper, primitive.sigma, primitive.color)
    return GaussianBlobField(primitive.mean, primitive.scale, primitive.sigma, primitive.color)


def _padded_box(points: np.ndarray, pad: float, sigma: float, color: tuple[float, float, float]) -> BoxField:
    return BoxField(points.min(axis=0) - pad, points.max(axis=0) + pad, sigma, color)


def person_proxy_field(
    joints: np.ndarray,
    sigma: float = 40.0,
    limb_radius: float = 0.05,
    head_radius: float = 0.11,
) -> UnionField:
    """
    Coarse body made of a head sphere, a torso box and one box per limb bone.

    Args:
        joints: SMPL joints (24, 3) in meters
        sigma: Density of every part (1/m)
        limb_radius: Padding around bones
        head_radius: Head sphere radius

    Returns:
        UnionField of the parts
    """
    joints = np.asarray(joints, dtype=np.float64)
    parts: list[RadianceField] = [
        UniformSphereField(joints[HEAD], head_radius, sigma, SKIN),
        _padded_box(joints[list(TORSO_JOINTS)], limb_radius, sigma, TORSO),
    ]
    for bones, color in ((LEFT_LIMBS, LEFT), (RIGHT_LIMBS, RIGHT), (NECK, SKIN)):
        for a, b in bones:
            parts.append(_padded_box(joints[[a, b]], limb_radius, sigma, color))
    return UnionField(parts)


@lru_cache(maxsize=8)
def _cached_voxel_grid(path: str) -> VoxelGrid:
    return load_voxel_grid(path)


def build_scene(scene: Scene, frame: FrameGroundTruth) -> RadianceField:
    """
    Radiance field for one frame.

    Args:
        scene: Scene section of the pipeline config
        frame: Frame groundtruth (pelvis and joints)

    Returns:
        RadianceField

    Raises:
        VoxelFormatError: If an NVOX file cannot be parsed
    """
    if isinstance(scene, PersonProxyScene):
        return person_proxy_field(frame.joints, scene.sigma, scene.limb_radius, scene.head_radius)

    if isinstance(scene, AnalyticScene):
        members = [primitive_field(p) for p in scene.primitives]
        field: RadianceField = members[0] if len(members) == 1 else UnionField(members)
        follow = scene.follow_pelvis
    elif isinstance(scene, VoxelScene):
        field = _cached_voxel_grid(scene.path_for(frame.frame_id))
        follow = scene.follow_pelvis
    else:
        raise TypeError(f"Unknown scene type {type(scene).__name__}")

    if follow:
        field = TranslatedField(field, frame.pelvis)
    return field
