"""Render pipeline configuration: a validated JSON document."""

import json
import logging
import math
from pathlib import Path
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.geometry.fisheye import CameraModelError, Intrinsics
from src.rendering.renderer import RenderError, RenderOptions

logger = logging.getLogger(__name__)


class ConfigError(Exception):
    """Raised when a pipeline configuration cannot be loaded; the message locates the problem."""

    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ═══════════════════════════════════════════════════════════════
# SCENES
# ═══════════════════════════════════════════════════════════════

Vec3 = Annotated[list[float], Field(min_length=3, max_length=3)]
Color = Annotated[list[Annotated[float, Field(ge=0, le=1)]], Field(min_length=3, max_length=3)]


class SpherePrimitive(_Strict):
    kind: Literal["sphere"]
    center: Vec3
    radius: float = Field(gt=0)
    sigma: float = Field(ge=0)
    color: Color = [1.0, 1.0, 1.0]


class BoxPrimitive(_Strict):
    kind: Literal["box"]
    lower: Vec3
    upper: Vec3
    sigma: float = Field(ge=0)
    color: Color = [1.0, 1.0, 1.0]

    @model_validator(mode="after")
    def check_extent(self) -> "BoxPrimitive":
        if not all(lo < hi for lo, hi in zip(self.lower, self.upper, strict=True)):
            raise ValueError(f"box needs lower < upper, got {self.lower} / {self.upper}")
        return self


class GaussianPrimitive(_Strict):
    kind: Literal["gaussian"]
    mean: Vec3
    scale: float = Field(gt=0)
    sigma: float = Field(ge=0)
    color: Color = [1.0, 1.0, 1.0]


Primitive = Annotated[SpherePrimitive | BoxPrimitive | GaussianPrimitive, Field(discriminator="kind")]


class AnalyticScene(_Strict):
    """Union of primitives; with follow_pelvis the scene is translated by each frame's pelvis."""

    type: Literal["analytic"]
    primitives: list[Primitive] = Field(min_length=1)
    follow_pelvis: bool = False


class PersonProxyScene(_Strict):
    """Head sphere, torso box and limb boxes built around each frame's joints."""

    type: Literal["person_proxy"]
    sigma: float = Field(default=40.0, gt=0)
    limb_radius: float = Field(default=0.05, gt=0)
    head_radius: float = Field(default=0.11, gt=0)


class VoxelScene(_Strict):
    """NVOX file, shared by all frames or chosen per frame id."""

    type: Literal["nvox"]
    path: str | None = None
    per_frame: dict[int, str] = Field(default_factory=dict)
    follow_pelvis: bool = False

    @model_validator(mode="after")
    def check_source(self) -> "VoxelScene":
        if self.path is None and not self.per_frame:
            raise ValueError("nvox scene needs 'path' or 'per_frame'")
        return self

    def path_for(self, frame_id: int) -> str:
        path = self.per_frame.get(frame_id, self.path)
        if path is None:
            raise ConfigError(f"No NVOX file configured for frame {frame_id}")
        return path


Scene = Annotated[AnalyticScene | PersonProxyScene | VoxelScene, Field(discriminator="type")]


# ═══════════════════════════════════════════════════════════════
# RIG AND RENDER
# ═══════════════════════════════════════════════════════════════


class IntrinsicsConfig(_Strict):
    """Shared rig intrinsics; f and the principal point default to an inscribed image circle."""

    width: int = Field(ge=1)
    height: int = Field(ge=1)
    theta_max: float = Field(default=math.pi / 2, gt=0, le=math.pi)
    f: float | None = Field(default=None, gt=0)
    c_x: float | None = None
    c_y: float | None = None

    def build(self) -> Intrinsics:
        base = Intrinsics.for_image_circle(self.width, self.height, self.theta_max)
        return Intrinsics(
            f=self.f if self.f is not None else base.f,
            c_x=self.c_x if self.c_x is not None else base.c_x,
            c_y=self.c_y if self.c_y is not None else base.c_y,
            width=self.width,
            height=self.height,
            theta_max=self.theta_max,
        )


class RigSection(_Strict):
    passes: list[Annotated[list[float], Field(min_length=2, max_length=2)]] = Field(min_length=1)
    intrinsics: IntrinsicsConfig
    recentering: Literal["per_frame", "per_sequence"] = "per_frame"

    @field_validator("passes")
    @classmethod
    def validate_passes(cls, v: list[list[float]]) -> list[list[float]]:
        for h, r in v:
            if not (h > 0 and r >= 0):
                raise ValueError(f"Each pass needs h > 0 and R >= 0, got ({h}, {r})")
        return v


class RenderSection(_Strict):
    n_samples: int = Field(default=128, ge=1)
    t_near: float | None = Field(default=None, ge=0)
    t_far: float | None = None
    background: Color = [0.0, 0.0, 0.0]
    mask_threshold: float = Field(default=0.5, gt=0, lt=1)
    supersample: int = Field(default=1, ge=1)
    stratified: bool = False
    save_alpha: bool = False
    occlusion: bool = True

    def options(self, seed: int) -> RenderOptions:
        return RenderOptions(
            n_samples=self.n_samples,
            t_near=self.t_near,
            t_far=self.t_far,
            background=(self.background[0], self.background[1], self.background[2]),
            mask_threshold=self.mask_threshold,
            jitter_seed=seed if self.stratified else None,
            supersample=self.supersample,
        )


class PipelineConfig(_Strict):
    """
    Full render run description.

    Relative paths are resolved against the directory of the config file.
    """

    actor: str | None = None
    ground_truth: str
    scene: Scene
    rig: RigSection
    render: RenderSection = Field(default_factory=RenderSection)
    output_dir: str | None = None
    workers: int | None = Field(default=None, ge=1)
    seed: int = Field(default=0, ge=0)
    frame_stride: int = Field(default=1, ge=1)
    provenance: dict[str, Any] | None = None

    def with_overrides(self, **overrides: Any) -> "PipelineConfig":
        """Copy with command-line overrides applied (None values are ignored)."""
        update: dict[str, Any] = {}
        render_update: dict[str, Any] = {}
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "supersample":
                render_update[key] = value
            else:
                update[key] = value
        if render_update:
            update["render"] = self.render.model_copy(update=render_update)
        return self.model_copy(update=update)

    def render_options(self) -> RenderOptions:
        return self.render.options(self.seed)

    def passes(self) -> list[tuple[float, float]]:
        return [(h, r) for h, r in self.rig.passes]


def _resolve(base: Path, value: str) -> str:
    path = Path(value)
    return str(path if path.is_absolute() else base / path)


def _format_validation(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in detail['loc']) or '<root>'}: {detail['msg']}"
        for detail in error.errors()
    )


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    """
    Load and validate a pipeline configuration.

    Args:
        path: JSON config file

    Returns:
        PipelineConfig with input paths resolved

    Raises:
        ConfigError: On unreadable files, JSON syntax errors (line/column),
            schema errors (field path) or unresolvable input paths
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}") from e

    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON ({e.msg})") from e

    try:
        config = PipelineConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(f"{path}: {_format_validation(e)}") from e

    try:
        config.rig.intrinsics.build()
        config.render_options()
    except (CameraModelError, RenderError) as e:
        raise ConfigError(f"{path}: {e}") from e

    base = path.parent
    update: dict[str, Any] = {"ground_truth": _resolve(base, config.ground_truth)}
    scene = config.scene
    if isinstance(scene, VoxelScene):
        update["scene"] = scene.model_copy(
            update={
                "path": _resolve(base, scene.path) if scene.path else None,
                "per_frame": {k: _resolve(base, v) for k, v in scene.per_frame.items()},
            }
        )
    config = config.model_copy(update=update)

    missing = [config.ground_truth]
    if isinstance(config.scene, VoxelScene):
        missing += [p for p in [config.scene.path, *config.scene.per_frame.values()] if p]
    missing = [p for p in missing if not Path(p).is_file()]
    if missing:
        raise ConfigError(f"{path}: referenced files not found: {', '.join(missing)}")

    logger.info(f"ℹ️ Loaded pipeline config {path}")
    return config
