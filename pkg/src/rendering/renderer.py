"""Volume rendering of radiance fields along fisheye rays.

Quadrature: [t_near, t_far] is split into n equal bins of width delta, the
field is sampled once per bin (bin midpoint, or a stratified uniform offset
when a jitter seed is set), alpha_i = 1 - exp(-sigma_i * delta) and
T_i = prod_{j<i} (1 - alpha_j).
"""

import logging
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from multiprocessing import Pool
from multiprocessing.pool import Pool as WorkerPool
from typing import Any

import numpy as np

from src.config import get_config
from src.geometry.fisheye import Camera, Ray, rays_for_pixels
from src.geometry.rig import RenderRig
from src.rendering.fields import RadianceField
from src.utils.time import format_rate, format_time

logger = logging.getLogger(__name__)


class RenderError(Exception):
    """Raised for invalid render options or integration ranges."""

    pass


@dataclass(frozen=True)
class RenderOptions:
    """
    Options shared by every ray of a render.

    Attributes:
        n_samples: Quadrature bins per ray
        t_near: Near bound in meters, or None to intersect with the field bounds
        t_far: Far bound in meters, or None to intersect with the field bounds
        background: RGB composited behind the residual transmittance
        mask_threshold: Accumulated opacity at or above which a pixel is in the mask
        jitter_seed: Seed for stratified sampling inside bins; None samples bin midpoints
        supersample: k for k x k sub-pixel samples per pixel
    """

    n_samples: int = 128
    t_near: float | None = None
    t_far: float | None = None
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    mask_threshold: float = 0.5
    jitter_seed: int | None = None
    supersample: int = 1

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise RenderError(f"n_samples must be >= 1, got {self.n_samples}")
        if (self.t_near is None) != (self.t_far is None):
            raise RenderError("t_near and t_far must both be set or both be automatic")
        if self.t_near is not None and not (0 <= self.t_near < self.t_far):  # type: ignore[operator]
            raise RenderError(f"Need 0 <= t_near < t_far, got {self.t_near} / {self.t_far}")
        if not (0 < self.mask_threshold < 1):
            raise RenderError(f"mask_threshold must lie in (0, 1), got {self.mask_threshold}")
        if len(self.background) != 3 or not all(0 <= c <= 1 for c in self.background):
            raise RenderError(f"background must be RGB in [0, 1], got {self.background}")
        if self.supersample < 1:
            raise RenderError(f"supersample must be >= 1, got {self.supersample}")

    @property
    def auto_bounds(self) -> bool:
        return self.t_near is None


@dataclass(eq=False)
class RenderOutput:
    """Rendered image, shape (height, width[, 3])."""

    rgb: np.ndarray
    alpha: np.ndarray
    mask: np.ndarray
    timing: float
    camera_name: str = ""
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def height(self) -> int:
        return int(self.alpha.shape[0])

    @property
    def width(self) -> int:
        return int(self.alpha.shape[1])


# ═══════════════════════════════════════════════════════════════
# RAY INTEGRATION
# ═══════════════════════════════════════════════════════════════


def transmittance(field: RadianceField, ray: Ray, t_a: float, t_b: float, n: int) -> float:
    """
    Midpoint-rule estimate of exp(-integral of sigma) over [t_a, t_b].

    Raises:
        RenderError: If t_a >= t_b or n < 1
    """
    if not t_a < t_b:
        raise RenderError(f"Need t_a < t_b, got {t_a} / {t_b}")
    if n < 1:
        raise RenderError(f"Need n >= 1, got {n}")

    delta = (t_b - t_a) / n
    t = t_a + (np.arange(n) + 0.5) * delta
    points = ray.o + t[:, None] * ray.d
    _, sigma = field.evaluate(points, ray.d)
    return float(np.exp(-np.sum(sigma) * delta))


def composite(
    rgb: np.ndarray,
    sigma: np.ndarray,
    delta: np.ndarray,
    background: Sequence[float],
) -> tuple[np.ndarray, np.ndarray]:
    """
    Alpha-composite samples front to back.

    Args:
        rgb: Sample colors, shape (R, S, 3)
        sigma: Sample densities, shape (R, S)
        delta: Bin widths, shape (R, 1) or (R, S)
        background: RGB behind the last sample

    Returns:
        Tuple of (color (R, 3), accumulated opacity (R,)), opacity = 1 - T(t_far)
    """
    tau = sigma * delta
    alpha = -np.expm1(-tau)
    optical_depth = np.cumsum(tau, axis=-1)
    exclusive = np.concatenate([np.zeros_like(tau[:, :1]), optical_depth[:, :-1]], axis=-1)
    weights = np.exp(-exclusive) * alpha

    t_final = np.exp(-optical_depth[:, -1])
    color = np.sum(weights[..., None] * rgb, axis=1) + t_final[:, None] * np.asarray(background)
    return color, 1.0 - t_final


def render_rays(
    field: RadianceField,
    origins: np.ndarray,
    directions: np.ndarray,
    opts: RenderOptions,
    jitter: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Integrate many rays.

    Args:
        field: Radiance field
        origins: Ray origins, shape (R, 3)
        directions: Unit ray directions, shape (R, 3)
        opts: Render options
        jitter: Optional in-bin offsets in [0, 1), shape (R, n_samples); midpoints when None

    Returns:
        Tuple of (rgb (R, 3), alpha (R,))
    """
    n_rays = origins.shape[0]
    background = np.asarray(opts.background, dtype=np.float64)
    rgb = np.tile(background, (n_rays, 1))
    alpha = np.zeros(n_rays)

    if opts.auto_bounds:
        t_near, t_far, hit = field.bounds().intersect_rays(origins, directions)
    else:
        t_near = np.full(n_rays, float(opts.t_near))  # type: ignore[arg-type]
        t_far = np.full(n_rays, float(opts.t_far))  # type: ignore[arg-type]
        hit = np.ones(n_rays, dtype=bool)
    if not np.any(hit):
        return rgb, alpha

    n = opts.n_samples
    t0 = t_near[hit][:, None]
    delta = (t_far[hit][:, None] - t0) / n
    offsets = np.full((t0.shape[0], n), 0.5) if jitter is None else jitter[hit]
    t = t0 + (np.arange(n) + offsets) * delta

    o = origins[hit][:, None, :]
    d = directions[hit][:, None, :]
    points = o + t[..., None] * d
    sample_rgb, sample_sigma = field.evaluate(
        points.reshape(-1, 3), np.broadcast_to(d, points.shape).reshape(-1, 3)
    )

    hit_rgb, hit_alpha = composite(
        sample_rgb.reshape(points.shape), sample_sigma.reshape(t.shape), delta, background
    )
    rgb[hit] = hit_rgb
    alpha[hit] = hit_alpha
    return rgb, alpha


def render_ray(field: RadianceField, ray: Ray, opts: RenderOptions) -> tuple[np.ndarray, float]:
    """Render a single ray; returns (rgb (3,), alpha)."""
    jitter = None
    if opts.jitter_seed is not None:
        jitter = np.random.default_rng(opts.jitter_seed).random((1, opts.n_samples))
    rgb, alpha = render_rays(field, ray.o[None, :], ray.d[None, :], opts, jitter=jitter)
    return rgb[0], float(alpha[0])


# ═══════════════════════════════════════════════════════════════
# IMAGES
# ═══════════════════════════════════════════════════════════════


def _subpixel_offsets(k: int) -> np.ndarray:
    steps = (np.arange(k) + 0.5) / k
    sv, su = np.meshgrid(steps, steps, indexing="ij")
    return np.stack([su.ravel(), sv.ravel()], axis=-1)


def _render_rows(args: tuple[RadianceField, Camera, RenderOptions, int, int]) -> tuple[int, np.ndarray, np.ndarray]:
    """
    Render image rows [row_start, row_end).

    Must be top-level function for multiprocessing. Jitter is drawn per image
    row from (seed, row), so results do not depend on how rows are grouped.
    """
    field, cam, opts, row_start, row_end = args
    intr = cam.intrinsics
    k = opts.supersample
    sub = _subpixel_offsets(k)
    n_rows = row_end - row_start

    cols = np.arange(intr.width, dtype=np.float64)
    rows = np.arange(row_start, row_end, dtype=np.float64)
    # (rows, cols, k*k)
    u = np.broadcast_to(cols[None, :, None] + sub[None, None, :, 0], (n_rows, intr.width, k * k))
    v = np.broadcast_to(rows[:, None, None] + sub[None, None, :, 1], (n_rows, intr.width, k * k))
    u = u.reshape(-1)
    v = v.reshape(-1)

    origins, directions, theta = rays_for_pixels(u, v, cam)
    in_circle = theta <= intr.theta_max

    jitter = None
    if opts.jitter_seed is not None:
        per_row = intr.width * k * k
        jitter = np.concatenate(
            [
                np.random.default_rng([opts.jitter_seed, row]).random((per_row, opts.n_samples))
                for row in range(row_start, row_end)
            ]
        )[in_circle]

    rgb = np.tile(np.asarray(opts.background, dtype=np.float64), (u.shape[0], 1))
    alpha = np.zeros(u.shape[0])
    if np.any(in_circle):
        rgb[in_circle], alpha[in_circle] = render_rays(
            field, origins[in_circle], directions[in_circle], opts, jitter=jitter
        )

    rgb = rgb.reshape(n_rows, intr.width, k * k, 3).mean(axis=2)
    alpha = alpha.reshape(n_rows, intr.width, k * k).mean(axis=2)
    return row_start, rgb, alpha


def render_image(
    field: RadianceField,
    cam: Camera,
    opts: RenderOptions,
    workers: int = 1,
    rows_per_task: int | None = None,
    pool: WorkerPool | None = None,
) -> RenderOutput:
    """
    Render one fisheye image.

    Pixels whose field angle exceeds theta_max keep the background color and
    zero opacity. The image is split into fixed row blocks; blocks are
    rendered independently, so the output is identical for any worker count.

    Args:
        field: Radiance field
        cam: Camera
        opts: Render options
        workers: Number of processes (1 renders in-process)
        rows_per_task: Rows per work item (default from AppConfig)
        pool: Open worker pool to use instead of starting one; workers is
            then ignored

    Returns:
        RenderOutput
    """
    intr = cam.intrinsics
    rows_per_task = rows_per_task or get_config().rows_per_task
    tasks = [
        (field, cam, opts, start, min(start + rows_per_task, intr.height))
        for start in range(0, intr.height, rows_per_task)
    ]

    started = time.perf_counter()
    if pool is not None:
        results = pool.map(_render_rows, tasks)
    elif workers > 1 and len(tasks) > 1:
        with Pool(processes=min(workers, len(tasks))) as own_pool:
            results = own_pool.map(_render_rows, tasks)
    else:
        results = [_render_rows(task) for task in tasks]
    elapsed = time.perf_counter() - started

    rgb = np.empty((intr.height, intr.width, 3))
    alpha = np.empty((intr.height, intr.width))
    for row_start, block_rgb, block_alpha in results:
        rows = slice(row_start, row_start + block_rgb.shape[0])
        rgb[rows] = block_rgb
        alpha[rows] = block_alpha

    n_rays = intr.width * intr.height * opts.supersample**2
    logger.info(
        f"ℹ️ Rendered camera '{cam.name}' {intr.width}x{intr.height} in {format_time(elapsed)} "
        f"({format_rate(n_rays, elapsed)} rays)"
    )
    return RenderOutput(
        rgb=rgb,
        alpha=alpha,
        mask=alpha >= opts.mask_threshold,
        timing=elapsed,
        camera_name=cam.name,
        stats={"rays": n_rays, "samples_per_ray": opts.n_samples},
    )


def render_set(
    field: RadianceField,
    rig: RenderRig,
    opts: RenderOptions,
    workers: int = 1,
    pool: WorkerPool | None = None,
) -> list[RenderOutput]:
    """
    Render all nine rig cameras in rig order.

    With workers > 1 and no pool given, one pool serves the whole set.
    """
    if pool is None and workers > 1:
        with Pool(processes=workers) as own_pool:
            return render_set(field, rig, opts, pool=own_pool)

    outputs = [render_image(field, cam, opts, pool=pool) for cam in rig.cameras]
    total = sum(out.timing for out in outputs)
    logger.info(f"✅ Render set finished: {len(outputs)} images in {format_time(total)}")
    return outputs


def silhouette_cone_area(distance: float, radius: float, f: float) -> float:
    """
    Pixel area of an on-axis sphere's silhouette in an equidistant image.

    A sphere of the given radius centered on the optical axis at the given
    distance subtends a cone of half-angle asin(radius / distance), which maps
    to a disk of radius f * angle.
    """
    if not 0 < radius < distance:
        raise RenderError("The camera must be outside the sphere")
    return math.pi * (f * math.asin(radius / distance)) ** 2
