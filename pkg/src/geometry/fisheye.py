"""Equidistant fisheye camera model: frame transforms, projection and ray finding.

Conventions:
    - Column vectors, X_c = R @ X_w + T. Array inputs of shape (N, 3) are
      treated row-wise with the same meaning.
    - Camera frame: +z is the optical axis, +x maps to +u, +y maps to +v.
    - Pixel coordinates are continuous; the integer pixel (i, j) covers
      [i, i+1) x [j, j+1) and is sampled at its center (i + 0.5, j + 0.5).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

ORTHONORMAL_TOLERANCE = 1e-12
UNIT_NORM_TOLERANCE = 1e-12
DEGENERATE_DISTANCE = 1e-12  # meters


class CameraModelError(Exception):
    """Raised for invalid camera parameters or impossible camera queries."""

    pass


class DegenerateProjectionError(CameraModelError):
    """Raised when projecting a point that coincides with the camera center."""

    pass


class OutsideImageCircleError(CameraModelError):
    """Raised when a pixel's field angle exceeds the camera's theta_max."""

    pass


class PlaneSingularityError(CameraModelError):
    """Raised when the tan-plane ray formulation is evaluated at or beyond 90 degrees."""

    pass


# ═══════════════════════════════════════════════════════════════
# CAMERA TYPES
# ═══════════════════════════════════════════════════════════════


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Extrinsics:
    """Rigid world-to-camera transform X_c = R @ X_w + T (R orthonormal, T in meters)."""

    R: np.ndarray
    T: np.ndarray

    def __post_init__(self) -> None:
        R = np.array(self.R, dtype=np.float64).reshape(3, 3)
        T = np.array(self.T, dtype=np.float64).reshape(3)

        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(T))):
            raise CameraModelError("Extrinsics contain non-finite values")
        ortho_error = float(np.abs(R @ R.T - np.eye(3)).max())
        if ortho_error > ORTHONORMAL_TOLERANCE:
            raise CameraModelError(f"R is not orthonormal (max |R·Rᵀ - I| = {ortho_error:.3e})")
        det = float(np.linalg.det(R))
        if abs(det - 1.0) > ORTHONORMAL_TOLERANCE:
            raise CameraModelError(f"R is not a proper rotation (det = {det:.15f})")

        object.__setattr__(self, "R", _readonly(R))
        object.__setattr__(self, "T", _readonly(T))

    @classmethod
    def from_center(cls, R: np.ndarray, center: np.ndarray) -> "Extrinsics":
        """Build extrinsics from a rotation and the camera center C in world coordinates."""
        R = np.asarray(R, dtype=np.float64).reshape(3, 3)
        center = np.asarray(center, dtype=np.float64).reshape(3)
        return cls(R=R, T=-R @ center)

    @property
    def center(self) -> np.ndarray:
        return camera_center(self)


@dataclass(frozen=True)
class Intrinsics:
    """Ideal equidistant fisheye intrinsics.

    Attributes:
        f: Focal length in pixels (rho = f * theta)
        c_x: Principal point u coordinate in pixels
        c_y: Principal point v coordinate in pixels
        width: Image width in pixels
        height: Image height in pixels
        theta_max: Largest field angle inside the image circle (radians)
    """

    f: float
    c_x: float
    c_y: float
    width: int
    height: int
    theta_max: float = math.pi / 2

    def __post_init__(self) -> None:
        if not (math.isfinite(self.f) and self.f > 0):
            raise CameraModelError(f"Focal length must be positive, got {self.f}")
        if not (math.isfinite(self.c_x) and math.isfinite(self.c_y)):
            raise CameraModelError("Principal point must be finite")
        if self.width < 1 or self.height < 1:
            raise CameraModelError(f"Image size must be >= 1, got {self.width}x{self.height}")
        if not (0 < self.theta_max <= math.pi):
            raise CameraModelError(f"theta_max must lie in (0, pi], got {self.theta_max}")

    @classmethod
    def for_image_circle(
        cls,
        width: int,
        height: int,
        theta_max: float = math.pi / 2,
    ) -> "Intrinsics":
        """
        Intrinsics whose image circle is inscribed in the image.

        The principal point is the image center and f is chosen so that
        theta_max lands on the shorter image half-axis.

        Args:
            width: Image width in pixels
            height: Image height in pixels
            theta_max: Field angle at the rim of the image circle (radians)

        Returns:
            Intrinsics instance
        """
        radius = min(width, height) / 2.0
        return cls(
            f=radius / theta_max,
            c_x=width / 2.0,
            c_y=height / 2.0,
            width=int(width),
            height=int(height),
            theta_max=float(theta_max),
        )


@dataclass(frozen=True, eq=False)
class Camera:
    """A virtual fisheye camera: intrinsics, extrinsics and an optional name."""

    intrinsics: Intrinsics
    extrinsics: Extrinsics
    name: str = ""

    @property
    def center(self) -> np.ndarray:
        return camera_center(self.extrinsics)

    @property
    def optical_axis(self) -> np.ndarray:
        """Camera +z expressed in world coordinates."""
        return self.extrinsics.R[2].copy()


@dataclass(frozen=True)
class PixelProjection:
    """Result of projecting a single world point."""

    u: float
    v: float
    theta: float
    phi: float
    rho: float
    valid: bool


@dataclass(frozen=True, eq=False)
class Ray:
    """Ray r(t) = o + t * d with unit direction, in world coordinates."""

    o: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        o = np.array(self.o, dtype=np.float64).reshape(3)
        d = np.array(self.d, dtype=np.float64).reshape(3)
        norm_error = abs(float(np.linalg.norm(d)) - 1.0)
        if norm_error > UNIT_NORM_TOLERANCE:
            raise CameraModelError(f"Ray direction is not unit length (error {norm_error:.3e})")
        object.__setattr__(self, "o", _readonly(o))
        object.__setattr__(self, "d", _readonly(d))

    def at(self, t: float) -> np.ndarray:
        return self.o + t * self.d


@dataclass(frozen=True)
class ProjectionBatch:
    """Vectorized projection results for N points; degenerate points are never valid."""

    u: np.ndarray
    v: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    rho: np.ndarray
    valid: np.ndarray
    degenerate: np.ndarray


# ═══════════════════════════════════════════════════════════════
# FRAME TRANSFORMS
# ═══════════════════════════════════════════════════════════════


def world_to_camera(X_w: np.ndarray, ext: Extrinsics) -> np.ndarray:
    """
    Convert world points to the camera frame: X_c = R @ X_w + T.

    Args:
        X_w: Point (3,) or points (N, 3) in meters
        ext: Camera extrinsics

    Returns:
        Camera-frame coordinates with the input's shape
    """
    X_w = np.asarray(X_w, dtype=np.float64)
    if X_w.ndim == 1:
        return ext.R @ X_w + ext.T
    return X_w @ ext.R.T + ext.T


def camera_to_world(X_c: np.ndarray, ext: Extrinsics) -> np.ndarray:
    """Inverse of world_to_camera: X_w = Rᵀ @ (X_c - T)."""
    X_c = np.asarray(X_c, dtype=np.float64)
    if X_c.ndim == 1:
        return ext.R.T @ (X_c - ext.T)
    return (X_c - ext.T) @ ext.R


def camera_center(ext: Extrinsics) -> np.ndarray:
    """Camera center in world coordinates, C = -Rᵀ @ T."""
    return -ext.R.T @ ext.T


# ═══════════════════════════════════════════════════════════════
# FORWARD PROJECTION
# ═══════════════════════════════════════════════════════════════


def project_points(points: np.ndarray, cam: Camera) -> ProjectionBatch:
    """
    Project world points through the equidistant model (rho = f * theta).

    Points that coincide with the camera center are flagged ``degenerate``,
    reported at the principal point and marked invalid instead of producing NaN.

    Args:
        points: World points, shape (N, 3), meters
        cam: Camera

    Returns:
        ProjectionBatch with per-point pixel coordinates and angles
    """
    intr = cam.intrinsics
    X_c = world_to_camera(np.atleast_2d(points), cam.extrinsics)

    x, y, z = X_c[:, 0], X_c[:, 1], X_c[:, 2]
    radial = np.hypot(x, y)
    degenerate = np.hypot(radial, z) <= DEGENERATE_DISTANCE

    theta = np.where(degenerate, 0.0, np.arctan2(radial, z))
    phi = np.where(degenerate, 0.0, np.arctan2(y, x))
    rho = intr.f * theta
    u = rho * np.cos(phi) + intr.c_x
    v = rho * np.sin(phi) + intr.c_y

    inside = (u >= 0) & (u < intr.width) & (v >= 0) & (v < intr.height)
    valid = (theta <= intr.theta_max) & inside & ~degenerate

    return ProjectionBatch(u=u, v=v, theta=theta, phi=phi, rho=rho, valid=valid, degenerate=degenerate)


def project(X_w: np.ndarray, cam: Camera) -> PixelProjection:
    """
    Project a single world point to pixel coordinates.

    Args:
        X_w: World point (3,), meters
        cam: Camera

    Returns:
        PixelProjection

    Raises:
        DegenerateProjectionError: If X_w coincides with the camera center
    """
    batch = project_points(np.asarray(X_w, dtype=np.float64).reshape(1, 3), cam)
    if batch.degenerate[0]:
        raise DegenerateProjectionError(
            f"Point {np.asarray(X_w).tolist()} coincides with the center of camera '{cam.name}'"
        )
    return PixelProjection(
        u=float(batch.u[0]),
        v=float(batch.v[0]),
        theta=float(batch.theta[0]),
        phi=float(batch.phi[0]),
        rho=float(batch.rho[0]),
        valid=bool(batch.valid[0]),
    )


# ═══════════════════════════════════════════════════════════════
# BACKWARD RAY FINDING
# ═══════════════════════════════════════════════════════════════


def pixel_field_angles(u: np.ndarray, v: np.ndarray, intr: Intrinsics) -> tuple[np.ndarray, np.ndarray]:
    """Field angle theta and azimuth phi of continuous pixel coordinates."""
    du = np.asarray(u, dtype=np.float64) - intr.c_x
    dv = np.asarray(v, dtype=np.float64) - intr.c_y
    theta = np.hypot(du, dv) / intr.f
    phi = np.arctan2(dv, du)
    return theta, phi


def rays_for_pixels(
    u: np.ndarray, v: np.ndarray, cam: Camera
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Spherical-direction backward rays for many pixels.

    No image-circle check is made; callers mask by the returned theta.
    At rho = 0 the azimuth is atan2(0, 0) = 0 and sin(theta) = 0, so the
    direction is the optical axis without dividing by rho.

    Args:
        u: Continuous pixel u coordinates, shape (N,)
        v: Continuous pixel v coordinates, shape (N,)
        cam: Camera

    Returns:
        Tuple of (origins (N, 3), unit directions (N, 3), theta (N,))
    """
    theta, phi = pixel_field_angles(u, v, cam.intrinsics)
    sin_theta = np.sin(theta)
    d_c = np.stack(
        [sin_theta * np.cos(phi), sin_theta * np.sin(phi), np.cos(theta)],
        axis=-1,
    )
    # Rᵀ @ d_c, row-wise
    d_w = d_c @ cam.extrinsics.R
    d_w /= np.linalg.norm(d_w, axis=-1, keepdims=True)
    origins = np.broadcast_to(camera_center(cam.extrinsics), d_w.shape).copy()
    return origins, d_w, theta


def ray_for_pixel(u: float, v: float, cam: Camera) -> Ray:
    """
    Backward ray through a pixel using the spherical-direction formulation.

    Valid for any field angle up to theta_max, including beyond 90 degrees.

    Args:
        u: Continuous pixel u coordinate
        v: Continuous pixel v coordinate
        cam: Camera

    Returns:
        Ray from the camera center

    Raises:
        OutsideImageCircleError: If the pixel's field angle exceeds theta_max
    """
    origins, dirs, theta = rays_for_pixels(np.array([u]), np.array([v]), cam)
    if theta[0] > cam.intrinsics.theta_max:
        raise OutsideImageCircleError(
            f"Pixel ({u}, {v}) has field angle {theta[0]:.6f} rad > "
            f"theta_max {cam.intrinsics.theta_max:.6f} rad (outside the image circle)"
        )
    return Ray(o=origins[0], d=dirs[0])


def plane_cross_points(
    u: np.ndarray, v: np.ndarray, intr: Intrinsics
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Cross points q of pixel rays with the mirrored image plane z = f.

    Uses r = f * tan(rho / f) and similar triangles; the rho -> 0 limit of
    r / rho is 1, giving q = (0, 0, f) at the principal point.

    Args:
        u: Continuous pixel u coordinates
        v: Continuous pixel v coordinates
        intr: Camera intrinsics

    Returns:
        Tuple of (q in camera frame (N, 3), theta (N,), defined mask (N,)),
        where q is zero wherever theta >= pi/2
    """
    du = np.atleast_1d(np.asarray(u, dtype=np.float64) - intr.c_x)
    dv = np.atleast_1d(np.asarray(v, dtype=np.float64) - intr.c_y)
    rho = np.hypot(du, dv)
    theta = rho / intr.f
    defined = theta < math.pi / 2

    r = intr.f * np.tan(np.where(defined, theta, 0.0))
    scale = np.ones_like(rho)
    np.divide(r, rho, out=scale, where=defined & (rho > 0))

    q = np.stack([scale * du, scale * dv, np.full_like(rho, intr.f)], axis=-1)
    q[~defined] = 0.0
    return q, theta, defined


def ray_for_pixel_plane(u: float, v: float, cam: Camera) -> Ray:
    """
    Backward ray through a pixel using the tan-plane formulation.

    Kept to cross-validate ray_for_pixel and for the cross-point diagnostic;
    it diverges as theta approaches 90 degrees.

    Raises:
        PlaneSingularityError: If theta >= pi/2
    """
    q, theta, defined = plane_cross_points(np.array([u]), np.array([v]), cam.intrinsics)
    if not defined[0]:
        raise PlaneSingularityError(
            f"Pixel ({u}, {v}) has field angle {theta[0]:.9f} rad >= pi/2; "
            "tan-plane ray is undefined"
        )
    q_w = camera_to_world(q[0], cam.extrinsics)
    o = camera_center(cam.extrinsics)
    d = q_w - o
    return Ray(o=o, d=d / np.linalg.norm(d))


# ═══════════════════════════════════════════════════════════════
# RAY CROSS-POINT DIAGNOSTIC
# ═══════════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class RayCrossingDiagnostic:
    """Plane cross points of a side x side pixel grid (row-major, v outer)."""

    side: int
    u: np.ndarray
    v: np.ndarray
    q: np.ndarray  # (N, 2), camera-frame plane coordinates in pixel units
    theta: np.ndarray
    valid: np.ndarray

    def rows(self) -> list[tuple[float, float, float, float, bool]]:
        return [
            (float(u), float(v), float(q[0]), float(q[1]), bool(ok))
            for u, v, q, ok in zip(self.u, self.v, self.q, self.valid, strict=True)
        ]


def ray_crossing_diagnostic(cam: Camera, side: int) -> RayCrossingDiagnostic:
    """
    Cross points of the tan-plane rays for a side x side grid over the image.

    Grid samples sit at the centers of a side x side subdivision of the
    image. Pixels with theta >= pi/2 (no finite cross point) or outside the
    image circle are flagged invalid rather than raising.

    Args:
        cam: Camera
        side: Grid resolution per axis (>= 1)

    Returns:
        RayCrossingDiagnostic
    """
    if side < 1:
        raise CameraModelError(f"Diagnostic grid side must be >= 1, got {side}")

    intr = cam.intrinsics
    steps = (np.arange(side, dtype=np.float64) + 0.5) / side
    vv, uu = np.meshgrid(steps * intr.height, steps * intr.width, indexing="ij")
    u = uu.ravel()
    v = vv.ravel()

    q, theta, defined = plane_cross_points(u, v, intr)
    valid = defined & (theta <= intr.theta_max)

    logger.debug(f"🐞 Ray diagnostic: {side}x{side} grid, {int(valid.sum())} plottable points")
    return RayCrossingDiagnostic(side=side, u=u, v=v, q=q[:, :2], theta=theta, valid=valid)
