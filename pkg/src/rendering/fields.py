"""Queryable radiance fields F: (x, d) -> (c, sigma) and analytic test primitives."""

import logging
import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

DIRECTION_TOLERANCE = 1e-9


class FieldQueryError(Exception):
    """Raised for invalid field queries (non-finite positions, non-unit directions)."""

    pass


@dataclass(frozen=True)
class RadianceSample:
    """Emitted color (RGB in [0, 1]) and volumetric density (1/m, >= 0) at one point."""

    c: tuple[float, float, float]
    sigma: float


@dataclass(frozen=True, eq=False)
class FieldBounds:
    """Axis-aligned box that contains every point with non-zero density."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.array(self.lower, dtype=np.float64).reshape(3)
        upper = np.array(self.upper, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise FieldQueryError("Field bounds must be finite")
        if not np.all(lower < upper):
            raise FieldQueryError(f"Field bounds need lower < upper, got {lower} / {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def size(self) -> np.ndarray:
        return self.upper - self.lower

    def union(self, other: "FieldBounds") -> "FieldBounds":
        return FieldBounds(np.minimum(self.lower, other.lower), np.maximum(self.upper, other.upper))

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return np.all((points >= self.lower) & (points <= self.upper), axis=-1)

    def intersect_rays(
        self, origins: np.ndarray, directions: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Slab-method intersection of rays with the box.

        Args:
            origins: Ray origins, shape (N, 3)
            directions: Ray directions, shape (N, 3)

        Returns:
            Tuple of (t_enter (N,), t_exit (N,), hit (N,)); t_enter is
            clamped to 0 so rays starting inside the box begin at their origin
        """
        origins = np.atleast_2d(origins)
        directions = np.atleast_2d(directions)
        parallel = directions == 0.0
        safe = np.where(parallel, 1.0, directions)
        t_lo = (self.lower - origins) / safe
        t_hi = (self.upper - origins) / safe

        enter_axis = np.minimum(t_lo, t_hi)
        exit_axis = np.maximum(t_lo, t_hi)

        # A parallel axis either always overlaps the slab or never does
        inside_slab = (origins >= self.lower) & (origins <= self.upper)
        enter_axis = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), enter_axis)
        exit_axis = np.where(parallel, np.inf, exit_axis)

        t_enter = np.max(enter_axis, axis=-1)
        t_exit = np.min(exit_axis, axis=-1)
        t_enter = np.maximum(t_enter, 0.0)
        hit = t_exit > t_enter
        return t_enter, t_exit, hit


# ═══════════════════════════════════════════════════════════════
# FIELD INTERFACE
# ═══════════════════════════════════════════════════════════════


class RadianceField(ABC):
    """
    Immutable radiance field.

    Subclasses implement ``_query`` and ``bounds``; ``evaluate`` enforces the
    shared contract (vacuum outside the bounds, colors in [0, 1], sigma >= 0)
    so every field is safe to share read-only between render workers.
    """

    @abstractmethod
    def _query(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return (rgb (N, 3), sigma (N,)) for points inside the bounds."""

    @abstractmethod
    def bounds(self) -> FieldBounds:
        """Conservative box outside of which sigma is zero."""

    def without_parts_at(self, point: Sequence[float]) -> "RadianceField | None":
        """
        The field with every part that contains ``point`` removed.

        A monolithic field has no parts and returns itself. Composite fields
        drop the members with density at ``point`` and return None when
        nothing is left.
        """
        return self

    def evaluate(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """
        Query colors and densities for many points.

        Args:
            points: Positions, shape (N, 3), meters
            directions: Unit viewing directions, shape (N, 3)

        Returns:
            Tuple of (rgb (N, 3) in [0, 1], sigma (N,) >= 0)
        """
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        directions = np.broadcast_to(np.asarray(directions, dtype=np.float64), points.shape)

        rgb = np.zeros_like(points)
        sigma = np.zeros(points.shape[0])
        inside = self.bounds().contains(points)
        if np.any(inside):
            rgb_in, sigma_in = self._query(points[inside], directions[inside])
            rgb[inside] = np.clip(rgb_in, 0.0, 1.0)
            sigma[inside] = np.maximum(sigma_in, 0.0)
        return rgb, sigma


def sample(field: RadianceField, x: Sequence[float], d: Sequence[float]) -> RadianceSample:
    """
    Sample a field at a single position and direction.

    Raises:
        FieldQueryError: If x is not finite or d is not unit length
    """
    x_arr = np.asarray(x, dtype=np.float64).reshape(3)
    d_arr = np.asarray(d, dtype=np.float64).reshape(3)
    if not np.all(np.isfinite(x_arr)):
        raise FieldQueryError(f"Sample position must be finite, got {x_arr.tolist()}")
    if abs(float(np.linalg.norm(d_arr)) - 1.0) > DIRECTION_TOLERANCE:
        raise FieldQueryError(f"Sample direction must be unit length, got {d_arr.tolist()}")

    rgb, sigma = field.evaluate(x_arr[None, :], d_arr[None, :])
    return RadianceSample(c=(float(rgb[0, 0]), float(rgb[0, 1]), float(rgb[0, 2])), sigma=float(sigma[0]))


def field_bounds(field: RadianceField) -> FieldBounds:
    return field.bounds()


def _color(value: Sequence[float]) -> np.ndarray:
    color = np.asarray(value, dtype=np.float64).reshape(3)
    if np.any(color < 0) or np.any(color > 1):
        raise FieldQueryError(f"Colors must lie in [0, 1], got {color.tolist()}")
    return color


def _density(value: float) -> float:
    if not (math.isfinite(value) and value >= 0):
        raise FieldQueryError(f"Density must be finite and >= 0, got {value}")
    return float(value)


# ═══════════════════════════════════════════════════════════════
# ANALYTIC FIELDS
# ═══════════════════════════════════════════════════════════════


class VacuumField(RadianceField):
    """Empty space: zero density everywhere."""

    def _query(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros_like(points), np.zeros(points.shape[0])

    def bounds(self) -> FieldBounds:
        return FieldBounds(lower=(-0.5, -0.5, -0.5), upper=(0.5, 0.5, 0.5))


class UniformSphereField(RadianceField):
    """Sphere of constant density and color (closed ball)."""

    def __init__(
        self,
        center: Sequence[float],
        radius: float,
        sigma: float,
        color: Sequence[float] = (1.0, 1.0, 1.0),
    ) -> None:
        if not radius > 0:
            raise FieldQueryError(f"Sphere radius must be positive, got {radius}")
        self.center = np.asarray(center, dtype=np.float64).reshape(3)
        self.radius = float(radius)
        self.sigma = _density(sigma)
        self.color = _color(color)

    def _query(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        inside = np.sum((points - self.center) ** 2, axis=-1) <= self.radius**2
        sigma = np.where(inside, self.sigma, 0.0)
        return np.broadcast_to(self.color, points.shape), sigma

    def bounds(self) -> FieldBounds:
        return FieldBounds(self.center - self.radius, self.center + self.radius)


class BoxField(RadianceField):
    """Axis-aligned box of constant density and color."""

    def __init__(
        self,
        lower: Sequence[float],
        upper: Sequence[float],
        sigma: float,
        color: Sequence[float] = (1.0, 1.0, 1.0),
    ) -> None:
        self._bounds = FieldBounds(lower, upper)
        self.sigma = _density(sigma)
        self.color = _color(color)

    def _query(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # evaluate() only forwards points inside the box
        return np.broadcast_to(self.color, points.shape), np.full(points.shape[0], self.sigma)

    def bounds(self) -> FieldBounds:
        return self._bounds


class GaussianBlobField(RadianceField):
    """
    Isotropic Gaussian density sigma0 * exp(-|x - mu|^2 / (2 s^2)).

    The density is truncated to the cube mu +/- cutoff * s so the field
    honours its bounds; at the default cutoff the dropped tail is below
    sigma0 * 3.4e-4.
    """

    def __init__(
        self,
        mean: Sequence[float],
        scale: float,
        sigma: float,
        color: Sequence[float] = (1.0, 1.0, 1.0),
        cutoff: float = 4.0,
    ) -> None:
        if not (scale > 0 and cutoff > 0):
            raise FieldQueryError("Gaussian scale and cutoff must be positive")
        self.mean = np.asarray(mean, dtype=np.float64).reshape(3)
        self.scale = float(scale)
        self.sigma = _density(sigma)
        self.color = _color(color)
        self.cutoff = float(cutoff)

    def _query(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        sq = np.sum((points - self.mean) ** 2, axis=-1)
        sigma = self.sigma * np.exp(-sq / (2.0 * self.scale**2))
        return np.broadcast_to(self.color, points.shape), sigma

    def bounds(self) -> FieldBounds:
        half = self.cutoff * self.scale
        return FieldBounds(self.mean - half, self.mean + half)


class UnionField(RadianceField):
    """
    Superposition of fields: densities add, colors mix by density weight.

    Where every member is empty the color is black.
    """

    def __init__(self, members: Sequence[RadianceField]) -> None:
        if not members:
            raise FieldQueryError("A union field needs at least one member")
        self.members = tuple(members)
        bounds = self.members[0].bounds()
        for member in self.members[1:]:
            bounds = bounds.union(member.bounds())
        self._bounds = bounds

    def _query(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        sigma_total = np.zeros(points.shape[0])
        weighted = np.zeros_like(points)
        for member in self.members:
            rgb, sigma = member.evaluate(points, directions)
            sigma_total += sigma
            weighted += rgb * sigma[:, None]

        rgb = np.zeros_like(points)
        np.divide(weighted, sigma_total[:, None], out=rgb, where=sigma_total[:, None] > 0)
        return rgb, sigma_total

    def bounds(self) -> FieldBounds:
        return self._bounds

    def without_parts_at(self, point: Sequence[float]) -> RadianceField | None:
        at = np.asarray(point, dtype=np.float64).reshape(1, 3)
        up = np.array([[0.0, 0.0, 1.0]])
        kept = [member for member in self.members if member.evaluate(at, up)[1][0] <= 0.0]
        if not kept:
            return None
        if len(kept) == len(self.members):
            return self
        return kept[0] if len(kept) == 1 else UnionField(kept)


class TranslatedField(RadianceField):
    """A field shifted by a world offset: F'(x, d) = F(x - offset, d)."""

    def __init__(self, base: RadianceField, offset: Sequence[float]) -> None:
        self.base = base
        self.offset = np.asarray(offset, dtype=np.float64).reshape(3)
        base_bounds = base.bounds()
        self._bounds = FieldBounds(base_bounds.lower + self.offset, base_bounds.upper + self.offset)

    def _query(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.base.evaluate(points - self.offset, directions)

    def bounds(self) -> FieldBounds:
        return self._bounds

    def without_parts_at(self, point: Sequence[float]) -> RadianceField | None:
        reduced = self.base.without_parts_at(np.asarray(point, dtype=np.float64).reshape(3) - self.offset)
        if reduced is None:
            return None
        return self if reduced is self.base else TranslatedField(reduced, self.offset)
