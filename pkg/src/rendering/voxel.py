"""Voxel-grid radiance fields and the NVOX binary file format.

NVOX layout (little-endian, no padding):
    offset  0  magic      4 bytes  b"NVOX"
    offset  4  version    u32      1
    offset  8  dims       3 x u32  (nx, ny, nz)
    offset 20  bounds     6 x f64  (min_x, min_y, min_z, max_x, max_y, max_z)
    offset 68  payload    nx*ny*nz records of 4 x f32 (r, g, b, sigma), x fastest, z slowest
"""

import json
import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
from scipy.ndimage import map_coordinates

from src.rendering.fields import FieldBounds, RadianceField

logger = logging.getLogger(__name__)

NVOX_MAGIC = b"NVOX"
NVOX_VERSION = 1
NVOX_HEADER = np.dtype(
    [
        ("magic", "S4"),
        ("version", "<u4"),
        ("dims", "<u4", (3,)),
        ("bounds", "<f8", (6,)),
    ]
)
RECORD_BYTES = 16
MAX_VOXELS = 1 << 28


class VoxelFormatError(Exception):
    """Raised when an NVOX file cannot be parsed; carries the failing byte offset."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class BadMagicError(VoxelFormatError):
    pass


class UnsupportedVersionError(VoxelFormatError):
    pass


class TruncatedPayloadError(VoxelFormatError):
    pass


class TrailingDataError(VoxelFormatError):
    pass


class DimsOverflowError(VoxelFormatError):
    pass


class NonFiniteValueError(VoxelFormatError):
    pass


class InvalidBoundsError(VoxelFormatError):
    pass


class VoxelGrid(RadianceField):
    """
    Cell-centered RGBA voxel grid with trilinear interpolation.

    Voxel (i, j, k) has its center at lower + (i + 0.5, j + 0.5, k + 0.5) * voxel_size.
    Queries between the outermost centers and the box faces clamp to the
    nearest voxel; queries outside the box are vacuum.

    Attributes:
        dims: (nx, ny, nz)
        grid_bounds: Box covered by the grid
        data: float32 array of shape (nz, ny, nx, 4) holding (r, g, b, sigma)
    """

    def __init__(self, dims: Sequence[int], bounds: FieldBounds, data: np.ndarray) -> None:
        nx, ny, nz = (int(n) for n in dims)
        if min(nx, ny, nz) < 1:
            raise ValueError(f"Voxel dims must be >= 1, got {(nx, ny, nz)}")
        data = np.asarray(data, dtype=np.float32)
        if data.shape != (nz, ny, nx, 4):
            raise ValueError(f"Voxel data must have shape {(nz, ny, nx, 4)}, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("Voxel data contains non-finite values")

        self.dims = (nx, ny, nz)
        self.grid_bounds = bounds
        self.data = data
        self.data.setflags(write=False)
        self._channels = [np.ascontiguousarray(data[..., c], dtype=np.float64) for c in range(4)]

    @property
    def voxel_size(self) -> np.ndarray:
        return self.grid_bounds.size / np.array(self.dims, dtype=np.float64)

    def voxel_centers(self) -> np.ndarray:
        """World positions of all voxel centers, shape (nz, ny, nx, 3)."""
        nx, ny, nz = self.dims
        size = self.voxel_size
        lower = self.grid_bounds.lower
        xs = lower[0] + (np.arange(nx) + 0.5) * size[0]
        ys = lower[1] + (np.arange(ny) + 0.5) * size[1]
        zs = lower[2] + (np.arange(nz) + 0.5) * size[2]
        zz, yy, xx = np.meshgrid(zs, ys, xs, indexing="ij")
        return np.stack([xx, yy, zz], axis=-1)

    def _query(self, points: np.ndarray, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        # continuous (x, y, z) index with voxel centers on integers
        index = (points - self.grid_bounds.lower) / self.voxel_size - 0.5
        coords = index[:, ::-1].T  # (z, y, x) order matches the array layout
        values = [map_coordinates(ch, coords, order=1, mode="nearest") for ch in self._channels]
        rgb = np.stack(values[:3], axis=-1)
        return rgb, values[3]

    def bounds(self) -> FieldBounds:
        return self.grid_bounds


# ═══════════════════════════════════════════════════════════════
# NVOX READ / WRITE
# ═══════════════════════════════════════════════════════════════


def load_voxel_grid(path: str | Path) -> VoxelGrid:
    """
    Parse an NVOX file.

    Any sidecar metadata file is ignored. Densities are clamped to >= 0 and
    colors to [0, 1] at query time; the stored payload is kept as-is.

    Args:
        path: NVOX file

    Returns:
        VoxelGrid

    Raises:
        VoxelFormatError: One subclass per failure, each with the byte offset
    """
    path = Path(path)
    raw = path.read_bytes()
    header_size = NVOX_HEADER.itemsize

    if len(raw) < len(NVOX_MAGIC):
        raise TruncatedPayloadError(f"{path}: file too short for magic", len(raw))
    if raw[: len(NVOX_MAGIC)] != NVOX_MAGIC:
        raise BadMagicError(f"{path}: bad magic {raw[:4]!r}, expected {NVOX_MAGIC!r}", 0)
    if len(raw) < header_size:
        raise TruncatedPayloadError(f"{path}: header truncated", len(raw))

    header = np.frombuffer(raw, dtype=NVOX_HEADER, count=1)[0]
    version = int(header["version"])
    if version != NVOX_VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported NVOX version {version}", 4)

    nx, ny, nz = (int(n) for n in header["dims"])
    if min(nx, ny, nz) < 1 or nx * ny * nz > MAX_VOXELS:
        raise DimsOverflowError(f"{path}: invalid dims {(nx, ny, nz)} (max {MAX_VOXELS} voxels)", 8)

    bounds = np.asarray(header["bounds"], dtype=np.float64)
    non_finite = np.flatnonzero(~np.isfinite(bounds))
    if non_finite.size:
        raise NonFiniteValueError(f"{path}: non-finite bounds value", 20 + 8 * int(non_finite[0]))
    if not np.all(bounds[:3] < bounds[3:]):
        raise InvalidBoundsError(f"{path}: bounds need min < max, got {bounds.tolist()}", 20)

    count = nx * ny * nz
    expected = header_size + count * RECORD_BYTES
    if len(raw) < expected:
        raise TruncatedPayloadError(
            f"{path}: payload truncated ({len(raw)} of {expected} bytes)", len(raw)
        )
    if len(raw) > expected:
        raise TrailingDataError(f"{path}: {len(raw) - expected} unexpected trailing bytes", expected)

    payload = np.frombuffer(raw, dtype="<f4", count=count * 4, offset=header_size)
    bad = np.flatnonzero(~np.isfinite(payload))
    if bad.size:
        raise NonFiniteValueError(f"{path}: non-finite voxel value", header_size + 4 * int(bad[0]))

    grid = VoxelGrid(
        dims=(nx, ny, nz),
        bounds=FieldBounds(bounds[:3], bounds[3:]),
        data=payload.reshape(nz, ny, nx, 4).astype(np.float32),
    )
    logger.info(f"ℹ️ Loaded voxel grid {nx}x{ny}x{nz} from {path}")
    return grid


def write_voxel_grid(
    path: str | Path,
    grid: VoxelGrid,
    provenance: dict[str, Any] | None = None,
) -> Path:
    """
    Write a voxel grid as NVOX, plus an optional provenance sidecar ``<path>.json``.

    Args:
        path: Destination file
        grid: Voxel grid
        provenance: Free-form metadata (source actor, frame, ...)

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    header = np.zeros(1, dtype=NVOX_HEADER)
    header["magic"] = NVOX_MAGIC
    header["version"] = NVOX_VERSION
    header["dims"] = grid.dims
    header["bounds"] = np.concatenate([grid.grid_bounds.lower, grid.grid_bounds.upper])

    payload = np.ascontiguousarray(grid.data, dtype="<f4")
    path.write_bytes(header.tobytes() + payload.tobytes())

    if provenance is not None:
        sidecar = path.with_name(path.name + ".json")
        sidecar.write_text(json.dumps(provenance, indent=2), encoding="utf-8")

    logger.info(f"ℹ️ Wrote voxel grid {grid.dims} to {path}")
    return path


def bake_voxel_grid(
    field: RadianceField,
    dims: Sequence[int],
    bounds: FieldBounds | None = None,
) -> VoxelGrid:
    """
    Sample any field at voxel centers.

    Args:
        field: Source field
        dims: (nx, ny, nz)
        bounds: Box to cover; defaults to the field's bounds

    Returns:
        VoxelGrid reproducing the field at its voxel centers
    """
    bounds = bounds or field.bounds()
    nx, ny, nz = (int(n) for n in dims)
    placeholder = VoxelGrid((nx, ny, nz), bounds, np.zeros((nz, ny, nx, 4), dtype=np.float32))
    centers = placeholder.voxel_centers().reshape(-1, 3)

    view = np.broadcast_to(np.array([0.0, 0.0, -1.0]), centers.shape)
    rgb, sigma = field.evaluate(centers, view)
    data = np.concatenate([rgb, sigma[:, None]], axis=-1).reshape(nz, ny, nx, 4)
    return VoxelGrid((nx, ny, nz), bounds, data.astype(np.float32))


def voxel_info(grid: VoxelGrid) -> dict[str, Any]:
    """Summary of a voxel grid for display."""
    sigma = grid.data[..., 3]
    occupied = sigma > 0
    return {
        "dims": list(grid.dims),
        "bounds_min": grid.grid_bounds.lower.tolist(),
        "bounds_max": grid.grid_bounds.upper.tolist(),
        "voxel_size": grid.voxel_size.tolist(),
        "voxels": int(sigma.size),
        "occupied_voxels": int(occupied.sum()),
        "sigma_min": float(sigma.min()),
        "sigma_max": float(sigma.max()),
        "sigma_mean_occupied": float(sigma[occupied].mean()) if occupied.any() else 0.0,
    }
