"""Radiance fields, NVOX voxel grids and the fisheye volume renderer."""

from src.rendering.fields import (
    BoxField,
    FieldBounds,
    FieldQueryError,
    GaussianBlobField,
    RadianceField,
    RadianceSample,
    TranslatedField,
    UniformSphereField,
    UnionField,
    VacuumField,
    field_bounds,
    sample,
)
from src.rendering.images import (
    composite_background,
    load_image,
    load_mask,
    save_alpha16,
    save_mask,
    save_rgb,
)
from src.rendering.renderer import (
    RenderError,
    RenderOptions,
    RenderOutput,
    composite,
    render_image,
    render_ray,
    render_rays,
    render_set,
    transmittance,
)
from src.rendering.voxel import (
    VoxelFormatError,
    VoxelGrid,
    bake_voxel_grid,
    load_voxel_grid,
    voxel_info,
    write_voxel_grid,
)

__all__ = [
    "BoxField",
    "FieldBounds",
    "FieldQueryError",
    "GaussianBlobField",
    "RadianceField",
    "RadianceSample",
    "RenderError",
    "RenderOptions",
    "RenderOutput",
    "TranslatedField",
    "UniformSphereField",
    "UnionField",
    "VacuumField",
    "VoxelFormatError",
    "VoxelGrid",
    "bake_voxel_grid",
    "composite",
    "composite_background",
    "field_bounds",
    "load_image",
    "load_mask",
    "load_voxel_grid",
    "render_image",
    "render_ray",
    "render_rays",
    "render_set",
    "sample",
    "save_alpha16",
    "save_mask",
    "save_rgb",
    "transmittance",
    "voxel_info",
    "write_voxel_grid",
]
