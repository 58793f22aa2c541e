from .bvh import Bvh, Hit, build_bvh, brute_force_query
from .renderer import (
    RenderError,
    RenderOutput,
    RenderStats,
    SceneGeometry,
    camera_basis,
    intersect,
    material_table,
    render_shading_pass,
    render_triple,
    tessellate_scene,
)

__all__ = [
    "Bvh",
    "Hit",
    "build_bvh",
    "brute_force_query",
    "RenderError",
    "RenderOutput",
    "RenderStats",
    "SceneGeometry",
    "camera_basis",
    "intersect",
    "material_table",
    "render_shading_pass",
    "render_triple",
    "tessellate_scene",
]
