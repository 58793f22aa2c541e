"""Scene tessellation and the rendering entry points.

Shading is Lambertian direct illumination from the scene's four point lights
plus a uniform achromatic ambient term:

    S = ambient + sum over lights of  visibility * intensity * max(0, n.l) / d^2

Reflectance is the hit-point albedo. The image channel is defined as the
product of the stored float32 factors, which makes the per-pixel product
model exact up to one float32 rounding step (well under the 1e-6 budget).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..imgcore import ImageBuffer, IntrinsicTriple
from ..materials import KIND_CODE, MaterialSpec
from ..meshes import load_object_groups
from ..rng import splitmix64
from ..scenegen import CameraSpec, SceneSpec, object_transform
from .bvh import Bvh, build_bvh
from .kernels import render_kernel

_DEGENERATE_AREA = 1e-12
_MASK64 = 0xFFFFFFFFFFFFFFFF
_VIEW_SALT = 0xD1B54A32D192ED03


class RenderError(RuntimeError):
    """Raised when rendering cannot produce a valid ground-truth triple."""


@dataclass(frozen=True)
class RenderStats:
    triangle_count: int
    degenerate_skipped: int
    escaped_rays: int


@dataclass(frozen=True)
class RenderOutput:
    triple: IntrinsicTriple
    mask: ImageBuffer  # 1ch, fraction of samples that hit the object
    stats: RenderStats


@dataclass
class SceneGeometry:
    """Tessellated scene: triangle soup + material table + BVH."""

    v0: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    n0: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    uva: np.ndarray
    uvb: np.ndarray
    uvc: np.ndarray
    tri_mat: np.ndarray   # (m,) int32 index into the material table
    tri_obj: np.ndarray   # (m,) float64, 1.0 when the triangle is object
    mat_kind: np.ndarray
    mat_ncol: np.ndarray
    mat_colors: np.ndarray
    mat_freq: np.ndarray
    mat_phase: np.ndarray
    mat_dir: np.ndarray
    mat_salt: np.ndarray
    light_pos: np.ndarray
    light_intensity: np.ndarray
    ambient: float
    degenerate_skipped: int
    bvh: Bvh


def material_table(materials: list[MaterialSpec]) -> tuple:
    """Pack MaterialSpecs into the flat arrays the kernel evaluates.

    Stripe directions are precomputed here with the same cos/sin calls that
    evaluate_material performs, so kernel and numpy paths share exact floats.
    """
    n = len(materials)
    kind = np.zeros(n, dtype=np.int64)
    ncol = np.zeros(n, dtype=np.int64)
    colors = np.zeros((n, 4, 3), dtype=np.float64)
    freq = np.zeros((n, 2), dtype=np.float64)
    phase = np.zeros((n, 2), dtype=np.float64)
    direction = np.zeros((n, 2), dtype=np.float64)
    salt = np.zeros(n, dtype=np.uint64)
    for i, mat in enumerate(materials):
        kind[i] = KIND_CODE[mat.kind]
        ncol[i] = len(mat.colors)
        for j, rgb in enumerate(mat.colors):
            colors[i, j] = rgb
        freq[i] = mat.freq
        phase[i] = mat.phase
        direction[i, 0] = np.cos(mat.angle)
        direction[i, 1] = np.sin(mat.angle)
        salt[i] = mat.salt % (1 << 64)
    return kind, ncol, colors, freq, phase, direction, salt


class _SoupBuilder:
    def __init__(self) -> None:
        self.v0: list = []
        self.v1: list = []
        self.v2: list = []
        self.n0: list = []
        self.n1: list = []
        self.n2: list = []
        self.uva: list = []
        self.uvb: list = []
        self.uvc: list = []
        self.mat: list = []
        self.obj: list = []
        self.degenerate = 0

    def add(self, verts, normals, uvs, mat_id, is_object) -> None:
        a, b, c = (np.asarray(p, dtype=np.float64) for p in verts)
        area2 = np.linalg.norm(np.cross(b - a, c - a))
        if area2 < _DEGENERATE_AREA:
            self.degenerate += 1
            return
        self.v0.append(a)
        self.v1.append(b)
        self.v2.append(c)
        na, nb, nc = normals
        self.n0.append(np.asarray(na, dtype=np.float64))
        self.n1.append(np.asarray(nb, dtype=np.float64))
        self.n2.append(np.asarray(nc, dtype=np.float64))
        ta, tb, tc = uvs
        self.uva.append(np.asarray(ta, dtype=np.float64))
        self.uvb.append(np.asarray(tb, dtype=np.float64))
        self.uvc.append(np.asarray(tc, dtype=np.float64))
        self.mat.append(mat_id)
        self.obj.append(1.0 if is_object else 0.0)

    def add_polygon(self, poly, uvs, normal, mat_id, is_object) -> None:
        """Fan-triangulate a convex polygon with a shared flat normal."""
        for k in range(1, len(poly) - 1):
            self.add(
                (poly[0], poly[k], poly[k + 1]),
                (normal, normal, normal),
                (uvs[0], uvs[k], uvs[k + 1]),
                mat_id,
                is_object,
            )


def tessellate_scene(spec: SceneSpec) -> SceneGeometry:
    soup = _SoupBuilder()
    room = spec.room
    materials: list[MaterialSpec] = [
        room.wall_material,
        room.floor_material,
        room.ceiling_material,
    ]

    # Walls: u is the arc length along the perimeter so patterns continue
    # across wall joints; v is height above the floor. Metric UVs keep
    # texture frequency independent of room size.
    base = room.base_vertices()
    n = room.wall_count
    edge_len = float(np.linalg.norm(base[1] - base[0]))
    h = room.half_height
    for k, quad in enumerate(room.wall_polygons()):
        u0 = k * edge_len
        u1 = (k + 1) * edge_len
        # quad corners are [b at -h, a at -h, a at +h, b at +h]
        uvs = [(u1, 0.0), (u0, 0.0), (u0, 2 * h), (u1, 2 * h)]
        mid = quad.mean(axis=0)
        normal = np.array([-mid[0], -mid[1], 0.0])
        normal /= np.linalg.norm(normal)
        soup.add_polygon(quad, uvs, normal, 0, False)

    floor = room.floor_polygon()
    soup.add_polygon(
        floor, [(p[0], p[1]) for p in floor], np.array([0.0, 0.0, 1.0]), 1, False
    )
    ceil = room.ceiling_polygon()
    soup.add_polygon(
        ceil, [(p[0], p[1]) for p in ceil], np.array([0.0, 0.0, -1.0]), 2, False
    )

    center, scale = object_transform(spec.obj)
    groups = load_object_groups(spec.obj.source)
    group_mats = dict(spec.obj.group_materials)
    cos_y = math.cos(spec.obj.yaw)
    sin_y = math.sin(spec.obj.yaw)
    rot = np.array([[cos_y, -sin_y, 0.0], [sin_y, cos_y, 0.0], [0.0, 0.0, 1.0]])
    for group in groups:
        if group.name not in group_mats:
            raise RenderError(f"object group {group.name!r} has no material")
        mat_id = len(materials)
        materials.append(group_mats[group.name])
        mesh = group.mesh
        verts = ((mesh.vertices - center) * scale) @ rot.T
        normals = mesh.normals @ rot.T
        for face in mesh.faces:
            ia, ib, ic = int(face[0]), int(face[1]), int(face[2])
            soup.add(
                (verts[ia], verts[ib], verts[ic]),
                (normals[ia], normals[ib], normals[ic]),
                ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0)),
                mat_id,
                True,
            )

    if not soup.v0:
        raise RenderError("scene tessellated to zero triangles")

    v0 = np.asarray(soup.v0)
    v1 = np.asarray(soup.v1)
    v2 = np.asarray(soup.v2)
    kind, ncol, colors, freq, phase, direction, salt = material_table(materials)
    return SceneGeometry(
        v0=v0,
        v1=v1,
        v2=v2,
        n0=np.asarray(soup.n0),
        n1=np.asarray(soup.n1),
        n2=np.asarray(soup.n2),
        uva=np.asarray(soup.uva),
        uvb=np.asarray(soup.uvb),
        uvc=np.asarray(soup.uvc),
        tri_mat=np.asarray(soup.mat, dtype=np.int32),
        tri_obj=np.asarray(soup.obj, dtype=np.float64),
        mat_kind=kind,
        mat_ncol=ncol,
        mat_colors=colors,
        mat_freq=freq,
        mat_phase=phase,
        mat_dir=direction,
        mat_salt=salt,
        light_pos=np.asarray([l.position for l in spec.lights], dtype=np.float64),
        light_intensity=np.asarray([l.intensity for l in spec.lights], dtype=np.float64),
        ambient=spec.ambient,
        degenerate_skipped=soup.degenerate,
        bvh=build_bvh(v0, v1, v2),
    )


def camera_basis(cam: CameraSpec) -> tuple:
    """Right-handed look-at-origin basis with +z as world up."""
    pos = cam.position()
    fwd = -pos / np.linalg.norm(pos)
    world_up = np.array([0.0, 0.0, 1.0])
    right = np.cross(fwd, world_up)
    right_norm = np.linalg.norm(right)
    if right_norm < 1e-12:
        raise RenderError("camera looks straight down the up axis")
    right /= right_norm
    up = np.cross(right, fwd)
    tan_half_y = math.tan(math.radians(cam.fov_y_deg) / 2.0)
    return pos, right, up, fwd, tan_half_y


def jitter_base(scene_seed: int, view_index: int) -> np.uint64:
    mixed = splitmix64((scene_seed + (view_index + 1) * _VIEW_SALT) & _MASK64)
    return np.uint64(mixed)


def _run_kernel(
    geo: SceneGeometry,
    cam: CameraSpec,
    spp: int,
    base: np.uint64,
    jitter: bool,
    with_shadows: bool,
):
    width = height = cam.image_size
    pos, right, up, fwd, tan_half_y = camera_basis(cam)
    out_ref = np.empty((height, width, 3), dtype=np.float32)
    out_sha = np.empty((height, width, 1), dtype=np.float32)
    out_img = np.empty((height, width, 3), dtype=np.float32)
    out_msk = np.empty((height, width, 1), dtype=np.float32)
    escaped = render_kernel(
        geo.v0, geo.v1, geo.v2, geo.n0, geo.n1, geo.n2,
        geo.uva, geo.uvb, geo.uvc, geo.tri_mat, geo.tri_obj,
        *geo.bvh.arrays()[:7],
        geo.mat_kind, geo.mat_ncol, geo.mat_colors, geo.mat_freq,
        geo.mat_phase, geo.mat_dir, geo.mat_salt,
        geo.light_pos, geo.light_intensity,
        pos[0], pos[1], pos[2],
        right[0], right[1], right[2],
        up[0], up[1], up[2],
        fwd[0], fwd[1], fwd[2],
        tan_half_y, float(width) / float(height),
        width, height, spp, geo.ambient, base,
        jitter, with_shadows,
        out_ref, out_sha, out_img, out_msk,
    )
    return out_ref, out_sha, out_img, out_msk, int(escaped)


def render_triple(
    spec: SceneSpec,
    view_index: int,
    quality: int | None = None,
    jitter: bool = True,
) -> RenderOutput:
    """Render one view into an exact (image, reflectance, shading) triple."""
    if view_index not in (0, 1):
        raise ValueError(f"view_index must be 0 or 1, got {view_index}")
    spp = spec.spp if quality is None else int(quality)
    if spp < 1:
        raise ValueError("quality (samples per pixel) must be >= 1")
    geo = tessellate_scene(spec)
    cam = spec.cameras[view_index]
    base = jitter_base(spec.seed, view_index)
    out_ref, out_sha, out_img, out_msk, escaped = _run_kernel(
        geo, cam, spp, base, jitter, with_shadows=True
    )
    if escaped:
        raise RenderError(
            f"{escaped} primary rays escaped scene {spec.scene_id} view "
            f"{view_index}; the room is not watertight"
        )
    triple = IntrinsicTriple(
        image=ImageBuffer(out_img),
        reflectance=ImageBuffer(out_ref),
        shading=ImageBuffer(out_sha),
        scene_id=spec.scene_id,
        view_index=view_index,
    )
    stats = RenderStats(
        triangle_count=len(geo.v0),
        degenerate_skipped=geo.degenerate_skipped,
        escaped_rays=escaped,
    )
    return RenderOutput(triple=triple, mask=ImageBuffer(out_msk), stats=stats)


def render_shading_pass(
    spec: SceneSpec,
    view_index: int,
    with_shadows: bool,
    quality: int | None = None,
    jitter: bool = True,
) -> ImageBuffer:
    """Shading-only render; with_shadows=False skips all visibility tests."""
    if view_index not in (0, 1):
        raise ValueError(f"view_index must be 0 or 1, got {view_index}")
    spp = spec.spp if quality is None else int(quality)
    geo = tessellate_scene(spec)
    cam = spec.cameras[view_index]
    base = jitter_base(spec.seed, view_index)
    _, out_sha, _, _, escaped = _run_kernel(
        geo, cam, spp, base, jitter, with_shadows=with_shadows
    )
    if escaped:
        raise RenderError(
            f"{escaped} primary rays escaped scene {spec.scene_id} view "
            f"{view_index}; the room is not watertight"
        )
    return ImageBuffer(out_sha)


def intersect(bvh: Bvh, origin, direction):
    """Nearest-hit query; requires a normalized direction."""
    return bvh.query(origin, direction)
