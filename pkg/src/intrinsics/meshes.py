"""Triangle meshes: procedural primitives, multi-group object templates, and
a minimal OBJ importer (v/vn/f with groups).

All primitives are closed, outward-oriented triangle meshes so shadow rays
and the signed-volume orientation check behave. Object templates stand in
for external mesh collections and always expose at least two mesh groups,
so per-group random albedo assignment is exercised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Malformed mesh data or OBJ file."""


@dataclass
class TriMesh:
    vertices: np.ndarray  # (n, 3) float64
    normals: np.ndarray   # (n, 3) float64 unit vertex normals
    faces: np.ndarray     # (m, 3) int32

    def __post_init__(self) -> None:
        self.vertices = np.asarray(self.vertices, dtype=np.float64)
        self.normals = np.asarray(self.normals, dtype=np.float64)
        self.faces = np.asarray(self.faces, dtype=np.int32)
        if self.vertices.shape != self.normals.shape:
            raise MeshError("vertex and normal arrays must match")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be (m, 3) triangles")
        if self.faces.size and self.faces.max() >= len(self.vertices):
            raise MeshError("face index out of range")

    @property
    def triangle_count(self) -> int:
        return len(self.faces)

    def transformed(self, scale: float = 1.0, yaw: float = 0.0, offset=(0, 0, 0)) -> "TriMesh":
        c, s = math.cos(yaw), math.sin(yaw)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        verts = (self.vertices * scale) @ rot.T + np.asarray(offset, dtype=np.float64)
        normals = self.normals @ rot.T
        return TriMesh(verts, normals, self.faces.copy())


@dataclass
class MeshGroup:
    name: str
    mesh: TriMesh


def signed_volume(mesh: TriMesh) -> float:
    """Divergence-theorem volume; positive for closed outward-wound meshes."""
    v = mesh.vertices
    a = v[mesh.faces[:, 0]]
    b = v[mesh.faces[:, 1]]
    c = v[mesh.faces[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def is_closed(mesh: TriMesh, decimals: int = 9) -> bool:
    """True when every edge is shared by exactly two triangles.

    Vertices are unified by rounded position first, so meshes with split
    normals (boxes, cones) are judged on geometry rather than topology.
    """
    rounded = np.round(mesh.vertices, decimals)
    _, index = np.unique(rounded, axis=0, return_inverse=True)
    faces = index[mesh.faces]
    edges: dict[tuple[int, int], int] = {}
    for tri in faces:
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            if a == b:
                return False
            key = (min(a, b), max(a, b))
            edges[key] = edges.get(key, 0) + 1
    return all(count == 2 for count in edges.values())


def merge(meshes: list[TriMesh]) -> TriMesh:
    verts = []
    normals = []
    faces = []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        normals.append(m.normals)
        faces.append(m.faces + offset)
        offset += len(m.vertices)
    return TriMesh(np.vstack(verts), np.vstack(normals), np.vstack(faces))


def bounding_sphere(groups: list[MeshGroup]) -> tuple[np.ndarray, float]:
    """Center (bbox midpoint over all groups) and radius of the union."""
    allv = np.vstack([g.mesh.vertices for g in groups])
    center = (allv.min(axis=0) + allv.max(axis=0)) / 2.0
    radius = float(np.linalg.norm(allv - center, axis=1).max())
    return center, radius


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------


def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> TriMesh:
    sx, sy, sz = (s / 2.0 for s in size)
    cx, cy, cz = center
    verts = []
    normals = []
    faces = []
    # One quad per face with its own four vertices, so normals stay flat.
    quads = [
        ((+1, 0, 0), [(+sx, -sy, -sz), (+sx, +sy, -sz), (+sx, +sy, +sz), (+sx, -sy, +sz)]),
        ((-1, 0, 0), [(-sx, +sy, -sz), (-sx, -sy, -sz), (-sx, -sy, +sz), (-sx, +sy, +sz)]),
        ((0, +1, 0), [(+sx, +sy, -sz), (-sx, +sy, -sz), (-sx, +sy, +sz), (+sx, +sy, +sz)]),
        ((0, -1, 0), [(-sx, -sy, -sz), (+sx, -sy, -sz), (+sx, -sy, +sz), (-sx, -sy, +sz)]),
        ((0, 0, +1), [(-sx, -sy, +sz), (+sx, -sy, +sz), (+sx, +sy, +sz), (-sx, +sy, +sz)]),
        ((0, 0, -1), [(-sx, +sy, -sz), (+sx, +sy, -sz), (+sx, -sy, -sz), (-sx, -sy, -sz)]),
    ]
    for normal, corners in quads:
        base = len(verts)
        for px, py, pz in corners:
            verts.append((px + cx, py + cy, pz + cz))
            normals.append(normal)
        faces.append((base, base + 1, base + 2))
        faces.append((base, base + 2, base + 3))
    return TriMesh(np.array(verts, float), np.array(normals, float), np.array(faces))


def uv_sphere(radius=1.0, center=(0.0, 0.0, 0.0), rings=12, segments=18) -> TriMesh:
    cx, cy, cz = center
    verts = [(cx, cy, cz + radius)]
    normals = [(0.0, 0.0, 1.0)]
    for i in range(1, rings):
        phi = math.pi * i / rings
        for j in range(segments):
            theta = 2.0 * math.pi * j / segments
            n = (
                math.sin(phi) * math.cos(theta),
                math.sin(phi) * math.sin(theta),
                math.cos(phi),
            )
            normals.append(n)
            verts.append((cx + radius * n[0], cy + radius * n[1], cz + radius * n[2]))
    verts.append((cx, cy, cz - radius))
    normals.append((0.0, 0.0, -1.0))
    top, bottom = 0, len(verts) - 1

    def ring(i: int, j: int) -> int:
        return 1 + (i - 1) * segments + (j % segments)

    faces = []
    for j in range(segments):
        faces.append((top, ring(1, j), ring(1, j + 1)))
    for i in range(1, rings - 1):
        for j in range(segments):
            a, b = ring(i, j), ring(i, j + 1)
            c, d = ring(i + 1, j), ring(i + 1, j + 1)
            faces.append((a, c, d))
            faces.append((a, d, b))
    for j in range(segments):
        faces.append((bottom, ring(rings - 1, j + 1), ring(rings - 1, j)))
    return TriMesh(np.array(verts, float), np.array(normals, float), np.array(faces))


def cylinder(radius=0.5, half_height=1.0, center=(0.0, 0.0, 0.0), segments=18) -> TriMesh:
    cx, cy, cz = center
    verts = []
    normals = []
    faces = []
    # Side wall with smooth normals.
    for j in range(segments):
        theta = 2.0 * math.pi * j / segments
        nx, ny = math.cos(theta), math.sin(theta)
        for z in (-half_height, half_height):
            verts.append((cx + radius * nx, cy + radius * ny, cz + z))
            normals.append((nx, ny, 0.0))
    for j in range(segments):
        a = 2 * j
        b = 2 * ((j + 1) % segments)
        faces.append((a, b, b + 1))
        faces.append((a, b + 1, a + 1))
    # Caps with flat normals and their own rim vertices.
    for sign in (+1, -1):
        z = cz + sign * half_height
        center_idx = len(verts)
        verts.append((cx, cy, z))
        normals.append((0.0, 0.0, float(sign)))
        rim_start = len(verts)
        for j in range(segments):
            theta = 2.0 * math.pi * j / segments
            verts.append((cx + radius * math.cos(theta), cy + radius * math.sin(theta), z))
            normals.append((0.0, 0.0, float(sign)))
        for j in range(segments):
            a = rim_start + j
            b = rim_start + (j + 1) % segments
            if sign > 0:
                faces.append((center_idx, a, b))
            else:
                faces.append((center_idx, b, a))
    return TriMesh(np.array(verts, float), np.array(normals, float), np.array(faces))


def cone(radius=0.6, height=1.2, center=(0.0, 0.0, 0.0), segments=18) -> TriMesh:
    """Apex up at center_z + height/2, circular base below."""
    cx, cy, cz = center
    zb = cz - height / 2.0
    za = cz + height / 2.0
    slant = math.hypot(radius, height)
    nz = radius / slant
    nr = height / slant
    verts = []
    normals = []
    faces = []
    for j in range(segments):
        theta = 2.0 * math.pi * j / segments
        nx, ny = math.cos(theta), math.sin(theta)
        verts.append((cx + radius * nx, cy + radius * ny, zb))
        normals.append((nr * nx, nr * ny, nz))
    apex_base = len(verts)
    for j in range(segments):
        # One apex copy per segment so the lateral normal varies around the rim.
        theta = 2.0 * math.pi * (j + 0.5) / segments
        verts.append((cx, cy, za))
        normals.append((nr * math.cos(theta), nr * math.sin(theta), nz))
    for j in range(segments):
        faces.append((j, (j + 1) % segments, apex_base + j))
    center_idx = len(verts)
    verts.append((cx, cy, zb))
    normals.append((0.0, 0.0, -1.0))
    rim_start = len(verts)
    for j in range(segments):
        theta = 2.0 * math.pi * j / segments
        verts.append((cx + radius * math.cos(theta), cy + radius * math.sin(theta), zb))
        normals.append((0.0, 0.0, -1.0))
    for j in range(segments):
        a = rim_start + j
        b = rim_start + (j + 1) % segments
        faces.append((center_idx, b, a))
    return TriMesh(np.array(verts, float), np.array(normals, float), np.array(faces))


def torus(major=0.8, minor=0.25, center=(0.0, 0.0, 0.0), segments=20, sides=12) -> TriMesh:
    cx, cy, cz = center
    verts = []
    normals = []
    for i in range(segments):
        theta = 2.0 * math.pi * i / segments
        ct, st = math.cos(theta), math.sin(theta)
        for j in range(sides):
            phi = 2.0 * math.pi * j / sides
            cp, sp = math.cos(phi), math.sin(phi)
            n = (ct * cp, st * cp, sp)
            verts.append(
                (cx + (major + minor * cp) * ct, cy + (major + minor * cp) * st, cz + minor * sp)
            )
            normals.append(n)
    faces = []
    for i in range(segments):
        for j in range(sides):
            a = i * sides + j
            b = ((i + 1) % segments) * sides + j
            a2 = i * sides + (j + 1) % sides
            b2 = ((i + 1) % segments) * sides + (j + 1) % sides
            faces.append((a, b, b2))
            faces.append((a, b2, a2))
    return TriMesh(np.array(verts, float), np.array(normals, float), np.array(faces))


# ---------------------------------------------------------------------------
# Object templates
# ---------------------------------------------------------------------------


def _template_ball_pedestal() -> list[MeshGroup]:
    # Parts interpenetrate slightly; exactly coincident faces would make
    # ray hits ambiguous.
    return [
        MeshGroup("ball", uv_sphere(radius=0.55, center=(0, 0, 0.43))),
        MeshGroup("pedestal", box(size=(0.9, 0.9, 0.8), center=(0, 0, -0.5))),
    ]


def _template_ring_post() -> list[MeshGroup]:
    return [
        MeshGroup("ring", torus(major=0.7, minor=0.18)),
        MeshGroup("post", cylinder(radius=0.16, half_height=0.95)),
    ]


def _template_chair() -> list[MeshGroup]:
    legs = []
    for sx in (-0.35, 0.35):
        for sy in (-0.35, 0.35):
            legs.append(box(size=(0.12, 0.12, 0.8), center=(sx, sy, -0.5)))
    return [
        MeshGroup("seat", box(size=(0.9, 0.9, 0.12), center=(0, 0, -0.05))),
        MeshGroup("back", box(size=(0.9, 0.12, 0.9), center=(0, 0.39, 0.44))),
        MeshGroup("legs", merge(legs)),
    ]


def _template_table() -> list[MeshGroup]:
    legs = []
    for sx in (-0.6, 0.6):
        for sy in (-0.35, 0.35):
            legs.append(cylinder(radius=0.07, half_height=0.45, center=(sx, sy, -0.33)))
    return [
        MeshGroup("top", box(size=(1.6, 1.0, 0.1), center=(0, 0, 0.15))),
        MeshGroup("legs", merge(legs)),
    ]


def _template_stack() -> list[MeshGroup]:
    return [
        MeshGroup("base", box(size=(1.1, 1.1, 0.4), center=(0, 0, -0.55))),
        MeshGroup("middle", box(size=(0.8, 0.8, 0.4), center=(0.08, -0.05, -0.16))),
        MeshGroup("top", box(size=(0.5, 0.5, 0.4), center=(-0.06, 0.08, 0.23))),
    ]


def _template_rocket() -> list[MeshGroup]:
    fins = []
    for k in range(3):
        ang = 2.0 * math.pi * k / 3.0
        fins.append(
            box(size=(0.5, 0.08, 0.35), center=(0, 0, 0)).transformed(
                yaw=ang, offset=(0.32 * math.cos(ang), 0.32 * math.sin(ang), -0.72)
            )
        )
    return [
        MeshGroup("nose", cone(radius=0.3, height=0.7, center=(0, 0, 0.73))),
        MeshGroup("body", cylinder(radius=0.3, half_height=0.5, center=(0, 0, -0.1))),
        MeshGroup("fins", merge(fins)),
    ]


_TEMPLATES = {
    "ball-pedestal": _template_ball_pedestal,
    "ring-post": _template_ring_post,
    "chair": _template_chair,
    "table": _template_table,
    "stack": _template_stack,
    "rocket": _template_rocket,
}


def builtin_object_ids() -> list[str]:
    return sorted(_TEMPLATES)


@lru_cache(maxsize=None)
def _cached_template(template_id: str) -> tuple:
    try:
        builder = _TEMPLATES[template_id]
    except KeyError:
        raise MeshError(f"unknown builtin object {template_id!r}") from None
    return tuple(builder())


def builtin_template(template_id: str) -> list[MeshGroup]:
    """Cached; treat the returned meshes as read-only."""
    return list(_cached_template(template_id))


def load_object_groups(source: str) -> list[MeshGroup]:
    """Resolve an ObjectSpec source: 'builtin:<id>' or 'obj:<path>'."""
    if source.startswith("builtin:"):
        return builtin_template(source.split(":", 1)[1])
    if source.startswith("obj:"):
        return read_obj(source.split(":", 1)[1])
    raise MeshError(f"unknown object source {source!r}")


# ---------------------------------------------------------------------------
# OBJ import (triangulated subset: v / vn / f, with g groups)
# ---------------------------------------------------------------------------


def read_obj(path) -> list[MeshGroup]:
    positions: list[tuple] = []
    file_normals: list[tuple] = []
    groups: dict[str, list] = {}
    order: list[str] = []
    current = "default"

    def face_list() -> list:
        if current not in groups:
            groups[current] = []
            order.append(current)
        return groups[current]

    path = Path(path)
    for line_no, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise MeshError(f"{path.name}:{line_no}: malformed vertex")
            positions.append(tuple(float(x) for x in parts[1:4]))
        elif tag == "vn":
            file_normals.append(tuple(float(x) for x in parts[1:4]))
        elif tag in ("g", "o"):
            current = parts[1] if len(parts) > 1 else "default"
        elif tag == "f":
            if len(parts) < 4:
                raise MeshError(f"{path.name}:{line_no}: face needs >= 3 vertices")
            corners = []
            for token in parts[1:]:
                fields = token.split("/")
                vi = int(fields[0])
                ni = int(fields[2]) if len(fields) > 2 and fields[2] else 0
                vi = vi - 1 if vi > 0 else len(positions) + vi
                ni = ni - 1 if ni > 0 else (len(file_normals) + ni if ni else -1)
                corners.append((vi, ni))
            for k in range(1, len(corners) - 1):
                face_list().append((corners[0], corners[k], corners[k + 1]))
        # vt, s, mtllib, usemtl are accepted and ignored

    if not positions:
        raise MeshError(f"{path.name}: no vertices")

    result = []
    pos = np.asarray(positions, dtype=np.float64)
    for name in order:
        tris = groups[name]
        if not tris:
            continue
        vmap: dict[tuple[int, int], int] = {}
        verts = []
        norms = []
        faces = []
        missing_normals = False
        for tri in tris:
            idx = []
            for vi, ni in tri:
                if not 0 <= vi < len(pos):
                    raise MeshError(f"{path.name}: vertex index {vi + 1} out of range")
                key = (vi, ni)
                if key not in vmap:
                    vmap[key] = len(verts)
                    verts.append(pos[vi])
                    if ni >= 0:
                        norms.append(file_normals[ni])
                    else:
                        norms.append((0.0, 0.0, 0.0))
                        missing_normals = True
                idx.append(vmap[key])
            faces.append(idx)
        mesh = TriMesh(np.asarray(verts), np.asarray(norms, dtype=np.float64), np.asarray(faces))
        if missing_normals:
            mesh = _with_computed_normals(mesh)
        result.append(MeshGroup(name, mesh))
    return result


def _with_computed_normals(mesh: TriMesh) -> TriMesh:
    """Area-weighted vertex normals for meshes without vn records."""
    v = mesh.vertices
    f = mesh.faces
    face_n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    acc = np.zeros_like(v)
    for k in range(3):
        np.add.at(acc, f[:, k], face_n)
    length = np.linalg.norm(acc, axis=1, keepdims=True)
    length[length == 0] = 1.0
    return TriMesh(v, acc / length, f)
