"""Seeded procedural generation of room scenes.

A scene is a closed convex prism room (4 to 6 walls), one multi-group object
centered at the origin, four white point lights at fixed template slots (two
low-intensity, two high-intensity), and two cameras on a semisphere separated
by exactly 180 degrees of azimuth.

Every random draw comes from a named per-scene stream, so regenerating with
the same (master_seed, scene_index) reproduces the serialized spec
bit-identically, and adding draws to one stream never shifts another.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .materials import MaterialSpec, material_catalog
from .meshes import bounding_sphere, builtin_object_ids, load_object_groups
from .rng import stream


class SceneGenError(ValueError):
    """Invalid generation config or impossible scene."""


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenConfig:
    """Knobs for procedural scene generation.

    Room size is expressed relative to the object: walls sit at a distance
    (apothem) drawn from wall_distance_range times the object radius, so
    every object fits its room by construction.
    """

    object_radius_range: tuple[float, float] = (0.8, 1.2)
    wall_distance_range: tuple[float, float] = (2.5, 4.0)
    height_range: tuple[float, float] = (2.2, 3.2)
    # Light slots sit at (+-0.5a, +-0.5a, 0.7h); slots 0,1 draw from the low
    # band and slots 2,3 from the high band.
    light_low_range: tuple[float, float] = (0.2, 0.6)
    light_high_range: tuple[float, float] = (0.6, 1.5)
    ambient: float = 0.05
    object_albedo_range: tuple[float, float] = (0.05, 0.95)
    camera_radius_factor: float = 0.8
    camera_elevation_deg: tuple[float, float] = (10.0, 60.0)
    fov_y_deg: float = 60.0
    image_size: int = 256
    spp: int = 4
    homogeneous_count: int = 50
    texture_count: int = 200
    catalog_seed: int = 101
    wall_albedo_range: tuple[float, float] = (0.05, 0.95)

    def to_dict(self) -> dict:
        return {
            "object_radius_range": list(self.object_radius_range),
            "wall_distance_range": list(self.wall_distance_range),
            "height_range": list(self.height_range),
            "light_low_range": list(self.light_low_range),
            "light_high_range": list(self.light_high_range),
            "ambient": self.ambient,
            "object_albedo_range": list(self.object_albedo_range),
            "camera_radius_factor": self.camera_radius_factor,
            "camera_elevation_deg": list(self.camera_elevation_deg),
            "fov_y_deg": self.fov_y_deg,
            "image_size": self.image_size,
            "spp": self.spp,
            "homogeneous_count": self.homogeneous_count,
            "texture_count": self.texture_count,
            "catalog_seed": self.catalog_seed,
            "wall_albedo_range": list(self.wall_albedo_range),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        kwargs = dict(data)
        for key in (
            "object_radius_range",
            "wall_distance_range",
            "height_range",
            "light_low_range",
            "light_high_range",
            "object_albedo_range",
            "camera_elevation_deg",
            "wall_albedo_range",
        ):
            kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


@lru_cache(maxsize=8)
def _catalog(homogeneous: int, textured: int, lo: float, hi: float, seed: int):
    return material_catalog(
        homogeneous_count=homogeneous,
        texture_count=textured,
        albedo_range=(lo, hi),
        catalog_seed=seed,
    )


def config_catalog(config: GenConfig) -> list[MaterialSpec]:
    lo, hi = config.wall_albedo_range
    return _catalog(
        config.homogeneous_count, config.texture_count, lo, hi, config.catalog_seed
    )


# ---------------------------------------------------------------------------
# Spec dataclasses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoomSpec:
    wall_count: int
    apothem: float
    half_height: float
    rotation: float
    wall_material: MaterialSpec
    floor_material: MaterialSpec
    ceiling_material: MaterialSpec

    def __post_init__(self) -> None:
        if self.wall_count not in (4, 5, 6):
            raise SceneGenError(f"wall_count must be 4..6, got {self.wall_count}")
        if self.apothem <= 0 or self.half_height <= 0:
            raise SceneGenError("room dimensions must be positive")

    @property
    def inscribed_radius(self) -> float:
        return min(self.apothem, self.half_height)

    def base_vertices(self) -> np.ndarray:
        """(n, 2) footprint corners, counter-clockwise seen from above."""
        n = self.wall_count
        circum = self.apothem / math.cos(math.pi / n)
        angles = self.rotation + 2.0 * math.pi * np.arange(n) / n + math.pi / n
        return np.stack([circum * np.cos(angles), circum * np.sin(angles)], axis=1)

    def wall_polygons(self) -> list[np.ndarray]:
        """Each wall as a (4, 3) quad wound so its right-hand normal faces inward."""
        base = self.base_vertices()
        h = self.half_height
        quads = []
        for k in range(self.wall_count):
            a = base[k]
            b = base[(k + 1) % self.wall_count]
            quads.append(
                np.array(
                    [
                        [b[0], b[1], -h],
                        [a[0], a[1], -h],
                        [a[0], a[1], h],
                        [b[0], b[1], h],
                    ]
                )
            )
        return quads

    def floor_polygon(self) -> np.ndarray:
        """(n, 3) floor corners; right-hand normal points up into the room."""
        base = self.base_vertices()
        return np.column_stack([base, np.full(len(base), -self.half_height)])

    def ceiling_polygon(self) -> np.ndarray:
        """(n, 3) ceiling corners; right-hand normal points down into the room."""
        base = self.base_vertices()[::-1]
        return np.column_stack([base, np.full(len(base), self.half_height)])

    def bounding_planes(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(inward unit normal, point on plane) for every face of the prism."""
        planes = []
        base = self.base_vertices()
        for k in range(self.wall_count):
            a, b = base[k], base[(k + 1) % self.wall_count]
            mid = (a + b) / 2.0
            normal = np.array([-mid[0], -mid[1], 0.0])
            normal /= np.linalg.norm(normal)
            planes.append((normal, np.array([mid[0], mid[1], 0.0])))
        planes.append((np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -self.half_height])))
        planes.append((np.array([0.0, 0.0, -1.0]), np.array([0.0, 0.0, self.half_height])))
        return planes

    def contains_sphere(self, center, radius: float) -> bool:
        c = np.asarray(center, dtype=np.float64)
        return all(
            float(np.dot(n, c - p)) > radius for n, p in self.bounding_planes()
        )

    def to_dict(self) -> dict:
        return {
            "wall_count": self.wall_count,
            "apothem": self.apothem,
            "half_height": self.half_height,
            "rotation": self.rotation,
            "wall_material": self.wall_material.to_dict(),
            "floor_material": self.floor_material.to_dict(),
            "ceiling_material": self.ceiling_material.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoomSpec":
        return cls(
            wall_count=data["wall_count"],
            apothem=data["apothem"],
            half_height=data["half_height"],
            rotation=data["rotation"],
            wall_material=MaterialSpec.from_dict(data["wall_material"]),
            floor_material=MaterialSpec.from_dict(data["floor_material"]),
            ceiling_material=MaterialSpec.from_dict(data["ceiling_material"]),
        )


@dataclass(frozen=True)
class ObjectSpec:
    source: str  # "builtin:<id>" or "obj:<path>"
    target_radius: float
    yaw: float
    group_materials: tuple[tuple[str, MaterialSpec], ...]

    def __post_init__(self) -> None:
        if self.target_radius <= 0:
            raise SceneGenError("target_radius must be positive")
        if not self.group_materials:
            raise SceneGenError("object needs at least one mesh group material")

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "target_radius": self.target_radius,
            "yaw": self.yaw,
            "group_materials": [
                [name, mat.to_dict()] for name, mat in self.group_materials
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ObjectSpec":
        return cls(
            source=data["source"],
            target_radius=data["target_radius"],
            yaw=data["yaw"],
            group_materials=tuple(
                (name, MaterialSpec.from_dict(mat))
                for name, mat in data["group_materials"]
            ),
        )


@dataclass(frozen=True)
class LightSpec:
    position: tuple[float, float, float]
    intensity: float
    color: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if self.intensity <= 0:
            raise SceneGenError("light intensity must be positive")
        if len(set(self.color)) != 1:
            raise SceneGenError("light color must be achromatic")

    def to_dict(self) -> dict:
        return {
            "position": list(self.position),
            "intensity": self.intensity,
            "color": list(self.color),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LightSpec":
        return cls(
            position=tuple(data["position"]),
            intensity=data["intensity"],
            color=tuple(data["color"]),
        )


@dataclass(frozen=True)
class CameraSpec:
    radius: float
    elevation_deg: float
    azimuth_deg: float
    fov_y_deg: float
    image_size: int

    def position(self) -> np.ndarray:
        el = math.radians(self.elevation_deg)
        az = math.radians(self.azimuth_deg)
        return self.radius * np.array(
            [math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)]
        )

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "elevation_deg": self.elevation_deg,
            "azimuth_deg": self.azimuth_deg,
            "fov_y_deg": self.fov_y_deg,
            "image_size": self.image_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CameraSpec":
        return cls(**data)


@dataclass(frozen=True)
class SceneSpec:
    scene_id: str
    seed: int  # 64-bit value feeding the render jitter hash
    ambient: float
    spp: int
    room: RoomSpec
    obj: ObjectSpec
    lights: tuple[LightSpec, ...]
    cameras: tuple[CameraSpec, ...]

    def __post_init__(self) -> None:
        if len(self.lights) != 4:
            raise SceneGenError("a scene has exactly 4 lights")
        if len(self.cameras) != 2:
            raise SceneGenError("a scene has exactly 2 cameras")
        if not 0 <= self.seed < (1 << 64):
            raise SceneGenError("seed must fit in 64 bits")
        delta = (self.cameras[1].azimuth_deg - self.cameras[0].azimuth_deg) % 360.0
        if abs(delta - 180.0) > 1e-9:
            raise SceneGenError("cameras must be 180 degrees apart in azimuth")

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "seed": self.seed,
            "ambient": self.ambient,
            "spp": self.spp,
            "room": self.room.to_dict(),
            "object": self.obj.to_dict(),
            "lights": [l.to_dict() for l in self.lights],
            "cameras": [c.to_dict() for c in self.cameras],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        return cls(
            scene_id=data["scene_id"],
            seed=data["seed"],
            ambient=data["ambient"],
            spp=data["spp"],
            room=RoomSpec.from_dict(data["room"]),
            obj=ObjectSpec.from_dict(data["object"]),
            lights=tuple(LightSpec.from_dict(l) for l in data["lights"]),
            cameras=tuple(CameraSpec.from_dict(c) for c in data["cameras"]),
        )


def canonical_json(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def spec_hash(spec: SceneSpec) -> str:
    return hashlib.sha256(canonical_json(spec.to_dict()).encode("ascii")).hexdigest()


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

_LIGHT_SLOTS = ((0.5, 0.5), (-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5))


def light_positions(apothem: float, half_height: float) -> list[tuple[float, float, float]]:
    """The four fixed light slots for a room of the given size."""
    return [
        (sx * apothem, sy * apothem, 0.7 * half_height) for sx, sy in _LIGHT_SLOTS
    ]


def generate_scene(master_seed: int, scene_index: int, config: GenConfig | None = None) -> SceneSpec:
    """Build the full SceneSpec for one (master_seed, scene_index) pair."""
    config = config or GenConfig()
    try:
        catalog = config_catalog(config)
    except ValueError as exc:
        raise SceneGenError(f"material catalog unavailable: {exc}") from exc
    if not catalog:
        raise SceneGenError("material catalog is empty")

    room_rng = stream(master_seed, scene_index, "room")
    wall_count = int(room_rng.integers(4, 7))
    wall_mult = float(room_rng.uniform(*config.wall_distance_range))
    height_mult = float(room_rng.uniform(*config.height_range))
    rotation = float(room_rng.uniform(0.0, 2.0 * math.pi))

    obj_rng = stream(master_seed, scene_index, "object")
    template_id = builtin_object_ids()[int(obj_rng.integers(0, len(builtin_object_ids())))]
    source = f"builtin:{template_id}"
    target_radius = float(obj_rng.uniform(*config.object_radius_range))
    yaw = float(obj_rng.uniform(0.0, 2.0 * math.pi))

    apothem = wall_mult * target_radius
    half_height = height_mult * target_radius

    mat_rng = stream(master_seed, scene_index, "materials")
    wall_material = catalog[int(mat_rng.integers(0, len(catalog)))]
    floor_material = catalog[int(mat_rng.integers(0, len(catalog)))]
    ceiling_material = catalog[int(mat_rng.integers(0, len(catalog)))]
    room = RoomSpec(
        wall_count=wall_count,
        apothem=apothem,
        half_height=half_height,
        rotation=rotation,
        wall_material=wall_material,
        floor_material=floor_material,
        ceiling_material=ceiling_material,
    )
    if target_radius >= room.inscribed_radius:
        raise SceneGenError(
            f"object radius {target_radius:.3f} does not fit the room "
            f"(inscribed radius {room.inscribed_radius:.3f})"
        )
    lo, hi = config.object_albedo_range
    groups = load_object_groups(source)
    group_materials = []
    for g in groups:
        rgb = tuple(float(x) for x in obj_rng.uniform(lo, hi, size=3))
        roughness = float(obj_rng.uniform(0.0, 1.0))
        group_materials.append(
            (g.name, MaterialSpec(kind="homogeneous", colors=(rgb,), roughness=roughness))
        )
    obj = ObjectSpec(
        source=source,
        target_radius=target_radius,
        yaw=yaw,
        group_materials=tuple(group_materials),
    )

    light_rng = stream(master_seed, scene_index, "lights")
    intensities = [
        float(light_rng.uniform(*config.light_low_range)),
        float(light_rng.uniform(*config.light_low_range)),
        float(light_rng.uniform(*config.light_high_range)),
        float(light_rng.uniform(*config.light_high_range)),
    ]
    lights = tuple(
        LightSpec(position=pos, intensity=inten)
        for pos, inten in zip(light_positions(apothem, half_height), intensities)
    )

    cam_rng = stream(master_seed, scene_index, "camera")
    elevation = float(cam_rng.uniform(*config.camera_elevation_deg))
    azimuth = float(cam_rng.uniform(0.0, 360.0))
    cam_radius = config.camera_radius_factor * room.inscribed_radius
    cameras = tuple(
        CameraSpec(
            radius=cam_radius,
            elevation_deg=elevation,
            azimuth_deg=(azimuth + 180.0 * k) % 360.0,
            fov_y_deg=config.fov_y_deg,
            image_size=config.image_size,
        )
        for k in range(2)
    )

    seed_rng = stream(master_seed, scene_index, "seed")
    scene_seed = int(seed_rng.integers(0, 1 << 64, dtype=np.uint64))

    spec = SceneSpec(
        scene_id=f"s{scene_index:05d}",
        seed=scene_seed,
        ambient=config.ambient,
        spp=config.spp,
        room=room,
        obj=obj,
        lights=lights,
        cameras=cameras,
    )
    _check_object_fits(spec)
    return spec


def _check_object_fits(spec: SceneSpec) -> None:
    if not spec.room.contains_sphere((0.0, 0.0, 0.0), spec.obj.target_radius):
        raise SceneGenError("object bounding sphere is not strictly inside the room")


def object_transform(spec: ObjectSpec) -> tuple[np.ndarray, float]:
    """(bounding-sphere center of the raw template, scale factor to target radius)."""
    groups = load_object_groups(spec.source)
    center, radius = bounding_sphere(groups)
    if radius <= 0:
        raise SceneGenError(f"object source {spec.source!r} has zero extent")
    return center, spec.target_radius / radius
