"""Diffuse materials: homogeneous colors and procedural flat textures.

Textures are pure functions of surface UV (in meters) with no baked-in
shading, so reflectance ground truth stays piecewise constant. The wall
catalog holds exactly `homogeneous_count` plain colors followed by
`texture_count` patterns; entry order is a pure function of the catalog
seed, never of the dataset seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from intrinsics.rng import splitmix64, stream

KINDS = ("homogeneous", "checker", "stripes", "noise")

# Integer codes used by the render kernels.
KIND_CODE = {name: i for i, name in enumerate(KINDS)}

# Lattice mixing constants for the noise pattern (distinct odd 64-bit primes).
_NOISE_PX = 0x9E3779B97F4A7C15
_NOISE_PY = 0xC2B2AE3D27D4EB4F


@dataclass(frozen=True)
class MaterialSpec:
    """A diffuse material: either one albedo or a flat UV pattern.

    Roughness is recorded for forward compatibility but the shading model
    is pure Lambert, so it never influences rendered values.
    """

    kind: str
    colors: tuple  # 1..4 RGB tuples, each component in (0, 1)
    freq: tuple = (1.0, 1.0)
    phase: tuple = (0.0, 0.0)
    angle: float = 0.0
    salt: int = 0
    roughness: float = 0.5

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown material kind {self.kind!r}")
        if not 1 <= len(self.colors) <= 4:
            raise ValueError("materials carry between 1 and 4 colors")
        for rgb in self.colors:
            if len(rgb) != 3 or not all(0.0 < c < 1.0 for c in rgb):
                raise ValueError(f"albedo {rgb} outside the open interval (0, 1)")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "colors": [list(rgb) for rgb in self.colors],
            "freq": list(self.freq),
            "phase": list(self.phase),
            "angle": self.angle,
            "salt": self.salt,
            "roughness": self.roughness,
        }

    @staticmethod
    def from_dict(d: dict) -> "MaterialSpec":
        return MaterialSpec(
            kind=d["kind"],
            colors=tuple(tuple(rgb) for rgb in d["colors"]),
            freq=tuple(d["freq"]),
            phase=tuple(d["phase"]),
            angle=d["angle"],
            salt=d["salt"],
            roughness=d["roughness"],
        )


def evaluate_material(mat: MaterialSpec, u, v) -> np.ndarray:
    """Evaluate albedo at UV coordinates; u and v broadcast to any shape.

    Returns an array of shape broadcast(u, v) + (3,).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u, v = np.broadcast_arrays(u, v)
    palette = np.asarray(mat.colors, dtype=np.float64)
    if mat.kind == "homogeneous":
        return np.broadcast_to(palette[0], u.shape + (3,)).copy()
    if mat.kind == "checker":
        iu = np.floor(u * mat.freq[0] + mat.phase[0]).astype(np.int64)
        iv = np.floor(v * mat.freq[1] + mat.phase[1]).astype(np.int64)
        idx = ((iu + iv) & 1).astype(np.intp) % len(mat.colors)
        return palette[idx]
    if mat.kind == "stripes":
        s = u * np.cos(mat.angle) + v * np.sin(mat.angle)
        band = np.floor(s * mat.freq[0] + mat.phase[0]).astype(np.int64)
        idx = np.mod(band, len(mat.colors)).astype(np.intp)
        return palette[idx]
    # noise: random mosaic over lattice cells, keyed by the material salt
    iu = np.floor(u * mat.freq[0] + mat.phase[0]).astype(np.int64)
    iv = np.floor(v * mat.freq[1] + mat.phase[1]).astype(np.int64)
    out_idx = np.empty(u.shape, dtype=np.intp)
    flat_u = iu.ravel()
    flat_v = iv.ravel()
    flat_o = out_idx.ravel()
    n = len(mat.colors)
    for k in range(flat_u.size):
        flat_o[k] = noise_cell_index(int(flat_u[k]), int(flat_v[k]), mat.salt, n)
    return palette[out_idx]


def noise_cell_index(iu: int, iv: int, salt: int, n_colors: int) -> int:
    """Palette index for one lattice cell of the noise pattern."""
    mask = 0xFFFFFFFFFFFFFFFF
    a = (iu * _NOISE_PX) & mask
    b = (iv * _NOISE_PY) & mask
    h = splitmix64((a ^ b ^ salt) & mask)
    return int(h % n_colors)


def _draw_rgb(rng: np.random.Generator, lo: float, hi: float) -> tuple:
    return tuple(float(x) for x in rng.uniform(lo, hi, size=3))


def random_homogeneous(rng: np.random.Generator, albedo_range=(0.05, 0.95)) -> MaterialSpec:
    lo, hi = albedo_range
    return MaterialSpec(
        kind="homogeneous",
        colors=(_draw_rgb(rng, lo, hi),),
        roughness=float(rng.uniform(0.0, 1.0)),
    )


def _random_texture(rng: np.random.Generator, kind: str, albedo_range) -> MaterialSpec:
    lo, hi = albedo_range
    n_colors = 2 if kind != "noise" else int(rng.integers(2, 5))
    colors = tuple(_draw_rgb(rng, lo, hi) for _ in range(n_colors))
    return MaterialSpec(
        kind=kind,
        colors=colors,
        freq=(float(rng.uniform(0.25, 1.5)), float(rng.uniform(0.25, 1.5))),
        phase=(float(rng.uniform(0.0, 1.0)), float(rng.uniform(0.0, 1.0))),
        angle=float(rng.uniform(0.0, np.pi)) if kind == "stripes" else 0.0,
        salt=int(rng.integers(0, 2**63)),
        roughness=float(rng.uniform(0.0, 1.0)),
    )


def material_catalog(
    homogeneous_count: int = 50,
    texture_count: int = 200,
    albedo_range=(0.05, 0.95),
    catalog_seed: int = 101,
) -> list[MaterialSpec]:
    """Build the wall material catalog: plain colors first, then textures.

    Texture kinds rotate through checker / stripes / noise so each is well
    represented. Indices are stable across runs for a given catalog seed.
    """
    if homogeneous_count < 1 or texture_count < 0:
        raise ValueError("catalog needs at least one homogeneous material")
    rng = stream(catalog_seed, 0, "material-catalog")
    catalog = [random_homogeneous(rng, albedo_range) for _ in range(homogeneous_count)]
    texture_kinds = ("checker", "stripes", "noise")
    for i in range(texture_count):
        catalog.append(_random_texture(rng, texture_kinds[i % 3], albedo_range))
    return catalog
