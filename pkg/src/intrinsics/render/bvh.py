"""Axis-aligned bounding-box tree over scene triangles, leaf size <= 4.

Stored as flat arrays so the traversal kernels can walk it without objects.
Median split on the widest centroid axis with a stable sort keeps the build
deterministic; traversal must return the exact nearest hit the brute-force
all-triangle loop would (ties broken by smaller original triangle id).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF_SIZE = 4


@dataclass
class Bvh:
    bbox_min: np.ndarray  # (n_nodes, 3) float64
    bbox_max: np.ndarray  # (n_nodes, 3) float64
    left: np.ndarray      # (n_nodes,) int32; child index, -1 for leaves
    right: np.ndarray     # (n_nodes,) int32
    first: np.ndarray     # (n_nodes,) int32; leaf start into perm
    count: np.ndarray     # (n_nodes,) int32; 0 for internal nodes
    perm: np.ndarray      # (n_tris,) int32; original triangle ids, leaf-ordered
    v0: np.ndarray        # (n_tris, 3) float64, in ORIGINAL triangle order
    v1: np.ndarray
    v2: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.count)

    def arrays(self) -> tuple:
        """Argument bundle for the traversal kernels."""
        return (
            self.bbox_min,
            self.bbox_max,
            self.left,
            self.right,
            self.first,
            self.count,
            self.perm,
            self.v0,
            self.v1,
            self.v2,
        )

    def query(self, origin, direction) -> "Hit | None":
        """Nearest positive-t hit for a normalized ray, or None."""
        from .kernels import bvh_hit

        o = np.asarray(origin, dtype=np.float64)
        d = np.asarray(direction, dtype=np.float64)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("ray direction must be normalized")
        t, tid, bu, bv = bvh_hit(
            *self.arrays(), o[0], o[1], o[2], d[0], d[1], d[2], 0.0, np.inf
        )
        if tid < 0:
            return None
        return Hit(t=float(t), triangle=int(tid), u=float(bu), v=float(bv))


@dataclass(frozen=True)
class Hit:
    t: float
    triangle: int
    u: float  # barycentric weight of vertex 1
    v: float  # barycentric weight of vertex 2


def build_bvh(v0: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> Bvh:
    v0 = np.ascontiguousarray(v0, dtype=np.float64)
    v1 = np.ascontiguousarray(v1, dtype=np.float64)
    v2 = np.ascontiguousarray(v2, dtype=np.float64)
    m = len(v0)
    if m == 0:
        raise ValueError("cannot build a BVH over zero triangles")
    tri_min = np.minimum(np.minimum(v0, v1), v2)
    tri_max = np.maximum(np.maximum(v0, v1), v2)
    centroid = (v0 + v1 + v2) / 3.0

    bbox_min: list = []
    bbox_max: list = []
    left: list = []
    right: list = []
    first: list = []
    count: list = []
    perm: list = []

    def new_node(ids: np.ndarray) -> int:
        node = len(count)
        bbox_min.append(tri_min[ids].min(axis=0))
        bbox_max.append(tri_max[ids].max(axis=0))
        left.append(-1)
        right.append(-1)
        first.append(-1)
        count.append(0)
        return node

    # Explicit stack; recursion depth could exceed Python's limit on large
    # degenerate inputs.
    root_ids = np.arange(m, dtype=np.int32)
    stack = [(new_node(root_ids), root_ids)]
    while stack:
        node, ids = stack.pop()
        if len(ids) <= LEAF_SIZE:
            first[node] = len(perm)
            count[node] = len(ids)
            perm.extend(int(i) for i in ids)
            continue
        spread = centroid[ids].max(axis=0) - centroid[ids].min(axis=0)
        axis = int(np.argmax(spread))
        order = ids[np.argsort(centroid[ids, axis], kind="stable")]
        half = len(order) // 2
        left_ids, right_ids = order[:half], order[half:]
        left[node] = new_node(left_ids)
        right[node] = new_node(right_ids)
        stack.append((right[node], right_ids))
        stack.append((left[node], left_ids))

    return Bvh(
        bbox_min=np.asarray(bbox_min, dtype=np.float64),
        bbox_max=np.asarray(bbox_max, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        first=np.asarray(first, dtype=np.int32),
        count=np.asarray(count, dtype=np.int32),
        perm=np.asarray(perm, dtype=np.int32),
        v0=v0,
        v1=v1,
        v2=v2,
    )


def brute_force_query(v0, v1, v2, origin, direction) -> Hit | None:
    """Oracle: nearest hit by scanning every triangle in id order."""
    from .kernels import brute_force_hit

    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    t, tid, bu, bv = brute_force_hit(
        np.ascontiguousarray(v0, dtype=np.float64),
        np.ascontiguousarray(v1, dtype=np.float64),
        np.ascontiguousarray(v2, dtype=np.float64),
        o[0], o[1], o[2], d[0], d[1], d[2], 0.0, np.inf,
    )
    if tid < 0:
        return None
    return Hit(t=float(t), triangle=int(tid), u=float(bu), v=float(bv))
