"""JIT-compiled ray tracing kernels.

Two functions here are exact twins of pure-Python counterparts and must stay
bit-identical to them: _splitmix64 (rng.splitmix64) and _noise_cell
(materials.noise_cell_index). material_rgb mirrors materials.evaluate_material
using precomputed stripe directions so both sides do the identical float ops.
Tests compare the pairs on random inputs.

Everything is single-threaded; dataset-level parallelism runs across scenes
in separate processes, which keeps per-image output bit-identical regardless
of scheduling.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_JIT = dict(cache=True, error_model="numpy")

# splitmix64 constants
_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_U1 = np.uint64(1)
_U2 = np.uint64(2)
_INV_2_53 = 1.0 / float(1 << 53)

# noise lattice primes (same values as materials._NOISE_PX/_NOISE_PY)
_NPX = np.uint64(0x9E3779B97F4A7C15)
_NPY = np.uint64(0xC2B2AE3D27D4EB4F)

_DET_EPS = 1e-14
_SHADOW_BIAS = 1e-4    # offset along the geometric normal, scene units
_SHADOW_CLIP = 1e-4    # shadow ray stops short of the light by this fraction


@njit(**_JIT)
def _splitmix64(x):
    z = x + _SM_GAMMA
    z = (z ^ (z >> _S30)) * _SM_M1
    z = (z ^ (z >> _S27)) * _SM_M2
    return z ^ (z >> _S31)


@njit(**_JIT)
def _hash_to_unit(x):
    return float(_splitmix64(x) >> _S11) * _INV_2_53


@njit(**_JIT)
def _noise_cell(iu, iv, salt, n_colors):
    a = np.uint64(iu) * _NPX
    b = np.uint64(iv) * _NPY
    h = _splitmix64(a ^ b ^ salt)
    return np.int64(h % np.uint64(n_colors))


@njit(**_JIT)
def _ray_triangle(ox, oy, oz, dx, dy, dz, ax, ay, az, bx, by, bz, cx, cy, cz):
    """Moller-Trumbore. Returns (t, u, v); t < 0 means miss."""
    e1x = bx - ax
    e1y = by - ay
    e1z = bz - az
    e2x = cx - ax
    e2y = cy - ay
    e2z = cz - az
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if det > -_DET_EPS and det < _DET_EPS:
        return -1.0, 0.0, 0.0
    inv = 1.0 / det
    tx = ox - ax
    ty = oy - ay
    tz = oz - az
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return -1.0, 0.0, 0.0
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return -1.0, 0.0, 0.0
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    if t <= 0.0:
        return -1.0, 0.0, 0.0
    return t, u, v


@njit(**_JIT)
def brute_force_hit(v0, v1, v2, ox, oy, oz, dx, dy, dz, tmin, tmax):
    """Nearest hit over every triangle; ties go to the smaller id."""
    best_t = tmax
    best_id = -1
    best_u = 0.0
    best_v = 0.0
    for i in range(len(v0)):
        t, u, v = _ray_triangle(
            ox, oy, oz, dx, dy, dz,
            v0[i, 0], v0[i, 1], v0[i, 2],
            v1[i, 0], v1[i, 1], v1[i, 2],
            v2[i, 0], v2[i, 1], v2[i, 2],
        )
        if t > tmin and (
            best_id < 0 or t < best_t or (t == best_t and i < best_id)
        ):
            best_t = t
            best_id = i
            best_u = u
            best_v = v
    return best_t, best_id, best_u, best_v


@njit(**_JIT)
def _slab(bmin, bmax, node, ox, oy, oz, dx, dy, dz, t0, t1):
    """Ray/AABB overlap on [t0, t1]; returns (hit, t_entry)."""
    lo = t0
    hi = t1
    for axis in range(3):
        if axis == 0:
            o = ox
            d = dx
        elif axis == 1:
            o = oy
            d = dy
        else:
            o = oz
            d = dz
        mn = bmin[node, axis]
        mx = bmax[node, axis]
        if d != 0.0:
            inv = 1.0 / d
            ta = (mn - o) * inv
            tb = (mx - o) * inv
            if ta > tb:
                ta, tb = tb, ta
            if ta > lo:
                lo = ta
            if tb < hi:
                hi = tb
            if lo > hi:
                return False, 0.0
        elif o < mn or o > mx:
            return False, 0.0
    return True, lo


@njit(**_JIT)
def bvh_hit(
    bbox_min, bbox_max, left, right, first, count, perm, v0, v1, v2,
    ox, oy, oz, dx, dy, dz, tmin, tmax,
):
    """Nearest hit via BVH traversal; result identical to brute_force_hit.

    Pruning only discards nodes strictly beyond best_t, and leaf hits break
    ties toward the smaller original id, so out-of-order traversal cannot
    change the answer.
    """
    best_t = tmax
    best_id = -1
    best_u = 0.0
    best_v = 0.0
    stack_node = np.empty(128, dtype=np.int32)
    stack_t = np.empty(128, dtype=np.float64)
    ok, t_entry = _slab(bbox_min, bbox_max, 0, ox, oy, oz, dx, dy, dz, tmin, best_t)
    if not ok:
        return best_t, -1, 0.0, 0.0
    stack_node[0] = 0
    stack_t[0] = t_entry
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        if stack_t[sp] > best_t:
            continue
        c = count[node]
        if c > 0:
            f = first[node]
            for k in range(f, f + c):
                i = perm[k]
                t, u, v = _ray_triangle(
                    ox, oy, oz, dx, dy, dz,
                    v0[i, 0], v0[i, 1], v0[i, 2],
                    v1[i, 0], v1[i, 1], v1[i, 2],
                    v2[i, 0], v2[i, 1], v2[i, 2],
                )
                if t > tmin and (
                    best_id < 0 or t < best_t or (t == best_t and i < best_id)
                ):
                    best_t = t
                    best_id = i
                    best_u = u
                    best_v = v
            continue
        l = left[node]
        r = right[node]
        ok_l, t_l = _slab(bbox_min, bbox_max, l, ox, oy, oz, dx, dy, dz, tmin, best_t)
        ok_r, t_r = _slab(bbox_min, bbox_max, r, ox, oy, oz, dx, dy, dz, tmin, best_t)
        if ok_l and ok_r:
            # push the farther child first so the nearer one is visited next
            if t_l <= t_r:
                stack_node[sp] = r
                stack_t[sp] = t_r
                sp += 1
                stack_node[sp] = l
                stack_t[sp] = t_l
                sp += 1
            else:
                stack_node[sp] = l
                stack_t[sp] = t_l
                sp += 1
                stack_node[sp] = r
                stack_t[sp] = t_r
                sp += 1
        elif ok_l:
            stack_node[sp] = l
            stack_t[sp] = t_l
            sp += 1
        elif ok_r:
            stack_node[sp] = r
            stack_t[sp] = t_r
            sp += 1
    return best_t, best_id, best_u, best_v


@njit(**_JIT)
def _occluded(
    bbox_min, bbox_max, left, right, first, count, perm, v0, v1, v2,
    ox, oy, oz, dx, dy, dz, tmin, tmax,
):
    """Any-hit query for shadow rays; early exit on the first blocker."""
    stack_node = np.empty(128, dtype=np.int32)
    ok, _ = _slab(bbox_min, bbox_max, 0, ox, oy, oz, dx, dy, dz, tmin, tmax)
    if not ok:
        return False
    stack_node[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        c = count[node]
        if c > 0:
            f = first[node]
            for k in range(f, f + c):
                i = perm[k]
                t, u, v = _ray_triangle(
                    ox, oy, oz, dx, dy, dz,
                    v0[i, 0], v0[i, 1], v0[i, 2],
                    v1[i, 0], v1[i, 1], v1[i, 2],
                    v2[i, 0], v2[i, 1], v2[i, 2],
                )
                if tmin < t < tmax:
                    return True
            continue
        l = left[node]
        r = right[node]
        ok_l, _ = _slab(bbox_min, bbox_max, l, ox, oy, oz, dx, dy, dz, tmin, tmax)
        ok_r, _ = _slab(bbox_min, bbox_max, r, ox, oy, oz, dx, dy, dz, tmin, tmax)
        if ok_l:
            stack_node[sp] = l
            sp += 1
        if ok_r:
            stack_node[sp] = r
            sp += 1
    return False


@njit(**_JIT)
def material_rgb(
    mat_kind, mat_ncol, mat_colors, mat_freq, mat_phase, mat_dir, mat_salt, m, u, v
):
    """Twin of materials.evaluate_material for a single (u, v) sample."""
    kind = mat_kind[m]
    if kind == 0:  # homogeneous
        idx = np.int64(0)
    elif kind == 1:  # checker
        iu = np.int64(np.floor(u * mat_freq[m, 0] + mat_phase[m, 0]))
        iv = np.int64(np.floor(v * mat_freq[m, 1] + mat_phase[m, 1]))
        idx = ((iu + iv) & np.int64(1)) % np.int64(mat_ncol[m])
    elif kind == 2:  # stripes
        s = u * mat_dir[m, 0] + v * mat_dir[m, 1]
        band = np.int64(np.floor(s * mat_freq[m, 0] + mat_phase[m, 0]))
        idx = band % np.int64(mat_ncol[m])
    else:  # noise
        iu = np.int64(np.floor(u * mat_freq[m, 0] + mat_phase[m, 0]))
        iv = np.int64(np.floor(v * mat_freq[m, 1] + mat_phase[m, 1]))
        idx = _noise_cell(iu, iv, mat_salt[m], mat_ncol[m])
    return mat_colors[m, idx, 0], mat_colors[m, idx, 1], mat_colors[m, idx, 2]


@njit(**_JIT)
def render_kernel(
    # triangles, original order
    v0, v1, v2, n0, n1, n2, uva, uvb, uvc, tri_mat, tri_obj,
    # bvh arrays
    bbox_min, bbox_max, left, right, first, count, perm,
    # material table
    mat_kind, mat_ncol, mat_colors, mat_freq, mat_phase, mat_dir, mat_salt,
    # lights
    light_pos, light_intensity,
    # camera
    cam_px, cam_py, cam_pz, rx, ry, rz, ux, uy, uz, fx, fy, fz,
    tan_half_y, aspect,
    # parameters
    width, height, spp, ambient, jitter_base, use_jitter, with_shadows,
    # outputs (height, width, channels) float32
    out_ref, out_sha, out_img, out_msk,
):
    """Render one view; returns the number of escaped primary rays."""
    escaped = 0
    n_lights = len(light_intensity)
    grid = 1
    while grid * grid < spp:
        grid += 1
    stratified = grid * grid == spp
    for py in range(height):
        for px in range(width):
            acc_r = 0.0
            acc_g = 0.0
            acc_b = 0.0
            acc_s = 0.0
            acc_m = 0.0
            pixel_index = np.uint64(py * width + px)
            for s in range(spp):
                if use_jitter:
                    counter = pixel_index * np.uint64(spp) + np.uint64(s)
                    ju = _hash_to_unit(jitter_base + counter * _U2)
                    jv = _hash_to_unit(jitter_base + counter * _U2 + _U1)
                    if stratified:
                        sx = ((s % grid) + ju) / grid
                        sy = ((s // grid) + jv) / grid
                    else:
                        sx = ju
                        sy = jv
                else:
                    sx = 0.5
                    sy = 0.5
                x_ndc = ((px + sx) / width) * 2.0 - 1.0
                y_ndc = 1.0 - ((py + sy) / height) * 2.0
                kx = x_ndc * tan_half_y * aspect
                ky = y_ndc * tan_half_y
                dx = fx + kx * rx + ky * ux
                dy = fy + kx * ry + ky * uy
                dz = fz + kx * rz + ky * uz
                inv_len = 1.0 / np.sqrt(dx * dx + dy * dy + dz * dz)
                dx *= inv_len
                dy *= inv_len
                dz *= inv_len
                t, tid, bu, bv = bvh_hit(
                    bbox_min, bbox_max, left, right, first, count, perm,
                    v0, v1, v2,
                    cam_px, cam_py, cam_pz, dx, dy, dz, 1e-9, np.inf,
                )
                if tid < 0:
                    escaped += 1
                    continue
                w0 = 1.0 - bu - bv
                hx = cam_px + t * dx
                hy = cam_py + t * dy
                hz = cam_pz + t * dz
                # geometric normal, flipped toward the ray origin
                e1x = v1[tid, 0] - v0[tid, 0]
                e1y = v1[tid, 1] - v0[tid, 1]
                e1z = v1[tid, 2] - v0[tid, 2]
                e2x = v2[tid, 0] - v0[tid, 0]
                e2y = v2[tid, 1] - v0[tid, 1]
                e2z = v2[tid, 2] - v0[tid, 2]
                gx = e1y * e2z - e1z * e2y
                gy = e1z * e2x - e1x * e2z
                gz = e1x * e2y - e1y * e2x
                g_inv = 1.0 / np.sqrt(gx * gx + gy * gy + gz * gz)
                gx *= g_inv
                gy *= g_inv
                gz *= g_inv
                if gx * dx + gy * dy + gz * dz > 0.0:
                    gx = -gx
                    gy = -gy
                    gz = -gz
                # interpolated shading normal, aligned with the geometric one
                nx = w0 * n0[tid, 0] + bu * n1[tid, 0] + bv * n2[tid, 0]
                ny = w0 * n0[tid, 1] + bu * n1[tid, 1] + bv * n2[tid, 1]
                nz = w0 * n0[tid, 2] + bu * n1[tid, 2] + bv * n2[tid, 2]
                n_len = np.sqrt(nx * nx + ny * ny + nz * nz)
                if n_len < 1e-12:
                    nx = gx
                    ny = gy
                    nz = gz
                else:
                    nx /= n_len
                    ny /= n_len
                    nz /= n_len
                    if nx * gx + ny * gy + nz * gz < 0.0:
                        nx = -nx
                        ny = -ny
                        nz = -nz
                u = w0 * uva[tid, 0] + bu * uvb[tid, 0] + bv * uvc[tid, 0]
                v = w0 * uva[tid, 1] + bu * uvb[tid, 1] + bv * uvc[tid, 1]
                cr, cg, cb = material_rgb(
                    mat_kind, mat_ncol, mat_colors, mat_freq, mat_phase,
                    mat_dir, mat_salt, tri_mat[tid], u, v,
                )
                sha = ambient
                sox = hx + gx * _SHADOW_BIAS
                soy = hy + gy * _SHADOW_BIAS
                soz = hz + gz * _SHADOW_BIAS
                for li in range(n_lights):
                    lx = light_pos[li, 0] - hx
                    ly = light_pos[li, 1] - hy
                    lz = light_pos[li, 2] - hz
                    d2 = lx * lx + ly * ly + lz * lz
                    dist = np.sqrt(d2)
                    ndotl = (nx * lx + ny * ly + nz * lz) / dist
                    if ndotl <= 0.0:
                        continue
                    if with_shadows:
                        slx = light_pos[li, 0] - sox
                        sly = light_pos[li, 1] - soy
                        slz = light_pos[li, 2] - soz
                        sdist = np.sqrt(slx * slx + sly * sly + slz * slz)
                        if _occluded(
                            bbox_min, bbox_max, left, right, first, count, perm,
                            v0, v1, v2,
                            sox, soy, soz,
                            slx / sdist, sly / sdist, slz / sdist,
                            1e-9, sdist * (1.0 - _SHADOW_CLIP),
                        ):
                            continue
                    sha += light_intensity[li] * ndotl / d2
                acc_r += cr
                acc_g += cg
                acc_b += cb
                acc_s += sha
                acc_m += tri_obj[tid]
            r32 = np.float32(acc_r / spp)
            g32 = np.float32(acc_g / spp)
            b32 = np.float32(acc_b / spp)
            s32 = np.float32(acc_s / spp)
            out_ref[py, px, 0] = r32
            out_ref[py, px, 1] = g32
            out_ref[py, px, 2] = b32
            out_sha[py, px, 0] = s32
            # the image is defined as the product of the stored float32
            # factors, so the product model holds to one rounding step
            out_img[py, px, 0] = np.float32(r32 * s32)
            out_img[py, px, 1] = np.float32(g32 * s32)
            out_img[py, px, 2] = np.float32(b32 * s32)
            out_msk[py, px, 0] = np.float32(acc_m / spp)
    return escaped
