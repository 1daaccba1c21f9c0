"""Pure-numpy kernel implementations.

Mirror of the Cython core in ``_native.pyx``: identical corner enumeration
order and accumulation order, so the two backends agree bit-for-bit.
"""

from __future__ import annotations

import numpy as np

# corner order fixed across backends: z fastest, then y, then x
_CORNERS = np.array(
    [[0, 0, 0], [0, 0, 1], [0, 1, 0], [0, 1, 1], [1, 0, 0], [1, 0, 1], [1, 1, 0], [1, 1, 1]],
    dtype=np.int64,
)

_P1 = np.int64(1)
_P2 = np.int64(2654435761)
_P3 = np.int64(805459861)


def _level_geometry(x01, res):
    p = x01 * res
    c0 = np.clip(np.floor(p), 0, res - 1).astype(np.int64)
    frac = p - c0
    return c0, frac


def _corner_hash(cx, cy, cz, mask):
    return ((cx * _P1) ^ (cy * _P2) ^ (cz * _P3)) & mask


def encode_forward(tables: np.ndarray, x01: np.ndarray, res: np.ndarray) -> np.ndarray:
    """Multi-level hashed trilinear lookup.

    tables (L, T, F) float64, x01 (N, 3) in [0, 1], res (L,) int64.
    Returns (N, L*F).
    """
    L, T, F = tables.shape
    n = x01.shape[0]
    mask = np.int64(T - 1)
    out = np.zeros((n, L * F), dtype=np.float64)
    for lv in range(L):
        c0, frac = _level_geometry(x01, float(res[lv]))
        acc = out[:, lv * F : (lv + 1) * F]
        for o in range(8):
            off = _CORNERS[o]
            cx, cy, cz = c0[:, 0] + off[0], c0[:, 1] + off[1], c0[:, 2] + off[2]
            idx = _corner_hash(cx, cy, cz, mask)
            w = np.ones(n, dtype=np.float64)
            for k in range(3):
                w = w * (frac[:, k] if off[k] else 1.0 - frac[:, k])
            acc += w[:, None] * tables[lv, idx]
    return out


def encode_backward(
    tables: np.ndarray,
    x01: np.ndarray,
    res: np.ndarray,
    grad_out: np.ndarray,
    need_input_grad: bool,
):
    """Gradients of :func:`encode_forward` w.r.t. tables and (optionally) x01.

    Table scatter runs point-major (all 8 corners of point 0, then point 1,
    ...) to match the compiled kernel's accumulation order exactly.
    """
    L, T, F = tables.shape
    n = x01.shape[0]
    mask = np.int64(T - 1)
    grad_tables = np.zeros_like(tables)
    grad_x = np.zeros((n, 3), dtype=np.float64) if need_input_grad else None
    for lv in range(L):
        c0, frac = _level_geometry(x01, float(res[lv]))
        g = grad_out[:, lv * F : (lv + 1) * F]
        idx8 = np.empty((n, 8), dtype=np.int64)
        w8 = np.empty((n, 8), dtype=np.float64)
        for o in range(8):
            off = _CORNERS[o]
            idx8[:, o] = _corner_hash(c0[:, 0] + off[0], c0[:, 1] + off[1], c0[:, 2] + off[2], mask)
            t0 = frac[:, 0] if off[0] else 1.0 - frac[:, 0]
            t1 = frac[:, 1] if off[1] else 1.0 - frac[:, 1]
            t2 = frac[:, 2] if off[2] else 1.0 - frac[:, 2]
            w8[:, o] = t0 * t1 * t2
            if need_input_grad:
                rows = tables[lv, idx8[:, o]]
                dot = rows[:, 0] * g[:, 0]
                for f in range(1, F):  # sequential, matching the compiled kernel
                    dot = dot + rows[:, f] * g[:, f]
                s0 = 1.0 if off[0] else -1.0
                s1 = 1.0 if off[1] else -1.0
                s2 = 1.0 if off[2] else -1.0
                grad_x[:, 0] += dot * (s0 * t1 * t2) * float(res[lv])
                grad_x[:, 1] += dot * (t0 * s1 * t2) * float(res[lv])
                grad_x[:, 2] += dot * (t0 * t1 * s2) * float(res[lv])
        vals = w8[:, :, None] * g[:, None, :]
        np.add.at(grad_tables[lv], idx8.reshape(-1), vals.reshape(-1, F))
    return grad_tables, grad_x


def rasterize(
    verts_cam: np.ndarray,
    faces: np.ndarray,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    width: int,
    height: int,
):
    """Z-buffered triangle fill with perspective-correct barycentrics.

    verts_cam are camera-frame positions (+z forward). Pixels sample at
    (ix+0.5, iy+0.5). Returns (face_id int32 (H,W), bary (H,W,3), zbuf (H,W));
    face_id is -1 and zbuf is +inf where nothing was hit. Faces are filled in
    index order with a strict depth test, so ties go to the lower face id.
    """
    znear = 1e-6
    v = verts_cam
    face_id = np.full((height, width), -1, dtype=np.int32)
    bary = np.zeros((height, width, 3), dtype=np.float64)
    zbuf = np.full((height, width), np.inf, dtype=np.float64)

    z = v[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        su = fx * v[:, 0] / z + cx
        sv = fy * v[:, 1] / z + cy

    for fi in range(faces.shape[0]):
        i0, i1, i2 = faces[fi]
        z0, z1, z2 = z[i0], z[i1], z[i2]
        if z0 <= znear or z1 <= znear or z2 <= znear:
            continue
        x0, y0 = su[i0], sv[i0]
        x1, y1 = su[i1], sv[i1]
        x2, y2 = su[i2], sv[i2]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if area == 0.0:
            continue
        lo_x = max(0, int(np.ceil(min(x0, x1, x2) - 0.5)))
        hi_x = min(width - 1, int(np.floor(max(x0, x1, x2) - 0.5)))
        lo_y = max(0, int(np.ceil(min(y0, y1, y2) - 0.5)))
        hi_y = min(height - 1, int(np.floor(max(y0, y1, y2) - 0.5)))
        if lo_x > hi_x or lo_y > hi_y:
            continue
        px = np.arange(lo_x, hi_x + 1) + 0.5
        py = np.arange(lo_y, hi_y + 1) + 0.5
        gx, gy = np.meshgrid(px, py)
        w0 = ((x1 - gx) * (y2 - gy) - (x2 - gx) * (y1 - gy)) / area
        w1 = ((x2 - gx) * (y0 - gy) - (x0 - gx) * (y2 - gy)) / area
        w2 = 1.0 - w0 - w1
        inside = (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
        if not inside.any():
            continue
        inv_z = w0 / z0 + w1 / z1 + w2 / z2
        zi = np.where(inside, 1.0 / inv_z, np.inf)
        sub = zbuf[lo_y : hi_y + 1, lo_x : hi_x + 1]
        win = inside & (zi < sub)
        if not win.any():
            continue
        sub[win] = zi[win]
        face_id[lo_y : hi_y + 1, lo_x : hi_x + 1][win] = fi
        pc = np.stack([w0 / z0, w1 / z1, w2 / z2], axis=-1) / inv_z[..., None]
        bary[lo_y : hi_y + 1, lo_x : hi_x + 1][win] = pc[win]
    return face_id, bary, zbuf
