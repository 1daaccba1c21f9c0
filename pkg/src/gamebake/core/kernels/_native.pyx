# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel core: hash-grid encoding and triangle rasterization.

Must stay bit-compatible with ``fallback.py``: same corner enumeration,
same accumulation order, same arithmetic.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor

cnp.import_array()

cdef unsigned long long P1 = 1
cdef unsigned long long P2 = 2654435761
cdef unsigned long long P3 = 805459861

# corner order fixed across backends: z fastest, then y, then x
cdef int[24] CORNER_OFFS = [0, 0, 0,  0, 0, 1,  0, 1, 0,  0, 1, 1,
                            1, 0, 0,  1, 0, 1,  1, 1, 0,  1, 1, 1]


def encode_forward(double[:, :, ::1] tables, double[:, ::1] x01, long[::1] res):
    cdef Py_ssize_t L = tables.shape[0]
    cdef Py_ssize_t T = tables.shape[1]
    cdef Py_ssize_t F = tables.shape[2]
    cdef Py_ssize_t n = x01.shape[0]
    cdef unsigned long long mask = <unsigned long long> (T - 1)
    out_arr = np.zeros((n, L * F), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t lv, i, o, f
    cdef double r, px, py, pz, fx, fy, fz, w, t0, t1, t2
    cdef long cx, cy, cz, ox, oy, oz, rmax
    cdef unsigned long long idx, hx0, hy0, hz0, hx1, hy1, hz1
    for lv in range(L):
        r = <double> res[lv]
        rmax = <long> r - 1
        for i in range(n):
            px = x01[i, 0] * r
            py = x01[i, 1] * r
            pz = x01[i, 2] * r
            cx = <long> floor(px)
            cy = <long> floor(py)
            cz = <long> floor(pz)
            if cx < 0: cx = 0
            if cy < 0: cy = 0
            if cz < 0: cz = 0
            if cx > rmax: cx = rmax
            if cy > rmax: cy = rmax
            if cz > rmax: cz = rmax
            fx = px - cx
            fy = py - cy
            fz = pz - cz
            hx0 = (<unsigned long long> cx) * P1
            hy0 = (<unsigned long long> cy) * P2
            hz0 = (<unsigned long long> cz) * P3
            hx1 = (<unsigned long long> (cx + 1)) * P1
            hy1 = (<unsigned long long> (cy + 1)) * P2
            hz1 = (<unsigned long long> (cz + 1)) * P3
            for o in range(8):
                ox = CORNER_OFFS[3 * o]
                oy = CORNER_OFFS[3 * o + 1]
                oz = CORNER_OFFS[3 * o + 2]
                t0 = fx if ox else 1.0 - fx
                t1 = fy if oy else 1.0 - fy
                t2 = fz if oz else 1.0 - fz
                w = (1.0 * t0) * t1 * t2
                idx = ((hx1 if ox else hx0) ^ (hy1 if oy else hy0) ^ (hz1 if oz else hz0)) & mask
                for f in range(F):
                    out[i, lv * F + f] += w * tables[lv, idx, f]
    return out_arr


def encode_backward(double[:, :, ::1] tables, double[:, ::1] x01, long[::1] res,
                    double[:, ::1] grad_out, bint need_input_grad):
    cdef Py_ssize_t L = tables.shape[0]
    cdef Py_ssize_t T = tables.shape[1]
    cdef Py_ssize_t F = tables.shape[2]
    cdef Py_ssize_t n = x01.shape[0]
    cdef unsigned long long mask = <unsigned long long> (T - 1)
    gt_arr = np.zeros((L, T, F), dtype=np.float64)
    gx_arr = np.zeros((n, 3), dtype=np.float64) if need_input_grad else None
    cdef double[:, :, ::1] gt = gt_arr
    cdef double[:, ::1] gx
    if need_input_grad:
        gx = gx_arr
    cdef Py_ssize_t lv, i, o, f
    cdef double r, px, py, pz, fx, fy, fz, w, t0, t1, t2, s0, s1, s2, dot
    cdef long cx, cy, cz, ox, oy, oz, rmax
    cdef unsigned long long idx, hx0, hy0, hz0, hx1, hy1, hz1
    for lv in range(L):
        r = <double> res[lv]
        rmax = <long> r - 1
        for i in range(n):
            px = x01[i, 0] * r
            py = x01[i, 1] * r
            pz = x01[i, 2] * r
            cx = <long> floor(px)
            cy = <long> floor(py)
            cz = <long> floor(pz)
            if cx < 0: cx = 0
            if cy < 0: cy = 0
            if cz < 0: cz = 0
            if cx > rmax: cx = rmax
            if cy > rmax: cy = rmax
            if cz > rmax: cz = rmax
            fx = px - cx
            fy = py - cy
            fz = pz - cz
            hx0 = (<unsigned long long> cx) * P1
            hy0 = (<unsigned long long> cy) * P2
            hz0 = (<unsigned long long> cz) * P3
            hx1 = (<unsigned long long> (cx + 1)) * P1
            hy1 = (<unsigned long long> (cy + 1)) * P2
            hz1 = (<unsigned long long> (cz + 1)) * P3
            for o in range(8):
                ox = CORNER_OFFS[3 * o]
                oy = CORNER_OFFS[3 * o + 1]
                oz = CORNER_OFFS[3 * o + 2]
                t0 = fx if ox else 1.0 - fx
                t1 = fy if oy else 1.0 - fy
                t2 = fz if oz else 1.0 - fz
                w = (1.0 * t0) * t1 * t2
                idx = ((hx1 if ox else hx0) ^ (hy1 if oy else hy0) ^ (hz1 if oz else hz0)) & mask
                for f in range(F):
                    gt[lv, idx, f] += w * grad_out[i, lv * F + f]
                if need_input_grad:
                    dot = 0.0
                    for f in range(F):
                        dot += tables[lv, idx, f] * grad_out[i, lv * F + f]
                    s0 = 1.0 if ox else -1.0
                    s1 = 1.0 if oy else -1.0
                    s2 = 1.0 if oz else -1.0
                    gx[i, 0] += dot * (s0 * t1 * t2) * r
                    gx[i, 1] += dot * (t0 * s1 * t2) * r
                    gx[i, 2] += dot * (t0 * t1 * s2) * r
    return gt_arr, gx_arr


def rasterize(double[:, ::1] verts_cam, long[:, ::1] faces,
              double fx, double fy, double cx, double cy, int width, int height):
    cdef Py_ssize_t V = verts_cam.shape[0]
    cdef Py_ssize_t NF = faces.shape[0]
    cdef double znear = 1e-6
    fid_arr = np.full((height, width), -1, dtype=np.int32)
    bary_arr = np.zeros((height, width, 3), dtype=np.float64)
    zbuf_arr = np.full((height, width), np.inf, dtype=np.float64)
    cdef int[:, ::1] fid = fid_arr
    cdef double[:, :, ::1] bary = bary_arr
    cdef double[:, ::1] zbuf = zbuf_arr

    su_arr = np.empty(V, dtype=np.float64)
    sv_arr = np.empty(V, dtype=np.float64)
    cdef double[::1] su = su_arr
    cdef double[::1] sv = sv_arr
    cdef Py_ssize_t i
    cdef double z
    for i in range(V):
        z = verts_cam[i, 2]
        if z > znear:
            su[i] = fx * verts_cam[i, 0] / z + cx
            sv[i] = fy * verts_cam[i, 1] / z + cy

    cdef Py_ssize_t f
    cdef long i0, i1, i2
    cdef double z0, z1, z2, x0, y0, x1, y1, x2, y2, area
    cdef double minx, maxx, miny, maxy
    cdef long lo_x, hi_x, lo_y, hi_y, ix, iy
    cdef double gx, gy, w0, w1, w2, inv_z, zi, b0, b1, b2
    for f in range(NF):
        i0 = faces[f, 0]
        i1 = faces[f, 1]
        i2 = faces[f, 2]
        z0 = verts_cam[i0, 2]
        z1 = verts_cam[i1, 2]
        z2 = verts_cam[i2, 2]
        if z0 <= znear or z1 <= znear or z2 <= znear:
            continue
        x0 = su[i0]; y0 = sv[i0]
        x1 = su[i1]; y1 = sv[i1]
        x2 = su[i2]; y2 = sv[i2]
        area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if area == 0.0:
            continue
        minx = x0
        if x1 < minx: minx = x1
        if x2 < minx: minx = x2
        maxx = x0
        if x1 > maxx: maxx = x1
        if x2 > maxx: maxx = x2
        miny = y0
        if y1 < miny: miny = y1
        if y2 < miny: miny = y2
        maxy = y0
        if y1 > maxy: maxy = y1
        if y2 > maxy: maxy = y2
        lo_x = <long> ceil(minx - 0.5)
        hi_x = <long> floor(maxx - 0.5)
        lo_y = <long> ceil(miny - 0.5)
        hi_y = <long> floor(maxy - 0.5)
        if lo_x < 0: lo_x = 0
        if lo_y < 0: lo_y = 0
        if hi_x > width - 1: hi_x = width - 1
        if hi_y > height - 1: hi_y = height - 1
        if lo_x > hi_x or lo_y > hi_y:
            continue
        for iy in range(lo_y, hi_y + 1):
            gy = iy + 0.5
            for ix in range(lo_x, hi_x + 1):
                gx = ix + 0.5
                w0 = ((x1 - gx) * (y2 - gy) - (x2 - gx) * (y1 - gy)) / area
                w1 = ((x2 - gx) * (y0 - gy) - (x0 - gx) * (y2 - gy)) / area
                w2 = 1.0 - w0 - w1
                if w0 < 0 or w1 < 0 or w2 < 0:
                    continue
                inv_z = w0 / z0 + w1 / z1 + w2 / z2
                zi = 1.0 / inv_z
                if zi < zbuf[iy, ix]:
                    zbuf[iy, ix] = zi
                    fid[iy, ix] = <int> f
                    bary[iy, ix, 0] = (w0 / z0) / inv_z
                    bary[iy, ix, 1] = (w1 / z1) / inv_z
                    bary[iy, ix, 2] = (w2 / z2) / inv_z
    return fid_arr, bary_arr, zbuf_arr
