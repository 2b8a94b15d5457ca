# cython: language_level=3
"""Compiled geometry kernels.

C mirror of ``_fallback.py``: same camera/space conventions, same fill
rule, same tie-breaking, and the same floating-point expression order,
so the two backends produce bit-identical buffers.  Any change to a
formula here must be applied to the fallback too (and vice versa); the
test suite asserts exact equality between the backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, ceil, fabs, floor

cnp.import_array()

DEF DET_EPS = 1e-12


cdef inline double _orient2d(double ax, double ay, double bx, double by,
                             double px, double py) noexcept nogil:
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


cdef inline bint _is_top_left(double ax, double ay, double bx, double by) noexcept nogil:
    return (ay == by and bx > ax) or (by < ay)


cdef void _raster_triangle(int[:, ::1] face_buf, double[:, ::1] depth_buf, int fid,
                           double ax, double ay, double az,
                           double bx, double by, double bz,
                           double cx3, double cy3, double cz3,
                           double fx, double fy, double cx, double cy,
                           int width, int height) noexcept nogil:
    cdef double x0, y0, x1, y1, x2, y2, iz0, iz1, iz2
    cdef double area, tx, ty, tiz
    cdef double xmin, xmax, ymin, ymax
    cdef int col_lo, col_hi, row_lo, row_hi, row, col
    cdef double px, py, w0, w1, w2, inv_z, depth
    cdef bint tl0, tl1, tl2, cov

    x0 = fx * ax / az + cx
    y0 = fy * ay / az + cy
    x1 = fx * bx / bz + cx
    y1 = fy * by / bz + cy
    x2 = fx * cx3 / cz3 + cx
    y2 = fy * cy3 / cz3 + cy
    iz0 = 1.0 / az
    iz1 = 1.0 / bz
    iz2 = 1.0 / cz3

    area = _orient2d(x0, y0, x1, y1, x2, y2)
    if area == 0.0:
        return
    if area < 0.0:
        tx = x1; ty = y1; tiz = iz1
        x1 = x2; y1 = y2; iz1 = iz2
        x2 = tx; y2 = ty; iz2 = tiz
        area = -area

    xmin = x0
    if x1 < xmin: xmin = x1
    if x2 < xmin: xmin = x2
    xmax = x0
    if x1 > xmax: xmax = x1
    if x2 > xmax: xmax = x2
    ymin = y0
    if y1 < ymin: ymin = y1
    if y2 < ymin: ymin = y2
    ymax = y0
    if y1 > ymax: ymax = y1
    if y2 > ymax: ymax = y2

    col_lo = <int>ceil(xmin - 0.5)
    col_hi = <int>floor(xmax - 0.5)
    row_lo = <int>ceil(ymin - 0.5)
    row_hi = <int>floor(ymax - 0.5)
    if col_lo < 0: col_lo = 0
    if row_lo < 0: row_lo = 0
    if col_hi > width - 1: col_hi = width - 1
    if row_hi > height - 1: row_hi = height - 1
    if col_lo > col_hi or row_lo > row_hi:
        return

    tl0 = _is_top_left(x1, y1, x2, y2)
    tl1 = _is_top_left(x2, y2, x0, y0)
    tl2 = _is_top_left(x0, y0, x1, y1)

    for row in range(row_lo, row_hi + 1):
        py = row + 0.5
        for col in range(col_lo, col_hi + 1):
            px = col + 0.5
            w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
            w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
            w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
            cov = ((w0 > 0.0) or (w0 == 0.0 and tl0)) \
                and ((w1 > 0.0) or (w1 == 0.0 and tl1)) \
                and ((w2 > 0.0) or (w2 == 0.0 and tl2))
            if not cov:
                continue
            inv_z = w0 / area * iz0 + w1 / area * iz1 + w2 / area * iz2
            depth = 1.0 / inv_z
            if depth < depth_buf[row, col] or \
                    (depth == depth_buf[row, col] and fid < face_buf[row, col]):
                depth_buf[row, col] = depth
                face_buf[row, col] = fid


def rasterize_mesh(verts_cam, faces, double fx, double fy, double cx, double cy,
                   int width, int height, double near):
    """Z-buffer rasterization; see the fallback docstring for the contract."""
    cdef double[:, ::1] v = np.ascontiguousarray(verts_cam, dtype=np.float64)
    cdef int[:, ::1] f = np.ascontiguousarray(faces, dtype=np.int32)

    face_np = np.full((height, width), -1, dtype=np.int32)
    depth_np = np.full((height, width), np.inf, dtype=np.float64)
    cdef int[:, ::1] face_buf = face_np
    cdef double[:, ::1] depth_buf = depth_np

    cdef int fid, i0, i1, i2, i, j, npoly, nout
    cdef double tri[3][3]
    cdef double poly[4][3]
    cdef double az, bz, t
    cdef bint a_in, b_in

    with nogil:
        for fid in range(f.shape[0]):
            i0 = f[fid, 0]; i1 = f[fid, 1]; i2 = f[fid, 2]
            tri[0][0] = v[i0, 0]; tri[0][1] = v[i0, 1]; tri[0][2] = v[i0, 2]
            tri[1][0] = v[i1, 0]; tri[1][1] = v[i1, 1]; tri[1][2] = v[i1, 2]
            tri[2][0] = v[i2, 0]; tri[2][1] = v[i2, 1]; tri[2][2] = v[i2, 2]

            if tri[0][2] >= near and tri[1][2] >= near and tri[2][2] >= near:
                npoly = 3
                for i in range(3):
                    for j in range(3):
                        poly[i][j] = tri[i][j]
            else:
                # Sutherland-Hodgman clip of the triangle against z >= near.
                nout = 0
                for i in range(3):
                    az = tri[i][2]
                    bz = tri[(i + 1) % 3][2]
                    a_in = az >= near
                    b_in = bz >= near
                    if a_in:
                        poly[nout][0] = tri[i][0]
                        poly[nout][1] = tri[i][1]
                        poly[nout][2] = az
                        nout += 1
                    if a_in != b_in:
                        t = (near - az) / (bz - az)
                        poly[nout][0] = tri[i][0] + t * (tri[(i + 1) % 3][0] - tri[i][0])
                        poly[nout][1] = tri[i][1] + t * (tri[(i + 1) % 3][1] - tri[i][1])
                        poly[nout][2] = near
                        nout += 1
                npoly = nout

            for i in range(1, npoly - 1):
                _raster_triangle(face_buf, depth_buf, fid,
                                 poly[0][0], poly[0][1], poly[0][2],
                                 poly[i][0], poly[i][1], poly[i][2],
                                 poly[i + 1][0], poly[i + 1][1], poly[i + 1][2],
                                 fx, fy, cx, cy, width, height)
    return face_np, depth_np


def raycast_nearest(origin, dirs, verts, faces, double tmin):
    """Nearest Moeller-Trumbore hit per ray from a shared origin."""
    cdef double[::1] o = np.ascontiguousarray(origin, dtype=np.float64)
    cdef double[:, ::1] d = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef double[:, ::1] v = np.ascontiguousarray(verts, dtype=np.float64)
    cdef int[:, ::1] f = np.ascontiguousarray(faces, dtype=np.int32)

    cdef Py_ssize_t n = d.shape[0]
    best_f_np = np.full(n, -1, dtype=np.int32)
    best_t_np = np.full(n, np.inf, dtype=np.float64)
    cdef int[::1] best_f = best_f_np
    cdef double[::1] best_t = best_t_np

    cdef Py_ssize_t k, i
    cdef int i0, i1, i2
    cdef double v0x, v0y, v0z, e1x, e1y, e1z, e2x, e2y, e2z
    cdef double sx, sy, sz, qx, qy, qz
    cdef double dx, dy, dz, px, py, pz, det, inv, u, vv, t
    cdef double ox = o[0], oy = o[1], oz = o[2]

    with nogil:
        for k in range(f.shape[0]):
            i0 = f[k, 0]; i1 = f[k, 1]; i2 = f[k, 2]
            v0x = v[i0, 0]; v0y = v[i0, 1]; v0z = v[i0, 2]
            e1x = v[i1, 0] - v0x
            e1y = v[i1, 1] - v0y
            e1z = v[i1, 2] - v0z
            e2x = v[i2, 0] - v0x
            e2y = v[i2, 1] - v0y
            e2z = v[i2, 2] - v0z
            sx = ox - v0x
            sy = oy - v0y
            sz = oz - v0z
            qx = sy * e1z - sz * e1y
            qy = sz * e1x - sx * e1z
            qz = sx * e1y - sy * e1x

            for i in range(n):
                dx = d[i, 0]; dy = d[i, 1]; dz = d[i, 2]
                px = dy * e2z - dz * e2y
                py = dz * e2x - dx * e2z
                pz = dx * e2y - dy * e2x
                det = e1x * px + e1y * py + e1z * pz
                if fabs(det) < DET_EPS:
                    continue
                inv = 1.0 / det
                u = (sx * px + sy * py + sz * pz) * inv
                if u < 0.0 or u > 1.0:
                    continue
                vv = (dx * qx + dy * qy + dz * qz) * inv
                if vv < 0.0 or u + vv > 1.0:
                    continue
                t = (e2x * qx + e2y * qy + e2z * qz) * inv
                if t >= tmin and t < best_t[i]:
                    best_t[i] = t
                    best_f[i] = <int>k
    return best_f_np, best_t_np


def segments_occluded(starts, ends, verts, faces, exclude, double eps):
    """Any-hit occlusion along open segments; see fallback docstring."""
    cdef double[:, ::1] s_ = np.ascontiguousarray(starts, dtype=np.float64)
    cdef double[:, ::1] e_ = np.ascontiguousarray(ends, dtype=np.float64)
    cdef double[:, ::1] v = np.ascontiguousarray(verts, dtype=np.float64)
    cdef int[:, ::1] f = np.ascontiguousarray(faces, dtype=np.int32)
    cdef int[::1] excl = np.ascontiguousarray(exclude, dtype=np.int32)

    cdef Py_ssize_t n = s_.shape[0]
    occ_np = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] occ = occ_np

    cdef Py_ssize_t k, i
    cdef int i0, i1, i2
    cdef double v0x, v0y, v0z, e1x, e1y, e1z, e2x, e2y, e2z
    cdef double ox, oy, oz, dx, dy, dz
    cdef double sx, sy, sz, px, py, pz, qx, qy, qz, det, inv, u, vv, t

    with nogil:
        for i in range(n):
            ox = s_[i, 0]; oy = s_[i, 1]; oz = s_[i, 2]
            dx = e_[i, 0] - ox
            dy = e_[i, 1] - oy
            dz = e_[i, 2] - oz
            for k in range(f.shape[0]):
                if excl[i] == <int>k:
                    continue
                i0 = f[k, 0]; i1 = f[k, 1]; i2 = f[k, 2]
                v0x = v[i0, 0]; v0y = v[i0, 1]; v0z = v[i0, 2]
                e1x = v[i1, 0] - v0x
                e1y = v[i1, 1] - v0y
                e1z = v[i1, 2] - v0z
                e2x = v[i2, 0] - v0x
                e2y = v[i2, 1] - v0y
                e2z = v[i2, 2] - v0z
                px = dy * e2z - dz * e2y
                py = dz * e2x - dx * e2z
                pz = dx * e2y - dy * e2x
                det = e1x * px + e1y * py + e1z * pz
                if fabs(det) < DET_EPS:
                    continue
                inv = 1.0 / det
                sx = ox - v0x
                sy = oy - v0y
                sz = oz - v0z
                u = (sx * px + sy * py + sz * pz) * inv
                if u < 0.0 or u > 1.0:
                    continue
                qx = sy * e1z - sz * e1y
                qy = sz * e1x - sx * e1z
                qz = sx * e1y - sy * e1x
                vv = (dx * qx + dy * qy + dz * qz) * inv
                if vv < 0.0 or u + vv > 1.0:
                    continue
                t = (e2x * qx + e2y * qy + e2z * qz) * inv
                if t > eps and t < 1.0 - eps:
                    occ[i] = 1
                    break
    return occ_np.astype(bool)
