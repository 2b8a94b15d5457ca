"""Pure-numpy geometry kernels.

Reference implementation of the hot loops (triangle z-buffer
rasterization, nearest-hit ray casting, segment occlusion).  The
compiled core in ``_core.pyx`` mirrors this module expression by
expression: every floating-point formula here is written with the same
operand order as the C code so both backends produce bit-identical
buffers.  Keep the two files in sync when touching any arithmetic.

Conventions shared by both backends:
  * camera space: +x right, +y down, +z forward; depth = camera z
  * pixel centers at (col + 0.5, row + 0.5)
  * fill rule: top-left, on positively-oriented screen triangles
  * depth ties resolved toward the lower face index
  * triangles straddling z = near are clipped, not dropped
"""

import numpy as np

# Rejects near-parallel ray/triangle pairs; scene units are O(1) here.
DET_EPS = 1e-12


def _orient2d(ax, ay, bx, by, px, py):
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def _is_top_left(ax, ay, bx, by):
    # For a positively-oriented triangle (y down): top edges run right,
    # left edges run up.  Pixels exactly on those edges are covered.
    return (ay == by and bx > ax) or (by < ay)


def _clip_near(tri, near):
    """Clip a camera-space triangle against z >= near.

    Returns a list of (x, y, z) tuples (0, 3, or 4 vertices, ordered).
    """
    out = []
    n = len(tri)
    for i in range(n):
        ax, ay, az = tri[i]
        bx, by, bz = tri[(i + 1) % n]
        a_in = az >= near
        b_in = bz >= near
        if a_in:
            out.append((ax, ay, az))
        if a_in != b_in:
            t = (near - az) / (bz - az)
            out.append((ax + t * (bx - ax), ay + t * (by - ay), near))
    return out


def rasterize_mesh(verts_cam, faces, fx, fy, cx, cy, width, height, near):
    """Z-buffer rasterization of all triangles of a mesh.

    Args:
        verts_cam: (n, 3) float64 camera-space vertex positions.
        faces: (m, 3) int32 vertex index triples.
        fx, fy, cx, cy: pinhole intrinsics (pixels).
        width, height: raster size.
        near: near-plane distance; geometry at z < near is clipped.

    Returns:
        (face_buf, depth_buf): (h, w) int32 with -1 where uncovered, and
        (h, w) float64 with +inf where uncovered.
    """
    verts_cam = np.ascontiguousarray(verts_cam, dtype=np.float64)
    faces = np.ascontiguousarray(faces, dtype=np.int32)
    face_buf = np.full((height, width), -1, dtype=np.int32)
    depth_buf = np.full((height, width), np.inf, dtype=np.float64)

    for fid in range(faces.shape[0]):
        i0, i1, i2 = faces[fid]
        tri = [
            (verts_cam[i0, 0], verts_cam[i0, 1], verts_cam[i0, 2]),
            (verts_cam[i1, 0], verts_cam[i1, 1], verts_cam[i1, 2]),
            (verts_cam[i2, 0], verts_cam[i2, 1], verts_cam[i2, 2]),
        ]
        if tri[0][2] >= near and tri[1][2] >= near and tri[2][2] >= near:
            poly = tri
        else:
            poly = _clip_near(tri, near)
        # Fan-triangulate the clipped polygon (3 or 4 vertices).
        for s in range(1, len(poly) - 1):
            _raster_triangle(
                face_buf, depth_buf, fid,
                poly[0], poly[s], poly[s + 1],
                fx, fy, cx, cy, width, height,
            )
    return face_buf, depth_buf


def _raster_triangle(face_buf, depth_buf, fid, a, b, c, fx, fy, cx, cy, width, height):
    # Project to screen space; keep 1/z for perspective-correct depth.
    x0 = fx * a[0] / a[2] + cx
    y0 = fy * a[1] / a[2] + cy
    x1 = fx * b[0] / b[2] + cx
    y1 = fy * b[1] / b[2] + cy
    x2 = fx * c[0] / c[2] + cx
    y2 = fy * c[1] / c[2] + cy
    iz0 = 1.0 / a[2]
    iz1 = 1.0 / b[2]
    iz2 = 1.0 / c[2]

    area = _orient2d(x0, y0, x1, y1, x2, y2)
    if area == 0.0:
        return
    if area < 0.0:
        x1, y1, iz1, x2, y2, iz2 = x2, y2, iz2, x1, y1, iz1
        area = -area

    col_lo = max(0, int(np.ceil(min(x0, x1, x2) - 0.5)))
    col_hi = min(width - 1, int(np.floor(max(x0, x1, x2) - 0.5)))
    row_lo = max(0, int(np.ceil(min(y0, y1, y2) - 0.5)))
    row_hi = min(height - 1, int(np.floor(max(y0, y1, y2) - 0.5)))
    if col_lo > col_hi or row_lo > row_hi:
        return

    px = np.arange(col_lo, col_hi + 1, dtype=np.float64) + 0.5
    py = (np.arange(row_lo, row_hi + 1, dtype=np.float64) + 0.5)[:, None]

    w0 = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    w1 = (x0 - x2) * (py - y2) - (y0 - y2) * (px - x2)
    w2 = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)

    tl0 = _is_top_left(x1, y1, x2, y2)
    tl1 = _is_top_left(x2, y2, x0, y0)
    tl2 = _is_top_left(x0, y0, x1, y1)
    cov = ((w0 > 0.0) | ((w0 == 0.0) & tl0)) \
        & ((w1 > 0.0) | ((w1 == 0.0) & tl1)) \
        & ((w2 > 0.0) | ((w2 == 0.0) & tl2))
    if not cov.any():
        return

    inv_z = w0 / area * iz0 + w1 / area * iz1 + w2 / area * iz2
    with np.errstate(divide="ignore"):
        depth = 1.0 / inv_z

    fsub = face_buf[row_lo:row_hi + 1, col_lo:col_hi + 1]
    dsub = depth_buf[row_lo:row_hi + 1, col_lo:col_hi + 1]
    win = cov & ((depth < dsub) | ((depth == dsub) & (fid < fsub)))
    dsub[win] = depth[win]
    fsub[win] = fid


def raycast_nearest(origin, dirs, verts, faces, tmin):
    """Nearest ray/triangle hit for a bundle of rays from one origin.

    Moeller-Trumbore over every (ray, face) pair; ties in t go to the
    lower face index.  Returns (face int32 (N,), t float64 (N,)) with
    -1 / +inf for misses.  t is measured in units of |dirs| rows.
    """
    origin = np.asarray(origin, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    faces = np.ascontiguousarray(faces, dtype=np.int32)

    n = dirs.shape[0]
    best_f = np.full(n, -1, dtype=np.int32)
    best_t = np.full(n, np.inf, dtype=np.float64)
    dx, dy, dz = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    ox, oy, oz = float(origin[0]), float(origin[1]), float(origin[2])

    for k in range(faces.shape[0]):
        i0, i1, i2 = faces[k]
        v0x, v0y, v0z = verts[i0]
        e1x = verts[i1, 0] - v0x
        e1y = verts[i1, 1] - v0y
        e1z = verts[i1, 2] - v0z
        e2x = verts[i2, 0] - v0x
        e2y = verts[i2, 1] - v0y
        e2z = verts[i2, 2] - v0z

        px = dy * e2z - dz * e2y
        py = dz * e2x - dx * e2z
        pz = dx * e2y - dy * e2x
        det = e1x * px + e1y * py + e1z * pz

        sx = ox - v0x
        sy = oy - v0y
        sz = oz - v0z
        qx = sy * e1z - sz * e1y
        qy = sz * e1x - sx * e1z
        qz = sx * e1y - sy * e1x

        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / det
            u = (sx * px + sy * py + sz * pz) * inv
            v = (dx * qx + dy * qy + dz * qz) * inv
            t = (e2x * qx + e2y * qy + e2z * qz) * inv

        hit = (np.abs(det) >= DET_EPS) \
            & (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0) \
            & (t >= tmin) & (t < best_t)
        best_t[hit] = t[hit]
        best_f[hit] = k
    return best_f, best_t


def segments_occluded(starts, ends, verts, faces, exclude, eps):
    """Any-hit test along open segments (shadow rays).

    A segment i is occluded when any face other than exclude[i]
    intersects it at parameter t in (eps, 1 - eps).  Returns a bool
    array of shape (N,).
    """
    starts = np.ascontiguousarray(starts, dtype=np.float64)
    ends = np.ascontiguousarray(ends, dtype=np.float64)
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    faces = np.ascontiguousarray(faces, dtype=np.int32)
    exclude = np.ascontiguousarray(exclude, dtype=np.int32)

    n = starts.shape[0]
    occluded = np.zeros(n, dtype=bool)
    dx = ends[:, 0] - starts[:, 0]
    dy = ends[:, 1] - starts[:, 1]
    dz = ends[:, 2] - starts[:, 2]
    ox, oy, oz = starts[:, 0], starts[:, 1], starts[:, 2]

    for k in range(faces.shape[0]):
        i0, i1, i2 = faces[k]
        v0x, v0y, v0z = verts[i0]
        e1x = verts[i1, 0] - v0x
        e1y = verts[i1, 1] - v0y
        e1z = verts[i1, 2] - v0z
        e2x = verts[i2, 0] - v0x
        e2y = verts[i2, 1] - v0y
        e2z = verts[i2, 2] - v0z

        px = dy * e2z - dz * e2y
        py = dz * e2x - dx * e2z
        pz = dx * e2y - dy * e2x
        det = e1x * px + e1y * py + e1z * pz

        sx = ox - v0x
        sy = oy - v0y
        sz = oz - v0z
        qx = sy * e1z - sz * e1y
        qy = sz * e1x - sx * e1z
        qz = sx * e1y - sy * e1x

        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / det
            u = (sx * px + sy * py + sz * pz) * inv
            v = (dx * qx + dy * qy + dz * qz) * inv
            t = (e2x * qx + e2y * qy + e2z * qz) * inv

        hit = (np.abs(det) >= DET_EPS) \
            & (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0) \
            & (t > eps) & (t < 1.0 - eps) & (exclude != k)
        occluded |= hit
    return occluded
