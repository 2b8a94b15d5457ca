"""Mesh, camera, and face backprojection.

The per-view product is a :class:`FaceProjectionTable`: for every mesh
face, the set of pixels where that face is the front-most surface after
z-buffer occlusion and frustum culling.  All later stages aggregate
over these tables instead of touching pixels individually.

Camera model: pinhole with a 4x4 intrinsics matrix (fx, fy, cx, cy in
the upper-left block, Matterport-style) and a 4x4 camera-to-world pose.
Camera space is +x right, +y down, +z forward, so depth is camera z and
pixel (row, col) corresponds to (fy*y/z + cy, fx*x/z + cx).
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from speclight import kernels

NEAR_PLANE = 1e-4


@dataclass
class TriangleMesh:
    """Indexed triangle soup; vertices (n, 3) float64, faces (m, 3) int32."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int32)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError("vertices must be (n, 3)")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise ValueError("faces must be (m, 3)")
        if self.vertices.shape[0] < 3:
            raise ValueError("mesh needs at least 3 vertices")
        if self.faces.size and self.faces.max() >= self.vertices.shape[0]:
            raise ValueError("face index out of range")
        if self.faces.size and self.faces.min() < 0:
            raise ValueError("negative face index")
        f = self.faces
        if f.size and (
            (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        ).any():
            raise ValueError("degenerate face with repeated vertex index")

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    def face_normals(self) -> np.ndarray:
        """Unnormalized geometric normals, (m, 3)."""
        v = self.vertices
        f = self.faces
        e1 = v[f[:, 1]] - v[f[:, 0]]
        e2 = v[f[:, 2]] - v[f[:, 0]]
        return np.cross(e1, e2)

    def transformed(self, rigid: np.ndarray) -> "TriangleMesh":
        """Apply a 4x4 rigid transform to every vertex."""
        v = self.vertices @ rigid[:3, :3].T + rigid[:3, 3]
        return TriangleMesh(v, self.faces.copy())


@dataclass
class CameraView:
    """One rendered view: intrinsics, camera-to-world pose, raster size."""

    intrinsics: np.ndarray
    cam_to_world: np.ndarray
    width: int
    height: int
    view_id: str = ""

    def __post_init__(self):
        self.intrinsics = np.asarray(self.intrinsics, dtype=np.float64)
        self.cam_to_world = np.asarray(self.cam_to_world, dtype=np.float64)
        if self.intrinsics.shape != (4, 4) or self.cam_to_world.shape != (4, 4):
            raise ValueError("intrinsics and pose must be 4x4 matrices")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point outside the image")
        r = self.cam_to_world[:3, :3]
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-6):
            raise ValueError("pose rotation block is not orthonormal")

    @property
    def fx(self) -> float:
        return float(self.intrinsics[0, 0])

    @property
    def fy(self) -> float:
        return float(self.intrinsics[1, 1])

    @property
    def cx(self) -> float:
        return float(self.intrinsics[0, 2])

    @property
    def cy(self) -> float:
        return float(self.intrinsics[1, 2])

    @property
    def position(self) -> np.ndarray:
        return self.cam_to_world[:3, 3]

    @cached_property
    def world_to_cam(self) -> np.ndarray:
        # Rigid inverse: [R | t]^-1 = [R^T | -R^T t].  Analytic form keeps
        # round-trips exact for axis-aligned test poses.
        r = self.cam_to_world[:3, :3]
        t = self.cam_to_world[:3, 3]
        out = np.eye(4)
        out[:3, :3] = r.T
        out[:3, 3] = -r.T @ t
        return out

    def world_to_cam_points(self, pts: np.ndarray) -> np.ndarray:
        w2c = self.world_to_cam
        return pts @ w2c[:3, :3].T + w2c[:3, 3]

    def pixel_ray_dirs(self) -> np.ndarray:
        """World-space ray directions through all pixel centers, (h*w, 3).

        Unit length; row-major pixel order.
        """
        cols = np.arange(self.width, dtype=np.float64) + 0.5
        rows = np.arange(self.height, dtype=np.float64) + 0.5
        x = (cols[None, :] - self.cx) / self.fx
        y = (rows[:, None] - self.cy) / self.fy
        d = np.stack(
            [
                np.broadcast_to(x, (self.height, self.width)),
                np.broadcast_to(y, (self.height, self.width)),
                np.ones((self.height, self.width)),
            ],
            axis=-1,
        ).reshape(-1, 3)
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        return d @ self.cam_to_world[:3, :3].T

    @property
    def forward(self) -> np.ndarray:
        """World-space optical axis (+z of camera space)."""
        return self.cam_to_world[:3, 2]


def make_intrinsics(fx: float, fy: float, cx: float, cy: float) -> np.ndarray:
    """4x4 intrinsics matrix with the pinhole parameters embedded."""
    k = np.eye(4)
    k[0, 0] = fx
    k[1, 1] = fy
    k[0, 2] = cx
    k[1, 2] = cy
    return k


def project_vertex(v, cam: CameraView):
    """Project one world-space point; returns (row, col, depth) or None.

    None is the behind-camera marker (camera-space z <= 0).
    """
    p = cam.world_to_cam_points(np.asarray(v, dtype=np.float64)[None, :])[0]
    if p[2] <= 0.0:
        return None
    col = cam.fx * p[0] / p[2] + cam.cx
    row = cam.fy * p[1] / p[2] + cam.cy
    return (row, col, p[2])


@dataclass
class FaceProjectionTable:
    """Per-view face -> visible-pixel mapping after occlusion culling.

    face_buffer holds the owning face index per pixel (-1 = background),
    which makes z-buffer exclusivity structural: a pixel belongs to at
    most one face by construction.
    """

    view_id: str
    face_buffer: np.ndarray
    depth_buffer: np.ndarray
    num_faces: int
    pixel_counts: np.ndarray = field(init=False)
    mean_depth: np.ndarray = field(init=False)

    def __post_init__(self):
        covered = self.face_buffer >= 0
        ids = self.face_buffer[covered]
        self.pixel_counts = np.bincount(ids, minlength=self.num_faces).astype(np.int64)
        depth_sums = np.bincount(
            ids, weights=self.depth_buffer[covered], minlength=self.num_faces
        )
        with np.errstate(invalid="ignore"):
            self.mean_depth = depth_sums / self.pixel_counts
        self.mean_depth[self.pixel_counts == 0] = np.nan

    @property
    def width(self) -> int:
        return self.face_buffer.shape[1]

    @property
    def height(self) -> int:
        return self.face_buffer.shape[0]

    @property
    def visible(self) -> np.ndarray:
        """Bool (num_faces,): face has at least one visible pixel."""
        return self.pixel_counts > 0

    def pixels_of(self, face: int) -> np.ndarray:
        """(k, 2) array of (row, col) pixels owned by the face."""
        rows, cols = np.nonzero(self.face_buffer == face)
        return np.stack([rows, cols], axis=1)

    def covered_pixel_count(self) -> int:
        return int((self.face_buffer >= 0).sum())


def rasterize_faces(mesh: TriangleMesh, cam: CameraView) -> FaceProjectionTable:
    """Backproject every face into the view with z-buffer occlusion.

    Degenerate (zero screen area) triangles contribute no pixels; faces
    fully outside the frustum come back with empty pixel sets.  No
    back-face culling: interiors are viewed from inside and winding in
    CAD-derived meshes is unreliable, so the z-buffer alone resolves
    visibility.
    """
    verts_cam = cam.world_to_cam_points(mesh.vertices)
    face_buf, depth_buf = kernels.rasterize_mesh(
        verts_cam, mesh.faces, cam.fx, cam.fy, cam.cx, cam.cy,
        cam.width, cam.height, NEAR_PLANE,
    )
    return FaceProjectionTable(cam.view_id, face_buf, depth_buf, mesh.num_faces)


def face_mean_luminance(
    table: FaceProjectionTable, img: np.ndarray, face: int
) -> Optional[float]:
    """Mean L* over one face's visible pixels; None if it has none."""
    if img.shape != table.face_buffer.shape:
        raise ValueError(
            f"image shape {img.shape} does not match table {table.face_buffer.shape}"
        )
    sel = table.face_buffer == face
    if not sel.any():
        return None
    return float(img[sel].mean())


def face_mean_luminances(table: FaceProjectionTable, img: np.ndarray) -> np.ndarray:
    """Vectorized per-face mean L*, (num_faces,) with NaN for invisible."""
    if img.shape != table.face_buffer.shape:
        raise ValueError(
            f"image shape {img.shape} does not match table {table.face_buffer.shape}"
        )
    covered = table.face_buffer >= 0
    ids = table.face_buffer[covered]
    sums = np.bincount(ids, weights=img[covered], minlength=table.num_faces)
    with np.errstate(invalid="ignore"):
        means = sums / table.pixel_counts
    means[table.pixel_counts == 0] = np.nan
    return means
