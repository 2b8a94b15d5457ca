import numpy as np
import pytest

from speclight.geometry import (
    CameraView,
    FaceProjectionTable,
    TriangleMesh,
    face_mean_luminance,
    face_mean_luminances,
    make_intrinsics,
    project_vertex,
    rasterize_faces,
)
from tests.conftest import random_triangle_soup


def raycast_oracle(mesh, cam, near=1e-4):
    """Per-pixel ray casting against every triangle; nearest hit wins.

    Fully independent of the rasterizer: Moeller-Trumbore via numpy
    cross/dot per pixel.  The ray direction is left unnormalized with
    camera-space z = 1, so the ray parameter equals camera-space depth.
    """
    h, w = cam.height, cam.width
    v = mesh.vertices
    f = mesh.faces
    v0 = v[f[:, 0]]
    e1 = v[f[:, 1]] - v0
    e2 = v[f[:, 2]] - v0
    origin = cam.position
    rot = cam.cam_to_world[:3, :3]

    face_buf = np.full((h, w), -1, dtype=np.int32)
    depth_buf = np.full((h, w), np.inf)
    s = origin - v0
    for row in range(h):
        for col in range(w):
            d = rot @ np.array(
                [(col + 0.5 - cam.cx) / cam.fx, (row + 0.5 - cam.cy) / cam.fy, 1.0]
            )
            p = np.cross(d, e2)
            det = np.einsum("ij,ij->i", e1, p)
            with np.errstate(divide="ignore", invalid="ignore"):
                inv = 1.0 / det
                u = np.einsum("ij,ij->i", s, p) * inv
                q = np.cross(s, e1)
                vv = (q @ d) * inv
                t = np.einsum("ij,ij->i", e2, q) * inv
            ok = (
                (np.abs(det) > 1e-12)
                & (u >= 0) & (u <= 1) & (vv >= 0) & (u + vv <= 1)
                & (t >= near)
            )
            if ok.any():
                idx = np.nonzero(ok)[0]
                best = idx[np.argmin(t[idx])]
                face_buf[row, col] = best
                depth_buf[row, col] = t[best]
    return face_buf, depth_buf


def oracle_agreement(table, oracle_faces):
    covered = (table.face_buffer >= 0) | (oracle_faces >= 0)
    if not covered.any():
        return 1.0
    return float((table.face_buffer[covered] == oracle_faces[covered]).mean())


class TestProjectVertex:
    def test_optical_axis(self, simple_camera):
        row, col, depth = project_vertex(np.array([0.0, 0.0, 3.0]), simple_camera)
        assert (row, col, depth) == (32.0, 32.0, 3.0)

    def test_camera_center_is_behind(self, simple_camera):
        assert project_vertex(np.zeros(3), simple_camera) is None

    def test_point_behind(self, simple_camera):
        assert project_vertex(np.array([0.0, 0.0, -1.0]), simple_camera) is None

    def test_unit_cube_corner(self):
        cam = CameraView(make_intrinsics(100.0, 100.0, 50.0, 50.0), np.eye(4), 100, 100)
        # K @ (1,1,1): col = 100*1/1 + 50, row likewise; depth = z = 1.
        row, col, depth = project_vertex(np.array([1.0, 1.0, 1.0]), cam)
        assert (row, col, depth) == (150.0, 150.0, 1.0)


class TestCameraValidation:
    def test_rejects_negative_focal(self):
        k = make_intrinsics(-10.0, 10.0, 32.0, 32.0)
        with pytest.raises(ValueError):
            CameraView(k, np.eye(4), 64, 64)

    def test_rejects_principal_point_outside(self):
        k = make_intrinsics(10.0, 10.0, 100.0, 32.0)
        with pytest.raises(ValueError):
            CameraView(k, np.eye(4), 64, 64)

    def test_rejects_non_orthonormal_rotation(self):
        pose = np.eye(4)
        pose[0, 1] = 0.5
        with pytest.raises(ValueError):
            CameraView(make_intrinsics(10, 10, 32, 32), pose, 64, 64)


class TestMeshValidation:
    def test_rejects_out_of_range_index(self):
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 3]]))

    def test_rejects_repeated_index(self):
        with pytest.raises(ValueError):
            TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 1]]))


class TestRasterize:
    def test_single_triangle_coverage(self, simple_camera):
        mesh = TriangleMesh(
            np.array([[-1.0, -1.0, 2.0], [1.0, -1.0, 2.0], [0.0, 1.0, 2.0]]),
            np.array([[0, 1, 2]]),
        )
        table = rasterize_faces(mesh, simple_camera)
        assert table.pixel_counts[0] > 0
        assert table.covered_pixel_count() == table.pixel_counts[0]
        assert table.mean_depth[0] == pytest.approx(2.0)

    def test_occluded_face_empty(self, simple_camera):
        verts = np.array(
            [
                [-1.0, -1.0, 2.0], [1.0, -1.0, 2.0], [0.0, 1.0, 2.0],   # front
                [-1.5, -1.5, 4.0], [1.5, -1.5, 4.0], [0.0, 1.2, 4.0],   # behind, smaller shadow
            ]
        )
        # Make the back triangle lie entirely within the front one's
        # screen footprint by shrinking it.
        verts[3:] *= np.array([0.4, 0.4, 1.0])
        mesh = TriangleMesh(verts, np.array([[0, 1, 2], [3, 4, 5]]))
        table = rasterize_faces(mesh, simple_camera)
        assert table.pixel_counts[0] > 0
        assert table.pixel_counts[1] == 0
        assert np.isnan(table.mean_depth[1])

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_raycast_oracle(self, seed, simple_camera):
        rng = np.random.default_rng(seed)
        mesh = random_triangle_soup(rng, 10)
        table = rasterize_faces(mesh, simple_camera)
        oracle_faces, _ = raycast_oracle(mesh, simple_camera)
        assert oracle_agreement(table, oracle_faces) >= 0.995

    def test_zbuffer_exclusivity(self, simple_camera):
        rng = np.random.default_rng(11)
        mesh = random_triangle_soup(rng, 25)
        table = rasterize_faces(mesh, simple_camera)
        # Per-face pixel lists are disjoint and cover exactly the
        # covered pixels.
        total = sum(len(table.pixels_of(k)) for k in range(mesh.num_faces))
        assert total == table.covered_pixel_count()
        assert total == table.pixel_counts.sum()

    def test_frustum_culled_face_empty(self, simple_camera):
        mesh = TriangleMesh(
            np.array([[50.0, 50.0, 1.0], [51.0, 50.0, 1.0], [50.0, 51.0, 1.0]]),
            np.array([[0, 1, 2]]),
        )
        table = rasterize_faces(mesh, simple_camera)
        assert table.pixel_counts[0] == 0

    def test_behind_camera_face_empty(self, simple_camera):
        mesh = TriangleMesh(
            np.array([[-1.0, -1.0, -2.0], [1.0, -1.0, -2.0], [0.0, 1.0, -2.0]]),
            np.array([[0, 1, 2]]),
        )
        table = rasterize_faces(mesh, simple_camera)
        assert table.pixel_counts[0] == 0

    def test_near_plane_straddle_keeps_front_part(self, simple_camera):
        # Triangle pierces the camera plane; the part in front must
        # still rasterize (clipped, not dropped).
        mesh = TriangleMesh(
            np.array([[0.0, -0.5, -1.0], [0.5, 0.5, 2.0], [-0.5, 0.5, 2.0]]),
            np.array([[0, 1, 2]]),
        )
        table = rasterize_faces(mesh, simple_camera)
        assert table.pixel_counts[0] > 0
        covered = table.depth_buffer[table.face_buffer == 0]
        assert (covered >= 1e-4).all()

    def test_degenerate_triangle_no_pixels(self, simple_camera):
        mesh = TriangleMesh(
            np.array([[-1.0, 0.0, 2.0], [0.0, 0.0, 2.0], [1.0, 0.0, 2.0]]),
            np.array([[0, 1, 2]]),
        )
        table = rasterize_faces(mesh, simple_camera)
        assert table.pixel_counts[0] == 0

    def test_pose_invariance_exact_rotation(self):
        # Rotating mesh and camera by the same exact (0/+-1) rotation
        # about z leaves every buffer bit-identical.
        rng = np.random.default_rng(21)
        mesh = random_triangle_soup(rng, 15)
        k = make_intrinsics(100.0, 100.0, 32.0, 32.0)
        cam = CameraView(k, np.eye(4), 64, 64)
        table = rasterize_faces(mesh, cam)

        rigid = np.eye(4)
        rigid[:3, :3] = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        mesh2 = mesh.transformed(rigid)
        cam2 = CameraView(k, rigid @ cam.cam_to_world, 64, 64)
        table2 = rasterize_faces(mesh2, cam2)
        assert np.array_equal(table.face_buffer, table2.face_buffer)
        assert np.array_equal(table.depth_buffer, table2.depth_buffer)

    def test_pose_invariance_general_rigid(self):
        # Arbitrary rigid motion: discrete pixel assignments may flip
        # only on triangle boundaries, so demand near-total agreement.
        rng = np.random.default_rng(22)
        mesh = random_triangle_soup(rng, 15)
        k = make_intrinsics(100.0, 100.0, 32.0, 32.0)
        cam = CameraView(k, np.eye(4), 64, 64)
        table = rasterize_faces(mesh, cam)

        angle = 0.7
        rot = np.array(
            [
                [np.cos(angle), -np.sin(angle), 0.0],
                [np.sin(angle), np.cos(angle), 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        rigid = np.eye(4)
        rigid[:3, :3] = rot
        rigid[:3, 3] = [0.3, -1.2, 0.8]
        mesh2 = mesh.transformed(rigid)
        cam2 = CameraView(k, rigid @ cam.cam_to_world, 64, 64)
        table2 = rasterize_faces(mesh2, cam2)
        same = table.face_buffer == table2.face_buffer
        assert same.mean() >= 0.999


class TestFaceMeanLuminance:
    def _table_with_face0_pixels(self, values):
        face_buf = np.full((4, 4), -1, dtype=np.int32)
        img = np.zeros((4, 4))
        for i, val in enumerate(values):
            face_buf[0, i] = 0
            img[0, i] = val
        depth = np.where(face_buf >= 0, 1.0, np.inf)
        return FaceProjectionTable("v", face_buf, depth, 2), img

    def test_constant_field(self):
        table, img = self._table_with_face0_pixels([80.0, 80.0, 80.0])
        assert face_mean_luminance(table, img, 0) == 80.0

    def test_empty_marker(self):
        table, img = self._table_with_face0_pixels([80.0])
        assert face_mean_luminance(table, img, 1) is None

    def test_three_pixel_mean(self):
        table, img = self._table_with_face0_pixels([10.0, 20.0, 30.0])
        assert face_mean_luminance(table, img, 0) == pytest.approx(20.0)

    def test_dimension_mismatch(self):
        table, _ = self._table_with_face0_pixels([10.0])
        with pytest.raises(ValueError):
            face_mean_luminance(table, np.zeros((2, 2)), 0)

    def test_vectorized_matches_scalar(self):
        rng = np.random.default_rng(4)
        face_buf = rng.integers(-1, 5, (16, 16)).astype(np.int32)
        depth = np.where(face_buf >= 0, 1.0, np.inf)
        table = FaceProjectionTable("v", face_buf, depth, 5)
        img = rng.uniform(0, 100, (16, 16))
        means = face_mean_luminances(table, img)
        for k in range(5):
            scalar = face_mean_luminance(table, img, k)
            if scalar is None:
                assert np.isnan(means[k])
            else:
                assert means[k] == pytest.approx(scalar, abs=1e-9)
