import numpy as np
import pytest

from speclight.geometry import CameraView, TriangleMesh, make_intrinsics


@pytest.fixture
def simple_camera():
    """Identity-pose camera at the origin looking down +z."""
    return CameraView(make_intrinsics(100.0, 100.0, 32.0, 32.0), np.eye(4), 64, 64,
                      view_id="cam0")


def random_triangle_soup(rng, n_faces, depth_range=(1.0, 5.0), spread=2.0):
    """Triangle soup in front of an identity camera (z in depth_range)."""
    centers = np.column_stack(
        [
            rng.uniform(-spread, spread, n_faces),
            rng.uniform(-spread, spread, n_faces),
            rng.uniform(*depth_range, n_faces),
        ]
    )
    offsets = rng.uniform(-0.8, 0.8, (n_faces, 3, 3))
    verts = (centers[:, None, :] + offsets).reshape(-1, 3)
    faces = np.arange(n_faces * 3, dtype=np.int32).reshape(-1, 3)
    return TriangleMesh(verts, faces)
