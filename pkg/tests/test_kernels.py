"""Backend equivalence: the compiled core must match the numpy fallback
bit for bit on rasterization, ray casting, and occlusion queries."""

import numpy as np
import pytest

from speclight.kernels import _fallback
from tests.conftest import random_triangle_soup

core = pytest.importorskip(
    "speclight.kernels._core", reason="compiled kernel core not built"
)


@pytest.mark.parametrize("seed", range(6))
def test_rasterize_identical(seed):
    rng = np.random.default_rng(seed)
    mesh = random_triangle_soup(rng, 30)
    args = (mesh.vertices, mesh.faces, 90.0, 95.0, 32.0, 31.0, 64, 64, 1e-4)
    f_py, d_py = _fallback.rasterize_mesh(*args)
    f_c, d_c = core.rasterize_mesh(*args)
    assert np.array_equal(f_py, f_c)
    assert np.array_equal(d_py, d_c)  # bitwise, including +inf background


def test_rasterize_identical_with_near_clipping():
    rng = np.random.default_rng(99)
    # Straddle the near plane: z in [-1, 3].
    mesh = random_triangle_soup(rng, 25, depth_range=(-1.0, 3.0))
    args = (mesh.vertices, mesh.faces, 80.0, 80.0, 32.0, 32.0, 64, 64, 1e-4)
    f_py, d_py = _fallback.rasterize_mesh(*args)
    f_c, d_c = core.rasterize_mesh(*args)
    assert np.array_equal(f_py, f_c)
    assert np.array_equal(d_py, d_c)


@pytest.mark.parametrize("seed", range(4))
def test_raycast_identical(seed):
    rng = np.random.default_rng(seed + 100)
    mesh = random_triangle_soup(rng, 40)
    dirs = rng.normal(size=(500, 3))
    dirs[:, 2] = np.abs(dirs[:, 2]) + 0.2
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    origin = np.zeros(3)
    f_py, t_py = _fallback.raycast_nearest(origin, dirs, mesh.vertices, mesh.faces, 1e-4)
    f_c, t_c = core.raycast_nearest(origin, dirs, mesh.vertices, mesh.faces, 1e-4)
    assert np.array_equal(f_py, f_c)
    assert np.array_equal(t_py, t_c)
    assert (f_py >= 0).any()


def test_occlusion_identical():
    rng = np.random.default_rng(7)
    mesh = random_triangle_soup(rng, 40)
    starts = rng.uniform(-2, 2, (300, 3)) + np.array([0, 0, 1.0])
    ends = rng.uniform(-2, 2, (300, 3)) + np.array([0, 0, 4.0])
    excl = rng.integers(-1, 40, 300).astype(np.int32)
    o_py = _fallback.segments_occluded(starts, ends, mesh.vertices, mesh.faces, excl, 1e-6)
    o_c = core.segments_occluded(starts, ends, mesh.vertices, mesh.faces, excl, 1e-6)
    assert np.array_equal(o_py, o_c)
    assert o_py.any() and not o_py.all()


def test_compiled_backend_is_faster():
    import time

    rng = np.random.default_rng(5)
    mesh = random_triangle_soup(rng, 120)
    args = (mesh.vertices, mesh.faces, 120.0, 120.0, 64.0, 64.0, 128, 128, 1e-4)

    t0 = time.perf_counter()
    core.rasterize_mesh(*args)
    t_core = time.perf_counter() - t0
    t0 = time.perf_counter()
    _fallback.rasterize_mesh(*args)
    t_py = time.perf_counter() - t0
    # Loose sanity bound; the observed gap is far larger.
    assert t_core < t_py
