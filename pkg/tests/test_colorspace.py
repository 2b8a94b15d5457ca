import numpy as np
import pytest

from speclight.colorspace import (
    lab_l_from_y,
    linear_luminance,
    luminance_to_uint8,
    srgb_to_lab_luminance,
    srgb_to_linear,
)


def _pixel(r, g, b):
    return np.array([[[r, g, b]]], dtype=np.uint8)


def _reference_lab_l(r, g, b):
    """Independent scalar implementation of the CIE formulas."""
    ys = []
    for c in (r, g, b):
        c = c / 255.0
        ys.append(c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4)
    y = 0.2126 * ys[0] + 0.7152 * ys[1] + 0.0722 * ys[2]
    if y > 216.0 / 24389.0:
        f = y ** (1.0 / 3.0)
    else:
        f = (24389.0 / 27.0 * y + 16.0) / 116.0
    return 116.0 * f - 16.0


def test_white_is_100():
    assert srgb_to_lab_luminance(_pixel(255, 255, 255))[0, 0] == pytest.approx(100.0, abs=1e-3)


def test_black_is_0():
    assert srgb_to_lab_luminance(_pixel(0, 0, 0))[0, 0] == 0.0


def test_mid_gray_near_50():
    assert srgb_to_lab_luminance(_pixel(119, 119, 119))[0, 0] == pytest.approx(50.0, abs=0.5)


def test_matches_reference_formulas():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    lab = srgb_to_lab_luminance(img)
    for i in range(5):
        for j in range(7):
            expected = _reference_lab_l(*(int(v) for v in img[i, j]))
            assert lab[i, j] == pytest.approx(expected, abs=1e-9)


def test_gray_ramp_monotonic():
    ramp = np.arange(256, dtype=np.uint8)
    img = np.stack([ramp, ramp, ramp], axis=-1)[None, :, :]
    lab = srgb_to_lab_luminance(img)[0]
    assert (np.diff(lab) > 0).all()
    assert lab.min() >= 0.0 and lab.max() <= 100.0


def test_rejects_non_rgb():
    with pytest.raises(ValueError):
        srgb_to_lab_luminance(np.zeros((4, 4), dtype=np.uint8))


def test_srgb_decode_piecewise_boundary():
    # 0.04045 * 255 = 10.31; both branches exercised around channel 10/11.
    lin = srgb_to_linear(np.array([10.0, 11.0]))
    assert lin[0] == pytest.approx((10 / 255) / 12.92)
    assert lin[1] == pytest.approx(((11 / 255 + 0.055) / 1.055) ** 2.4)


class TestLuminanceToUint8:
    def test_endpoints(self):
        arr = np.array([[0.0, 100.0]])
        assert luminance_to_uint8(arr).tolist() == [[0, 255]]

    def test_derived_156(self):
        assert luminance_to_uint8(np.array([61.2]))[0] == 156

    def test_round_half_up(self):
        # 30 * 2.55 = 76.5 rounds up, unlike banker's rounding.
        assert luminance_to_uint8(np.array([30.0]))[0] == 77

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        img = rng.uniform(0, 100, (32, 32))
        a = luminance_to_uint8(img)
        b = luminance_to_uint8(img.copy())
        assert np.array_equal(a, b)

    def test_range(self):
        rng = np.random.default_rng(1)
        out = luminance_to_uint8(rng.uniform(0, 100, 1000))
        assert out.min() >= 0 and out.max() <= 255


def test_linear_luminance_weights_sum_to_one():
    assert linear_luminance(np.ones(3)) == pytest.approx(1.0, abs=1e-12)


def test_lab_l_linear_segment():
    # Below the CIE cube-root cutoff the curve is linear in Y.
    y = np.array([0.0, 0.004, 0.008])
    l = lab_l_from_y(y)
    assert l[0] == 0.0
    assert np.allclose(np.diff(l), np.diff(l)[0])
