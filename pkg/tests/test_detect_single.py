import numpy as np
import pytest

from speclight.detect_single import SingleViewConfig, detect_single_view, hysteresis_grow


def lum(u8_values):
    """Build an L* image whose 8-bit scaling equals the given values."""
    return np.asarray(u8_values, dtype=np.float64) / 2.55


def test_constant_dark_image_all_false():
    mask = detect_single_view(np.zeros((8, 8)))
    assert not mask.any()


def test_constant_bright_image_all_true():
    mask = detect_single_view(np.full((8, 8), 100.0), SingleViewConfig(high=200, low=180))
    assert mask.all()


def test_hysteresis_hand_trace():
    # One seed at 255 with a 180 neighbor; high=200, low=170: exactly
    # the seed and its neighbor turn true.
    img = np.zeros((5, 5))
    vals = np.zeros((5, 5))
    vals[2, 2] = 255
    vals[2, 3] = 180
    vals[0, 0] = 175  # above low but disconnected from any seed
    img = lum(vals)
    mask = detect_single_view(img, SingleViewConfig(high=200, low=170))
    expected = np.zeros((5, 5), dtype=bool)
    expected[2, 2] = expected[2, 3] = True
    assert np.array_equal(mask, expected)


def test_diagonal_growth_is_8_connected():
    vals = np.zeros((4, 4))
    vals[0, 0] = 255
    vals[1, 1] = 190
    mask = detect_single_view(lum(vals), SingleViewConfig(high=250, low=180))
    assert mask[0, 0] and mask[1, 1]
    assert mask.sum() == 2


def test_monotonic_in_high_threshold():
    rng = np.random.default_rng(8)
    img = rng.uniform(0, 100, (32, 32))
    previous = None
    for high in (180, 200, 220, 240):
        mask = detect_single_view(img, SingleViewConfig(high=high, low=170))
        if previous is not None:
            assert not (mask & ~previous).any()  # raising high never adds pixels
        previous = mask


def test_hysteresis_idempotent():
    rng = np.random.default_rng(9)
    img = rng.uniform(0, 100, (32, 32))
    cfg = SingleViewConfig(high=210, low=170)
    mask = detect_single_view(img, cfg)
    from speclight.colorspace import luminance_to_uint8

    allowed = luminance_to_uint8(img) >= cfg.low
    again = hysteresis_grow(mask, allowed)
    assert np.array_equal(mask, again)


def test_pure_function_of_inputs():
    rng = np.random.default_rng(10)
    img = rng.uniform(0, 100, (16, 16))
    cfg = SingleViewConfig()
    assert np.array_equal(detect_single_view(img, cfg), detect_single_view(img.copy(), cfg))


def test_percentile_method():
    img = lum(np.arange(100).reshape(10, 10) * 2)
    mask = detect_single_view(img, SingleViewConfig(method="percentile", percentile=0.9))
    # Strictly above the 90th percentile of the 8-bit image.
    assert 0 < mask.sum() <= 10


def test_percentile_constant_image_all_false():
    mask = detect_single_view(np.full((6, 6), 50.0),
                              SingleViewConfig(method="percentile", percentile=0.5))
    assert not mask.any()


class TestConfigValidation:
    def test_rejects_bad_method(self):
        with pytest.raises(ValueError):
            SingleViewConfig(method="otsu")

    def test_rejects_low_above_high(self):
        with pytest.raises(ValueError):
            SingleViewConfig(high=100, low=150)

    def test_rejects_percentile_out_of_range(self):
        with pytest.raises(ValueError):
            SingleViewConfig(percentile=1.0)
