"""sRGB to CIELAB luminance conversion.

Everything downstream works on the L* channel: detection thresholds,
face statistics, and the evaluation sweep all consume either L* in
[0, 100] or its 8-bit scaling in [0, 255].
"""

import numpy as np

# Rec. 709 / IEC 61966-2-1 luminance weights for linear RGB under D65.
# These rounded coefficients sum to exactly 1.0, so pure white maps to
# L* = 100 without a correction term.
_LUMA_R = 0.2126
_LUMA_G = 0.7152
_LUMA_B = 0.0722

# CIE L* segment boundary: (6/29)**3 and the linear-segment slope term.
_CIE_EPS = 216.0 / 24389.0
_CIE_KAPPA = 24389.0 / 27.0


def srgb_to_linear(channel: np.ndarray) -> np.ndarray:
    """Decode 8-bit sRGB channel values to linear light in [0, 1].

    Uses the exact piecewise IEC 61966-2-1 curve, not the 2.2-gamma
    approximation.
    """
    c = channel.astype(np.float64) / 255.0
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def srgb_to_lab_luminance(img: np.ndarray) -> np.ndarray:
    """Convert an (h, w, 3) uint8 sRGB image to its CIELAB L* channel.

    Returns an (h, w) float64 array with values in [0, 100].  The white
    point is D65 (the sRGB standard illuminant), so Y_n == 1 for linear
    white and no normalization is needed beyond the luma weights.
    """
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB image, got shape {img.shape}")
    lin = srgb_to_linear(img)
    y = _LUMA_R * lin[..., 0] + _LUMA_G * lin[..., 1] + _LUMA_B * lin[..., 2]
    return lab_l_from_y(y)


def linear_luminance(rgb: np.ndarray) -> np.ndarray:
    """Relative luminance Y of linear RGB values (last axis = channels)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    return _LUMA_R * rgb[..., 0] + _LUMA_G * rgb[..., 1] + _LUMA_B * rgb[..., 2]


def lab_l_from_y(y: np.ndarray) -> np.ndarray:
    """CIE L* from relative luminance Y (Y_n = 1)."""
    y = np.asarray(y, dtype=np.float64)
    f = np.where(y > _CIE_EPS, np.cbrt(y), (_CIE_KAPPA * y + 16.0) / 116.0)
    return 116.0 * f - 16.0


def luminance_to_uint8(img: np.ndarray) -> np.ndarray:
    """Scale L* in [0, 100] linearly onto [0, 255] with round-half-up.

    The evaluation sweep thresholds are integers up to 255, so the
    metric operates on this 8-bit scaling.  value = round(L* * 255/100),
    half-up, clamped to [0, 255].
    """
    scaled = np.floor(np.asarray(img, dtype=np.float64) * 2.55 + 0.5)
    return np.clip(scaled, 0, 255).astype(np.uint8)
