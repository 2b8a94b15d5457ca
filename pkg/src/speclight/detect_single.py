"""Per-view specular candidate masks.

This stage seeds the multi-view filter and is deliberately pluggable:
the cross-view machinery is designed to tolerate imperfect masks (bright
diffuse surfaces are pruned later), so the default here is a plain
luminance hysteresis detector rather than any particular published
single-image method.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from speclight.colorspace import luminance_to_uint8

# 8-connectivity for hysteresis growth.
_STRUCT8 = np.ones((3, 3), dtype=bool)


@dataclass
class SingleViewConfig:
    """Configuration for the single-view detector.

    method "two-threshold" (default): seed at >= high, hysteresis-grow
    into 8-connected pixels >= low.  method "percentile": keep pixels
    strictly brighter than the given luminance quantile.
    """

    method: str = "two-threshold"
    high: int = 220
    low: int = 180
    percentile: float = 0.98

    def __post_init__(self):
        if self.method not in ("two-threshold", "percentile"):
            raise ValueError(f"unknown method {self.method!r}")
        if not (0 <= self.low <= self.high <= 255):
            raise ValueError("need 0 <= low <= high <= 255")
        if not (0.0 < self.percentile < 1.0):
            raise ValueError("percentile must be in (0, 1)")


def hysteresis_grow(seeds: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    """Union of 8-connected components of `allowed` that contain a seed."""
    labels, count = ndimage.label(allowed, structure=_STRUCT8)
    if count == 0:
        return np.zeros_like(allowed)
    keep = np.zeros(count + 1, dtype=bool)
    keep[np.unique(labels[seeds & allowed])] = True
    keep[0] = False
    return keep[labels]


def detect_single_view(img: np.ndarray, cfg: SingleViewConfig = None) -> np.ndarray:
    """Binary specular candidate mask for one luminance image.

    img: (h, w) float64 L* in [0, 100].  Returns bool (h, w).  Pure
    function of (image, config).
    """
    if cfg is None:
        cfg = SingleViewConfig()
    u8 = luminance_to_uint8(img)
    if cfg.method == "percentile":
        return u8 > np.quantile(u8, cfg.percentile)
    seeds = u8 >= cfg.high
    if not seeds.any():
        return np.zeros(u8.shape, dtype=bool)
    return hysteresis_grow(seeds, u8 >= cfg.low)
