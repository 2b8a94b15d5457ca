"""Geometry kernel backend selection.

The compiled core (Cython) is used when it has been built; otherwise
the pure-numpy fallback takes over transparently.  Set SPECLIGHT_PURE=1
to force the fallback (used by the backend-comparison benchmark).  Both
backends compute identical results; only speed differs.
"""

import os

if os.environ.get("SPECLIGHT_PURE", "0") not in ("", "0"):
    from speclight.kernels import _fallback as _impl

    BACKEND = "python"
else:
    try:
        from speclight.kernels import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        from speclight.kernels import _fallback as _impl

        BACKEND = "python"

rasterize_mesh = _impl.rasterize_mesh
raycast_nearest = _impl.raycast_nearest
segments_occluded = _impl.segments_occluded

__all__ = ["BACKEND", "rasterize_mesh", "raycast_nearest", "segments_occluded"]
