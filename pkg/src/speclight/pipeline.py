"""End-to-end detection pipeline over a scene directory.

Wires the stages together: load views -> luminance -> single-view masks
-> face projection tables -> per-view labelings -> cross-view filter ->
per-view predicted masks.  Per-view stages can fan out over a process
pool; the cross-view pass itself is cheap (it only sees per-face
statistics).
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from speclight import io as sio
from speclight.colorspace import srgb_to_lab_luminance
from speclight.detect_multi import (
    AggregationConfig,
    FaceLabeling,
    classify_faces,
    cross_view_filter,
    render_verdict_mask,
)
from speclight.detect_single import SingleViewConfig, detect_single_view
from speclight.geometry import FaceProjectionTable, TriangleMesh, rasterize_faces

logger = logging.getLogger(__name__)


@dataclass
class ViewData:
    """Everything the filter needs from one view."""

    view_id: str
    luminance: np.ndarray
    single_mask: np.ndarray
    table: FaceProjectionTable
    labeling: FaceLabeling


@dataclass
class DetectionResult:
    views: List[ViewData]
    verdicts: dict                  # view_id -> SpecularVerdict
    masks: dict                     # view_id -> bool (h, w) predicted mask
    degenerate: bool = False

    def provenance(self) -> dict:
        """JSON-ready record of every exclusion and skipped pair."""
        out = {}
        for vid, verdict in sorted(self.verdicts.items()):
            out[vid] = {
                "surviving_faces": [int(f) for f in verdict.surviving_faces],
                "excluded": sorted(
                    (
                        {
                            "face": e.face,
                            "other_view": e.other_view,
                            "threshold": e.threshold,
                            "difference": e.difference,
                        }
                        for e in verdict.exclusions
                    ),
                    key=lambda d: (d["face"], d["other_view"]),
                ),
                "skipped_pairs": sorted(p[1] for p in verdict.skipped_pairs),
                "degenerate": verdict.degenerate,
            }
        return out


def _prepare_view(args):
    mesh, cam, image, sv_cfg, agg_cfg = args
    lum = srgb_to_lab_luminance(image)
    table = rasterize_faces(mesh, cam)
    mask = detect_single_view(lum, sv_cfg)
    labeling = classify_faces(mask, table, lum, agg_cfg)
    return ViewData(cam.view_id, lum, mask, table, labeling)


def run_detection(
    mesh: TriangleMesh,
    cameras,
    images,
    sv_cfg: Optional[SingleViewConfig] = None,
    agg_cfg: Optional[AggregationConfig] = None,
    workers: int = 1,
) -> DetectionResult:
    """Run the full multi-view pipeline on in-memory views."""
    sv_cfg = sv_cfg or SingleViewConfig()
    agg_cfg = agg_cfg or AggregationConfig()
    jobs = [(mesh, cam, img, sv_cfg, agg_cfg) for cam, img in zip(cameras, images)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            views = list(pool.map(_prepare_view, jobs))
    else:
        views = [_prepare_view(j) for j in jobs]

    degenerate = len(views) < 2
    if degenerate:
        logger.warning("fewer than 2 views: cross-view filtering degenerates "
                       "to the single-view labeling")
    verdicts = cross_view_filter([v.labeling for v in views], agg_cfg)
    masks = {
        v.view_id: render_verdict_mask(verdicts[v.view_id], v.table) for v in views
    }
    return DetectionResult(views, verdicts, masks, degenerate)


def load_views(manifest: sio.SceneManifest):
    """Read images and cameras for every view of a manifest."""
    cameras = []
    images = []
    for entry in manifest.views:
        img = sio.load_rgb_png(entry.image_path)
        h, w = img.shape[:2]
        cameras.append(sio.load_camera(entry.camera_path, w, h, view_id=entry.view_id))
        images.append(img)
    return cameras, images


def run_detection_on_scene(
    root,
    sv_cfg: Optional[SingleViewConfig] = None,
    agg_cfg: Optional[AggregationConfig] = None,
    workers: int = 1,
):
    """Load a scene directory and run detection; returns (manifest, result)."""
    manifest = sio.load_scene(root)
    mesh = sio.load_ply(manifest.mesh_path)
    cameras, images = load_views(manifest)
    result = run_detection(mesh, cameras, images, sv_cfg, agg_cfg, workers)
    return manifest, result
