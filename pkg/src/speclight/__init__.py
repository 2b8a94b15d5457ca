"""Face-based multi-view specular highlight detection."""

__version__ = "0.1.0"

from speclight.colorspace import luminance_to_uint8, srgb_to_lab_luminance
from speclight.detect_multi import (
    AggregationConfig,
    FaceLabeling,
    SpecularVerdict,
    classify_faces,
    cross_view_filter,
    render_verdict_mask,
    specular_threshold,
    trimmed_mean,
)
from speclight.detect_single import SingleViewConfig, detect_single_view
from speclight.geometry import (
    CameraView,
    FaceProjectionTable,
    TriangleMesh,
    face_mean_luminance,
    project_vertex,
    rasterize_faces,
)
from speclight.metric import EvalReport, ThresholdRange, iou, scene_accuracy, view_accuracy
from speclight.synth import RenderBundle, SyntheticScene, build_scene, render_direct

__all__ = [
    "AggregationConfig",
    "CameraView",
    "EvalReport",
    "FaceLabeling",
    "FaceProjectionTable",
    "RenderBundle",
    "SingleViewConfig",
    "SpecularVerdict",
    "SyntheticScene",
    "ThresholdRange",
    "TriangleMesh",
    "build_scene",
    "classify_faces",
    "cross_view_filter",
    "detect_single_view",
    "face_mean_luminance",
    "iou",
    "luminance_to_uint8",
    "project_vertex",
    "rasterize_faces",
    "render_direct",
    "render_verdict_mask",
    "scene_accuracy",
    "specular_threshold",
    "srgb_to_lab_luminance",
    "trimmed_mean",
    "view_accuracy",
]
