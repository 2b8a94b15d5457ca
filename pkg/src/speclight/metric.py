"""Threshold-sweep IoU evaluation.

A prediction is scored against the 8-bit groundtruth specular map by
binarizing the groundtruth at every integer threshold of a range
(default 156..255, where specularities live), computing IoU at each
level, and averaging over the sweep.  The overall scene accuracy is the
mean of the per-view values.
"""

import csv
import io as _io
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ThresholdRange:
    """Inclusive integer sweep range on the 8-bit luminance scale."""

    lo: int = 156
    hi: int = 255

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi <= 255):
            raise ValueError("need 0 <= lo <= hi <= 255")

    def __len__(self):
        return self.hi - self.lo + 1


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two boolean masks.

    Two empty masks agree that nothing is specular, so empty/empty is
    defined as 1.0.
    """
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def view_accuracy(
    gt_specular: np.ndarray,
    predicted: np.ndarray,
    rng: ThresholdRange = ThresholdRange(),
    strict: bool = False,
) -> float:
    """Sweep-averaged IoU of one prediction against 8-bit groundtruth.

    For each integer T in the range the groundtruth is binarized as
    gt >= T (or gt > T with strict=True) and compared to the prediction
    by IoU; the sum is normalized by the number of thresholds.  The >=
    default keeps T=255 meaningful for saturated 8-bit groundtruth.

    The per-threshold intersections are computed from cumulative
    histograms, which is exact integer arithmetic and identical to the
    naive per-threshold sweep.
    """
    if gt_specular.shape != predicted.shape:
        raise ValueError(
            f"gt shape {gt_specular.shape} does not match prediction {predicted.shape}"
        )
    gt = np.ascontiguousarray(gt_specular, dtype=np.uint8)

    # ge_all[T] = #pixels with gt >= T; ge_pred restricts to predicted.
    hist_all = np.bincount(gt.ravel(), minlength=256)
    hist_pred = np.bincount(gt[predicted].ravel(), minlength=256)
    ge_all = np.concatenate([np.cumsum(hist_all[::-1])[::-1], [0]])
    ge_pred = np.concatenate([np.cumsum(hist_pred[::-1])[::-1], [0]])
    pred_size = int(predicted.sum())

    offset = 1 if strict else 0
    total = 0.0
    for t in range(rng.lo, rng.hi + 1):
        inter = int(ge_pred[t + offset])
        union = int(ge_all[t + offset]) + pred_size - inter
        total += 1.0 if union == 0 else inter / union
    return total / len(rng)


def scene_accuracy(per_view: Sequence[float]) -> float:
    """Arithmetic mean of per-view accuracies (the overall figure A_O)."""
    if len(per_view) == 0:
        raise ValueError("no per-view accuracies")
    return float(np.mean(per_view))


@dataclass
class EvalReport:
    """Per-view accuracies plus the overall mean, ready for CSV emission."""

    view_ids: list
    accuracies: list

    def __post_init__(self):
        if len(self.view_ids) != len(self.accuracies):
            raise ValueError("view id / accuracy length mismatch")

    @property
    def overall(self) -> float:
        return scene_accuracy(self.accuracies)

    @property
    def num_views(self) -> int:
        return len(self.view_ids)

    def summary(self) -> str:
        """Overall accuracy over view count, e.g. '0.5123/4'."""
        return f"{self.overall:.4f}/{self.num_views}"

    def to_csv(self) -> str:
        buf = _io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["view_id", "accuracy"])
        for vid, acc in zip(self.view_ids, self.accuracies):
            writer.writerow([vid, f"{acc:.12f}"])
        writer.writerow(["overall", f"{self.overall:.12f}"])
        return buf.getvalue()
