"""Face-based cross-view specular filtering.

The multi-view core: faces are classified per view from the single-view
mask (specular-potential set S vs diffuse set D), then every view pair
contributes an exclusion pass.  A specular-potential face survives a
pair only when it is markedly brighter in the reference view than in
the partner view; diffuse surfaces are view-independent in luminance,
so they fail the margin and get pruned.  The margin is derived per pair
from trimmed means of the common faces' luminances, sharpened by phi.

All statistics work on per-face mean L*, so the cross-view pass costs
O(pairs x faces) regardless of image resolution.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from speclight.geometry import FaceProjectionTable, face_mean_luminances


@dataclass
class AggregationConfig:
    """Knobs of the cross-view filter.

    phi: sharpness constant weighting the specular mean in the pairwise
    threshold (default 0.5).  trim_fraction: fraction trimmed from each
    tail before the means (default 0.1).  mask_majority: fraction of a
    face's pixels that must be masked for it to enter S (strict >,
    default 0.5).
    """

    phi: float = 0.5
    trim_fraction: float = 0.1
    mask_majority: float = 0.5

    def __post_init__(self):
        if self.phi < 0:
            raise ValueError("phi must be >= 0")
        if not (0.0 <= self.trim_fraction < 0.5):
            raise ValueError("trim_fraction must be in [0, 0.5)")
        if not (0.0 < self.mask_majority <= 1.0):
            raise ValueError("mask_majority must be in (0, 1]")


@dataclass
class FaceLabeling:
    """Per-view split of visible faces into specular-potential and diffuse.

    specular/visible are bool arrays over all mesh faces; the diffuse
    set is visible & ~specular.  mean_luminance is NaN for invisible
    faces.
    """

    view_id: str
    specular: np.ndarray
    visible: np.ndarray
    mean_luminance: np.ndarray

    @property
    def diffuse(self) -> np.ndarray:
        return self.visible & ~self.specular

    @property
    def specular_faces(self) -> np.ndarray:
        return np.nonzero(self.specular)[0]

    @property
    def diffuse_faces(self) -> np.ndarray:
        return np.nonzero(self.diffuse)[0]


@dataclass
class Exclusion:
    """One face removed from a view's specular set: which pair, what margin."""

    face: int
    view: str
    other_view: str
    threshold: float
    difference: float


@dataclass
class SpecularVerdict:
    """Surviving specular faces of one view after all pairwise passes."""

    view_id: str
    surviving: np.ndarray
    exclusions: list = field(default_factory=list)
    skipped_pairs: list = field(default_factory=list)
    degenerate: bool = False

    @property
    def surviving_faces(self) -> np.ndarray:
        return np.nonzero(self.surviving)[0]


def classify_faces(
    mask: np.ndarray,
    table: FaceProjectionTable,
    img: np.ndarray,
    cfg: Optional[AggregationConfig] = None,
) -> FaceLabeling:
    """Split visible faces into S and D by masked-pixel majority.

    A face with pixel set of size l joins S iff (# masked pixels) / l
    strictly exceeds cfg.mask_majority.  Mean luminance is recorded for
    every visible face.
    """
    if cfg is None:
        cfg = AggregationConfig()
    if mask.shape != table.face_buffer.shape:
        raise ValueError(
            f"mask shape {mask.shape} does not match table {table.face_buffer.shape}"
        )
    mean_lum = face_mean_luminances(table, img)

    covered = table.face_buffer >= 0
    masked_counts = np.bincount(
        table.face_buffer[covered & mask], minlength=table.num_faces
    )
    visible = table.visible
    specular = visible & (masked_counts > cfg.mask_majority * table.pixel_counts)
    return FaceLabeling(table.view_id, specular, visible, mean_lum)


def trimmed_mean(values, trim_fraction: float) -> float:
    """Mean after dropping floor(trim_fraction * n) items from each tail.

    Falls back to the plain mean if trimming would drop everything.
    """
    values = np.sort(np.asarray(values, dtype=np.float64))
    n = values.size
    if n == 0:
        raise ValueError("trimmed_mean of an empty list")
    k = int(np.floor(trim_fraction * n))
    if 2 * k >= n:
        return float(values.mean())
    return float(values[k:n - k].mean())


def specular_threshold(
    s_values, d_values, cfg: Optional[AggregationConfig] = None
) -> float:
    """Pairwise exclusion threshold t = mu(d) + phi * mu(s)."""
    if cfg is None:
        cfg = AggregationConfig()
    return trimmed_mean(d_values, cfg.trim_fraction) + cfg.phi * trimmed_mean(
        s_values, cfg.trim_fraction
    )


def cross_view_filter(
    labelings: Sequence[FaceLabeling],
    cfg: Optional[AggregationConfig] = None,
) -> dict:
    """Prune each view's specular-potential set against all other views.

    For reference view i and partner j, the threshold is built from
    faces visible in both views, labeled by view i, with each face
    contributing the average of its two per-view mean luminances.  A
    face in S_i survives the pair iff it is invisible in j (no second
    observation, so no evidence) or its luminance drop i -> j is at
    least t.  Surviving = conjunction over all pairs, so the iteration
    order of j cannot change the outcome.  Pairs whose common faces
    lack either label are skipped and reported, not failed.

    Returns {view_id: SpecularVerdict}.
    """
    if cfg is None:
        cfg = AggregationConfig()
    if len(labelings) == 0:
        raise ValueError("no views")
    ids = [lab.view_id for lab in labelings]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate view ids")

    verdicts = {}
    if len(labelings) == 1:
        lab = labelings[0]
        verdicts[lab.view_id] = SpecularVerdict(
            lab.view_id, lab.specular.copy(), degenerate=True
        )
        return verdicts

    for i, lab_i in enumerate(labelings):
        surviving = lab_i.specular.copy()
        exclusions = []
        skipped = []
        for j, lab_j in enumerate(labelings):
            if j == i:
                continue
            common = lab_i.visible & lab_j.visible
            s_sel = common & lab_i.specular
            d_sel = common & lab_i.diffuse
            if not s_sel.any() or not d_sel.any():
                skipped.append((lab_i.view_id, lab_j.view_id))
                continue
            pair_vals = (lab_i.mean_luminance + lab_j.mean_luminance) / 2.0
            t = specular_threshold(pair_vals[s_sel], pair_vals[d_sel], cfg)

            diff = lab_i.mean_luminance - lab_j.mean_luminance
            fails = lab_i.specular & lab_j.visible & (diff < t)
            for z in np.nonzero(fails)[0]:
                exclusions.append(
                    Exclusion(int(z), lab_i.view_id, lab_j.view_id, t, float(diff[z]))
                )
            surviving &= ~fails
        verdicts[lab_i.view_id] = SpecularVerdict(
            lab_i.view_id, surviving, exclusions, skipped
        )
    return verdicts


def render_verdict_mask(
    verdict: SpecularVerdict, table: FaceProjectionTable
) -> np.ndarray:
    """Rasterize a verdict back to pixels: true iff the owning face survived."""
    lookup = np.zeros(table.num_faces + 1, dtype=bool)
    lookup[: table.num_faces][verdict.surviving] = True
    # Background pixels carry face id -1 and land on the trailing False.
    return lookup[table.face_buffer]
