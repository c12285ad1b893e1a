"""ROI training samples: tiled positives from ground truth, IoU=0 negatives.

Positives: each ground-truth box is cropped and split along its longer
axis into k = max(1, round(longer/shorter)) near-square tiles, each resized
to the classifier input size (227x227 by default). Negatives: MSER proposal
boxes that do not overlap any ground-truth box at all (IoU exactly 0),
sampled without replacement under a seed and pushed through the same crop,
tile, and resize treatment.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .geometry import BBox, iou, round_half_up
from .mser import MserParams, proposals
from .raster import Raster, crop, resize
from .seeding import hash_key

logger = logging.getLogger(__name__)

LABEL_POSITIVE = "marginalia"
LABEL_NEGATIVE = "non_marginalia"
DEFAULT_ROI_SIZE = 227
DEFAULT_N_NEGATIVES = 4


@dataclass
class RoiSample:
    page_id: str
    label: str
    source_box: BBox
    tile_index: int
    image: Raster

    @property
    def sample_id(self) -> str:
        b = self.source_box
        return (f"{self.page_id}__{self.label}__{b.x}_{b.y}_{b.w}_{b.h}"
                f"__t{self.tile_index}")


@dataclass(frozen=True)
class ShortfallWarning:
    """Fewer IoU=0 negatives available than requested on one page."""

    page_id: str
    requested: int
    available: int

    def as_record(self) -> dict:
        return {"page_id": self.page_id, "requested": self.requested,
                "available": self.available}


def tile_count(box: BBox) -> int:
    """Number of tiles for a box: max(1, round(longer/shorter))."""
    longer = max(box.w, box.h)
    shorter = min(box.w, box.h)
    return max(1, round_half_up(longer / shorter))


def tile_boxes(box: BBox) -> list[BBox]:
    """Split a box into its tiles along the longer axis.

    Tiles are ``side // k`` long; the last tile absorbs any remainder, so
    the tiles exactly cover the box without overlap.
    """
    k = tile_count(box)
    if k == 1:
        return [box]
    if box.w >= box.h:
        base = box.w // k
        return [BBox(box.x + i * base, box.y,
                     base if i < k - 1 else box.w - (k - 1) * base, box.h)
                for i in range(k)]
    base = box.h // k
    return [BBox(box.x, box.y + i * base, box.w,
                 base if i < k - 1 else box.h - (k - 1) * base)
            for i in range(k)]


def _rois_from_box(page: Raster, page_id: str, box: BBox, label: str,
                   roi_size: int) -> list[RoiSample]:
    return [RoiSample(page_id=page_id, label=label, source_box=box,
                      tile_index=i,
                      image=resize(crop(page, tile), roi_size, roi_size))
            for i, tile in enumerate(tile_boxes(box))]


def positive_rois(page: Raster, gt: list[BBox], page_id: str = "",
                  roi_size: int = DEFAULT_ROI_SIZE) -> list[RoiSample]:
    """Marginalia ROIs: every ground-truth box, tiled and resized."""
    out: list[RoiSample] = []
    for box in gt:
        out.extend(_rois_from_box(page, page_id, box, LABEL_POSITIVE, roi_size))
    return out


def negative_rois(page: Raster, gt: list[BBox], candidates: list[BBox],
                  n: int, seed: int, page_id: str = "",
                  roi_size: int = DEFAULT_ROI_SIZE,
                  ) -> tuple[list[RoiSample], ShortfallWarning | None]:
    """Non-marginalia ROIs from proposal boxes disjoint from all ground truth.

    Only candidates with IoU exactly 0 against every ground-truth box
    qualify. ``n`` of them are picked by a keyed-hash order under ``seed``
    (a deterministic uniform draw without replacement); if fewer than ``n``
    qualify, all of them are returned along with a shortfall warning.
    """
    eligible = [(i, c) for i, c in enumerate(candidates)
                if all(iou(c, g) == 0.0 for g in gt)]
    eligible.sort(key=lambda ic: hash_key(seed, ic[0], *ic[1].as_list()))
    chosen = [c for _, c in eligible[:n]]
    warning = None
    if len(chosen) < n:
        warning = ShortfallWarning(page_id=page_id, requested=n,
                                   available=len(chosen))
        logger.warning("page %s: only %d of %d IoU=0 negatives available",
                       page_id, len(chosen), n)
    out: list[RoiSample] = []
    for box in chosen:
        out.extend(_rois_from_box(page, page_id, box, LABEL_NEGATIVE, roi_size))
    return out, warning


def build_training_set(pages, mser_params: MserParams | None = None,
                       seed: int = 0, n_negatives: int = DEFAULT_N_NEGATIVES,
                       roi_size: int = DEFAULT_ROI_SIZE,
                       ) -> tuple[list[RoiSample], list[ShortfallWarning]]:
    """Generate the full ROI corpus for ``pages``.

    ``pages`` yields ``(page_id, image, gt_boxes)`` triples, typically the
    augmented training split. Returns all samples plus any per-page
    negative shortfall warnings; sample output is deterministic for fixed
    inputs and seed.
    """
    mser_params = mser_params or MserParams()
    samples: list[RoiSample] = []
    warnings: list[ShortfallWarning] = []
    for page_id, image, gt in pages:
        samples.extend(positive_rois(image, gt, page_id=page_id,
                                     roi_size=roi_size))
        candidates = proposals(image, mser_params)
        negs, warning = negative_rois(image, gt, candidates, n_negatives,
                                      seed, page_id=page_id, roi_size=roi_size)
        samples.extend(negs)
        if warning is not None:
            warnings.append(warning)
    return samples, warnings
