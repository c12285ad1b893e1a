"""Scoring detections against ground truth: matching, mean IoU, accuracy.

Matching is greedy one-to-one by descending IoU above a threshold. Mean
IoU is reported two ways, because a corpus-level figure can either average
matched pairs only or charge a zero for every unmatched box: "penalized"
(default, unmatched ground truth and predictions count as 0) and
"matched_only". Detections arrive through a line-delimited JSON bridge so
any external detector can be scored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import PageAnnotation
from .geometry import BBox, iou
from .jsonl import ManifestError, read_jsonl, write_jsonl
from .raster import Raster

DEFAULT_IOU_THRESHOLD = 0.5

GT_COLOR = (0, 200, 0)
PRED_COLOR = (220, 0, 0)


@dataclass(frozen=True)
class Detection:
    page_id: str
    box: BBox
    score: float
    label: str = "marginalia"

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class MatchPair:
    pred_index: int
    gt_index: int
    iou: float


@dataclass
class PageEval:
    page_id: str
    pairs: list[MatchPair]
    n_pred: int
    n_gt: int


@dataclass
class EvalReport:
    per_page: list[PageEval]
    iou_threshold: float
    mean_iou_penalized: float | None
    mean_iou_matched_only: float | None
    precision: float | None
    recall: float | None
    true_positives: int
    false_positives: int
    false_negatives: int
    diagnostics: list[str] = field(default_factory=list)

    def matched_ious(self) -> list[float]:
        return [p.iou for page in self.per_page for p in page.pairs]


def match_detections(preds: list[Detection], gt: list[BBox],
                     iou_threshold: float = DEFAULT_IOU_THRESHOLD,
                     ) -> list[MatchPair]:
    """Greedy one-to-one matching by descending IoU.

    Candidate pairs at or above the threshold are sorted by IoU (ties by
    prediction index, then ground-truth index) and accepted whenever both
    members are still free.
    """
    candidates = []
    for pi, pred in enumerate(preds):
        for gi, gt_box in enumerate(gt):
            overlap = iou(pred.box, gt_box)
            if overlap >= iou_threshold:
                candidates.append((-overlap, pi, gi))
    candidates.sort()
    used_pred: set[int] = set()
    used_gt: set[int] = set()
    pairs: list[MatchPair] = []
    for neg_overlap, pi, gi in candidates:
        if pi in used_pred or gi in used_gt:
            continue
        used_pred.add(pi)
        used_gt.add(gi)
        pairs.append(MatchPair(pred_index=pi, gt_index=gi, iou=-neg_overlap))
    return pairs


def mean_iou(per_page: list[PageEval], mode: str = "penalized") -> float | None:
    """Corpus mean IoU over matched pairs.

    "penalized": unmatched ground-truth boxes and unmatched predictions
    each contribute a 0 to the average. "matched_only": they are excluded.
    None when the relevant denominator is empty (no ground truth anywhere,
    or no matches in matched_only mode).
    """
    if mode not in ("penalized", "matched_only"):
        raise ValueError(f"unknown mean-IoU mode {mode!r}")
    total_gt = sum(p.n_gt for p in per_page)
    if total_gt == 0:
        return None
    ious = [pair.iou for page in per_page for pair in page.pairs]
    if mode == "matched_only":
        if not ious:
            return None
        return sum(ious) / len(ious)
    matched = len(ious)
    unmatched = sum(p.n_gt - len(p.pairs) for p in per_page) \
        + sum(p.n_pred - len(p.pairs) for p in per_page)
    return sum(ious) / (matched + unmatched)


def classification_accuracy(predicted_labels: list[str],
                            true_labels: list[str]) -> float:
    """Fraction of exactly matching labels; undefined for empty input."""
    if len(predicted_labels) != len(true_labels):
        raise ValueError(
            f"label list lengths differ: {len(predicted_labels)} vs {len(true_labels)}")
    if not predicted_labels:
        raise ValueError("accuracy is undefined for empty label lists")
    hits = sum(p == t for p, t in zip(predicted_labels, true_labels))
    return hits / len(predicted_labels)


def evaluate_detections(pages: list[PageAnnotation],
                        detections: list[Detection],
                        iou_threshold: float = DEFAULT_IOU_THRESHOLD,
                        ) -> EvalReport:
    """Match detections to ground truth page by page and aggregate."""
    by_page: dict[str, list[Detection]] = {}
    for det in detections:
        by_page.setdefault(det.page_id, []).append(det)
    known = {p.page_id for p in pages}
    unknown = sorted(set(by_page) - known)
    if unknown:
        raise ManifestError(
            f"detections reference unknown page_id(s): {', '.join(unknown)}")

    per_page = []
    tp = fp = fn = 0
    for page in pages:
        preds = by_page.get(page.page_id, [])
        pairs = match_detections(preds, page.marginalia, iou_threshold)
        per_page.append(PageEval(page_id=page.page_id, pairs=pairs,
                                 n_pred=len(preds), n_gt=len(page.marginalia)))
        tp += len(pairs)
        fp += len(preds) - len(pairs)
        fn += len(page.marginalia) - len(pairs)

    diagnostics = []
    penalized = mean_iou(per_page, "penalized")
    matched_only = mean_iou(per_page, "matched_only")
    if penalized is None:
        diagnostics.append("mean IoU undefined: corpus has no ground-truth boxes")
    elif matched_only is None:
        diagnostics.append("matched-only mean IoU undefined: no matched pairs")
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    return EvalReport(per_page=per_page, iou_threshold=iou_threshold,
                      mean_iou_penalized=penalized,
                      mean_iou_matched_only=matched_only,
                      precision=precision, recall=recall,
                      true_positives=tp, false_positives=fp,
                      false_negatives=fn, diagnostics=diagnostics)


def export_detections(detections: list[Detection], path,
                      header: dict | None = None) -> None:
    write_jsonl(path, ({"page_id": d.page_id, "box": d.box.as_list(),
                        "score": d.score} for d in detections), header=header)


def import_detections(path, pages: list[PageAnnotation]) -> list[Detection]:
    """Read and validate a detections file against the corpus.

    Every record must name a known page, carry an in-bounds box, and a
    score in [0, 1]; offending lines are all reported with their numbers.
    """
    header, records = read_jsonl(path)
    del header
    sizes = {p.page_id: (p.width, p.height) for p in pages}
    detections = []
    errors = []
    for i, record in enumerate(records, start=1):
        where = f"record {i}"
        missing = [k for k in ("page_id", "box", "score") if k not in record]
        if missing:
            errors.append(f"{where}: missing required key: {missing[0]}")
            continue
        page_id = str(record["page_id"])
        if page_id not in sizes:
            errors.append(f"{where}: unknown page_id {page_id!r}")
            continue
        try:
            box = BBox.from_list(record["box"])
        except (ValueError, TypeError) as exc:
            errors.append(f"{where}: bad box: {exc}")
            continue
        w, h = sizes[page_id]
        if not box.within_image(w, h):
            errors.append(f"{where}: box {box.as_list()} outside page "
                          f"{page_id!r} ({w}x{h})")
            continue
        score = float(record["score"])
        if not 0.0 <= score <= 1.0:
            errors.append(f"{where}: score {score} outside [0, 1]")
            continue
        detections.append(Detection(page_id=page_id, box=box, score=score))
    if errors:
        raise ManifestError(f"{len(errors)} bad detection line(s) in {path}", errors)
    return detections


def _stroke_mask(shape: tuple[int, int], box: BBox, width: int = 2) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    mask[box.y:box.y2, box.x:box.x2] = True
    if box.w > 2 * width and box.h > 2 * width:
        mask[box.y + width:box.y2 - width, box.x + width:box.x2 - width] = False
    return mask


def render_overlay(page: Raster, gt: list[BBox], preds: list[BBox]) -> np.ndarray:
    """RGB page image with ground truth in green and predictions in red.

    Strokes are 2 px wide, drawn just inside each box; predictions are
    drawn after ground truth and therefore on top where they overlap.
    """
    rgb = np.stack([page] * 3, axis=-1).astype(np.uint8)
    for boxes, color in ((gt, GT_COLOR), (preds, PRED_COLOR)):
        for box in boxes:
            mask = _stroke_mask(page.shape, box)
            rgb[mask] = color
    return rgb
