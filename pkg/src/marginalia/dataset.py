"""Corpus ingestion: LabelMe annotations, train/test split, page manifests.

A corpus is a set of scanned pages, each annotated with zero or more
marginalia boxes by a LabelMe-style JSON file. Ingest normalizes every
shape to the internal ``(x, y, w, h)`` convention, clamps it to the image,
and drops degenerate shapes with a logged warning.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .geometry import BBox, round_half_up
from .jsonl import ManifestError, read_jsonl, write_jsonl
from .seeding import keyed_shuffle

logger = logging.getLogger(__name__)

MARGINALIA_LABEL_FRAGMENT = "marginalia"


class LabelMeParseError(ValueError):
    pass


@dataclass
class PageAnnotation:
    """One scanned page with its ground-truth marginalia boxes."""

    page_id: str
    image_path: str
    width: int
    height: int
    marginalia: list[BBox] = field(default_factory=list)
    split: str | None = None  # "train" | "test" | None before splitting

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"page {self.page_id}: bad size {self.width}x{self.height}")
        for box in self.marginalia:
            if not box.within_image(self.width, self.height):
                raise ValueError(
                    f"page {self.page_id}: box {box.as_list()} outside "
                    f"{self.width}x{self.height}")


@dataclass(frozen=True)
class CorpusSplit:
    """Deterministic partition of page ids into train and test."""

    train: tuple[str, ...]
    test: tuple[str, ...]
    seed: int
    ratio: float


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def parse_labelme(document: str, page_id: str | None = None,
                  image_path: str | None = None) -> PageAnnotation:
    """Parse one LabelMe JSON document into a :class:`PageAnnotation`.

    Shapes whose label contains "marginalia" (case-insensitive) become
    boxes; rectangles use their two corner points in either order, and any
    other shape type is reduced to the bounding box of its points. Points
    are clamped to the image; shapes that collapse to zero area are skipped
    with a warning.
    """
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise LabelMeParseError(f"invalid JSON: {exc.msg}") from None
    for key in ("imagePath", "imageHeight", "imageWidth", "shapes"):
        if key not in doc:
            raise LabelMeParseError(f"missing required key: {key}")
    width = int(doc["imageWidth"])
    height = int(doc["imageHeight"])
    if page_id is None:
        page_id = Path(str(doc["imagePath"])).stem
    if image_path is None:
        image_path = str(doc["imagePath"])

    boxes: list[BBox] = []
    for idx, shape in enumerate(doc["shapes"]):
        label = str(shape.get("label", ""))
        if MARGINALIA_LABEL_FRAGMENT not in label.lower():
            continue
        points = shape.get("points")
        if not points:
            raise LabelMeParseError(f"shape {idx}: missing required key: points")
        xs = [_clamp(float(p[0]), 0, width) for p in points]
        ys = [_clamp(float(p[1]), 0, height) for p in points]
        x1 = round_half_up(min(xs))
        x2 = round_half_up(max(xs))
        y1 = round_half_up(min(ys))
        y2 = round_half_up(max(ys))
        if x2 - x1 <= 0 or y2 - y1 <= 0:
            logger.warning("page %s: shape %d (%r) has zero area, skipped",
                           page_id, idx, label)
            continue
        boxes.append(BBox(x1, y1, x2 - x1, y2 - y1))
    return PageAnnotation(page_id=page_id, image_path=image_path,
                          width=width, height=height, marginalia=boxes)


def serialize_labelme(page: PageAnnotation, label: str = "marginalia") -> str:
    """Inverse of :func:`parse_labelme` for the retained fields."""
    shapes = [{
        "label": label,
        "shape_type": "rectangle",
        "points": [[box.x, box.y], [box.x2, box.y2]],
    } for box in page.marginalia]
    return json.dumps({
        "imagePath": page.image_path,
        "imageWidth": page.width,
        "imageHeight": page.height,
        "shapes": shapes,
    }, sort_keys=True, indent=2)


def split_corpus(pages: list[PageAnnotation], ratio: float, seed: int) -> CorpusSplit:
    """Randomly partition pages into train/test at ``ratio`` under ``seed``.

    The shuffle is a keyed-hash ordering of page ids, so the same inputs
    give the same split on every platform. Train size is
    ``round_half_up(ratio * N)``.
    """
    if not pages:
        raise ValueError("cannot split an empty corpus")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}")
    ids = [p.page_id for p in pages]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate page_id in corpus")
    shuffled = keyed_shuffle(ids, seed)
    n_train = round_half_up(ratio * len(ids))
    return CorpusSplit(train=tuple(shuffled[:n_train]),
                       test=tuple(shuffled[n_train:]),
                       seed=seed, ratio=ratio)


def apply_split(pages: list[PageAnnotation], split: CorpusSplit) -> list[PageAnnotation]:
    """Pages with their ``split`` field filled in from the partition."""
    lookup = {pid: "train" for pid in split.train}
    lookup.update({pid: "test" for pid in split.test})
    missing = [p.page_id for p in pages if p.page_id not in lookup]
    if missing:
        raise ValueError(f"split does not cover pages: {missing}")
    return [replace(p, split=lookup[p.page_id]) for p in pages]


def page_to_record(page: PageAnnotation) -> dict:
    record = {
        "page_id": page.page_id,
        "image_path": page.image_path,
        "width": page.width,
        "height": page.height,
        "boxes": [b.as_list() for b in page.marginalia],
    }
    if page.split is not None:
        record["split"] = page.split
    return record


def record_to_page(record: dict, context: str = "") -> PageAnnotation:
    for key in ("page_id", "image_path", "width", "height", "boxes"):
        if key not in record:
            raise ManifestError(f"{context}missing required key: {key}")
    split = record.get("split")
    if split is not None and split not in ("train", "test"):
        raise ManifestError(f"{context}bad split value: {split!r}")
    return PageAnnotation(
        page_id=str(record["page_id"]),
        image_path=str(record["image_path"]),
        width=int(record["width"]),
        height=int(record["height"]),
        marginalia=[BBox.from_list(b) for b in record["boxes"]],
        split=split,
    )


def write_manifest(pages: list[PageAnnotation], path,
                   header: dict | None = None) -> None:
    write_jsonl(path, (page_to_record(p) for p in pages), header=header)


def read_manifest(path) -> tuple[dict | None, list[PageAnnotation]]:
    """Read a corpus manifest; rejects duplicate page ids."""
    header, records = read_jsonl(path)
    pages = []
    errors = []
    seen: set[str] = set()
    for i, record in enumerate(records, start=1):
        try:
            page = record_to_page(record, context=f"record {i}: ")
        except (ManifestError, ValueError, TypeError) as exc:
            errors.append(f"record {i}: {exc}")
            continue
        if page.page_id in seen:
            errors.append(f"record {i}: duplicate page_id {page.page_id!r}")
            continue
        seen.add(page.page_id)
        pages.append(page)
    if errors:
        raise ManifestError(f"{len(errors)} bad record(s) in {path}", errors)
    return header, pages
