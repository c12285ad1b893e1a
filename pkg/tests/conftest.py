"""Shared fixtures: synthetic pages and a miniature LabelMe corpus."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from marginalia.geometry import BBox
from marginalia.raster import save_raster

PAGE_W, PAGE_H = 84, 120
INK = 40
PAPER = 235


def synthetic_page(index: int) -> tuple[np.ndarray, list[BBox]]:
    """One synthetic scanned page: a marginalia block of 3 text lines x 2
    words on the left, and four disjoint printed-text blocks on the right
    (negative-proposal material). Feature positions shift with the index."""
    img = np.full((PAGE_H, PAGE_W), PAPER, dtype=np.uint8)
    shift = (index * 3) % 9

    # marginalia block: 3 ink bands of 5 rows, split into 2 blobs by a
    # 5-column gap (inter-blob letter gaps are 1 column wide)
    mx, my, mw, mh = 6, 8 + shift, 32, 42
    for band in range(3):
        top = my + 2 + band * 14
        for y in range(top, top + 5):
            img[y, mx + 2:mx + 14] = INK
            img[y, mx + 15:mx + 17] = INK   # 1-col gap: same word
            img[y, mx + 22:mx + 30] = INK   # 5-col gap: next word
    gt = [BBox(mx, my, mw, mh)]

    # printed-text blocks, all disjoint from the marginalia box
    bx = 48
    for i, by in enumerate((10, 38, 66, 94)):
        img[by:by + 12, bx + (i % 2) * 4:bx + (i % 2) * 4 + 18] = INK
    return img, gt


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory) -> Path:
    """Six-page LabelMe corpus on disk: {page}.json + {page}.png pairs."""
    root = tmp_path_factory.mktemp("mini_corpus")
    for i in range(6):
        page_id = f"page_{i:02d}"
        image, boxes = synthetic_page(i)
        save_raster(root / f"{page_id}.png", image)
        doc = {
            "imagePath": f"{page_id}.png",
            "imageWidth": PAGE_W,
            "imageHeight": PAGE_H,
            "shapes": [{
                "label": "Marginalia",
                "shape_type": "rectangle",
                "points": [[b.x, b.y], [b.x2, b.y2]],
            } for b in boxes],
        }
        (root / f"{page_id}.json").write_text(json.dumps(doc), encoding="utf-8")
    return root
