"""Independent reference implementations used to verify the library.

Everything here recomputes results by the most literal method available
(pixel counting, per-threshold flood fill, exhaustive search), sharing no
code with the production paths it checks.
"""

from __future__ import annotations

from collections import deque
from itertools import permutations

import numpy as np


def pixel_iou(a, b, grid_w: int, grid_h: int) -> float:
    """IoU by rasterizing both boxes on a grid and counting pixels."""
    ga = np.zeros((grid_h, grid_w), dtype=bool)
    gb = np.zeros((grid_h, grid_w), dtype=bool)
    ga[a.y:a.y + a.h, a.x:a.x + a.w] = True
    gb[b.y:b.y + b.h, b.x:b.x + b.w] = True
    union = np.count_nonzero(ga | gb)
    if union == 0:
        return 0.0
    inter = np.count_nonzero(ga & gb)
    return 0.0 if inter == 0 else inter / union


def flood_components(image: np.ndarray, threshold: int) -> list[frozenset]:
    """4-connected components of {pixel <= threshold}, as pixel-index sets."""
    h, w = image.shape
    mask = image <= threshold
    seen = np.zeros((h, w), dtype=bool)
    components = []
    for sy in range(h):
        for sx in range(w):
            if not mask[sy, sx] or seen[sy, sx]:
                continue
            queue = deque([(sy, sx)])
            seen[sy, sx] = True
            pixels = []
            while queue:
                y, x = queue.popleft()
                pixels.append(y * w + x)
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] \
                            and not seen[ny, nx]:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
            components.append(frozenset(pixels))
    return components


class OracleNode:
    """Region lifetime reconstructed from per-threshold components."""

    def __init__(self, birth: int, pixels: frozenset):
        self.birth = birth
        self.death = 255
        self.areas: dict[int, int] = {birth: len(pixels)}
        self.pixels: dict[int, frozenset] = {birth: pixels}
        self.parent: "OracleNode | None" = None

    def record(self, t: int, pixels: frozenset) -> None:
        self.areas[t] = len(pixels)
        self.pixels[t] = pixels

    def stability(self, threshold: int, delta: int) -> float | None:
        if threshold - delta < self.birth or threshold + delta > self.death:
            return None
        return abs(self.areas[threshold + delta]
                   - self.areas[threshold - delta]) / self.areas[threshold]


def oracle_component_tree(image: np.ndarray) -> list[OracleNode]:
    """Region tree by flood filling every threshold and matching components.

    A component at threshold t continues the node of the single t-1
    component it contains; containing two or more closes them under a new
    node; containing none starts a new leaf.
    """
    nodes: list[OracleNode] = []
    previous: list[tuple[frozenset, OracleNode]] = []
    for t in range(256):
        current = []
        for comp in flood_components(image, t):
            inside = [node for pset, node in previous if pset <= comp]
            partial = [node for pset, node in previous
                       if pset & comp and not pset <= comp]
            assert not partial, "components may only nest across thresholds"
            if len(inside) == 1:
                node = inside[0]
                node.record(t, comp)
            else:
                node = OracleNode(t, comp)
                nodes.append(node)
                for child in inside:
                    child.death = t - 1
                    child.parent = node
            current.append((comp, node))
        previous = current
    return nodes


def oracle_otsu(gray: np.ndarray) -> int | None:
    """Exhaustive between-class-variance maximizer over t in 0..255.

    Classes are {<= t} and {> t}; thresholds leaving a class empty score
    zero variance and are skipped. Ties go to the smallest t.
    """
    values = gray.ravel().astype(np.float64)
    n = values.size
    best_t = None
    best_score = -1.0
    for t in range(256):
        low = values[values <= t]
        high = values[values > t]
        if low.size == 0 or high.size == 0:
            continue
        w0 = low.size / n
        w1 = high.size / n
        score = w0 * w1 * (low.mean() - high.mean()) ** 2
        if score > best_score + 1e-12:
            best_score = score
            best_t = t
    return best_t


def oracle_gap_cuts(ink_per_col: np.ndarray) -> list[tuple[int, int]]:
    """(start, length) of every zero-ink gap strictly longer than the mean,
    scanning only between the first and last ink columns."""
    cols = np.flatnonzero(ink_per_col)
    if cols.size == 0:
        return []
    gaps = []
    start = None
    for c in range(int(cols[0]), int(cols[-1]) + 1):
        if ink_per_col[c] == 0:
            if start is None:
                start = c
        else:
            if start is not None:
                gaps.append((start, c - start))
                start = None
    if not gaps:
        return []
    mean = sum(length for _, length in gaps) / len(gaps)
    return [(s, length) for s, length in gaps if length > mean]


def oracle_edit_distances(words: list[str]) -> dict[tuple[str, str], int]:
    """Edit distances for all pairs of the given prefix-closed word list,
    filled in by the textbook recurrence over word pairs in length order."""
    table: dict[tuple[str, str], int] = {}
    by_length = sorted(words, key=len)
    for a in by_length:
        for b in by_length:
            if not a:
                table[(a, b)] = len(b)
            elif not b:
                table[(a, b)] = len(a)
            else:
                table[(a, b)] = min(
                    table[(a[:-1], b)] + 1,
                    table[(a, b[:-1])] + 1,
                    table[(a[:-1], b[:-1])] + (a[-1] != b[-1]))
    return table


def oracle_best_matching(iou_matrix: np.ndarray, threshold: float,
                         ) -> tuple[float, int]:
    """Best one-to-one matching by exhaustive enumeration.

    Returns (max total IoU, pair count of a maximizing matching) over all
    injective assignments using only pairs at or above the threshold.
    """
    n_pred, n_gt = iou_matrix.shape
    best_total = 0.0
    best_count = 0
    k = min(n_pred, n_gt)
    gt_indices = list(range(n_gt))
    for size in range(k + 1):
        for preds in permutations(range(n_pred), size):
            for gts in permutations(gt_indices, size):
                total = 0.0
                count = 0
                ok = True
                for p, g in zip(preds, gts):
                    v = iou_matrix[p, g]
                    if v < threshold:
                        ok = False
                        break
                    total += v
                    count += 1
                if ok and (total > best_total + 1e-12):
                    best_total = total
                    best_count = count
    return best_total, best_count


def hand_sobel(image: np.ndarray) -> np.ndarray:
    """Direct per-pixel 3x3 sobel with edge replication."""
    h, w = image.shape
    out = np.zeros((h, w), dtype=np.int64)
    kx = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]]
    ky = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]]
    for y in range(h):
        for x in range(w):
            gx = gy = 0
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    gx += kx[dy + 1][dx + 1] * int(image[yy, xx])
                    gy += ky[dy + 1][dx + 1] * int(image[yy, xx])
            out[y, x] = min(255, abs(gx) + abs(gy))
    return out.astype(np.uint8)
