"""Maximally stable extremal regions via a full 0..255 threshold sweep.

Dark polarity sweeps the growing pixel sets {p : I(p) <= t} for t = 0..255
and tracks their 4-connected components with a union-find; bright polarity
runs the same sweep on the inverted image. A component keeps its identity
while it only gains pixels; when two or more components connect, they close
and a fresh parent is born at the merge threshold, which yields the nesting
tree of extremal regions with a full area history per node.

Stability of a region at threshold i is

    v = |area(i + delta) - area(i - delta)| / area(i)

evaluated from the node's own area history. Candidate regions are the
plateau local minima of v along each node's lifetime; they are then
filtered by a stability ceiling and area bounds, and near-identical nested
candidates collapse onto the most stable one.

This is the straightforward quadratic-ish sweep, optimized for being easy
to check against a per-threshold flood-fill oracle rather than for speed.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geometry import BBox, iou
from .raster import Raster

POLARITIES = ("dark", "bright")


@dataclass
class RegionNode:
    """One region of the component tree with its sparse area history."""

    node_id: int
    birth: int
    seed_pixel: int  # flat index of a pixel that is a member from birth on
    area_steps: list[tuple[int, int]] = field(default_factory=list)
    death: int = 255
    parent: int | None = None

    def area_at(self, t: int) -> int:
        """Component area at threshold ``t`` (birth <= t <= death)."""
        if t < self.birth or t > self.death:
            raise ValueError(
                f"node {self.node_id} does not exist at threshold {t} "
                f"(lifetime [{self.birth}, {self.death}])")
        idx = bisect_right(self.area_steps, (t, float("inf"))) - 1
        return self.area_steps[idx][1]

    @property
    def lifetime(self) -> int:
        return self.death - self.birth + 1

    def area_history(self) -> dict[int, int]:
        """Dense threshold -> area map over the node's lifetime."""
        return {t: self.area_at(t) for t in range(self.birth, self.death + 1)}


@dataclass
class ComponentTree:
    width: int
    height: int
    polarity: str
    nodes: list[RegionNode]
    root_id: int
    work_image: np.ndarray  # sweep-space image (inverted for bright polarity)

    def children_of(self, node_id: int) -> list[int]:
        return [n.node_id for n in self.nodes if n.parent == node_id]


@dataclass(frozen=True)
class MserParams:
    """Knobs of the sweep; area bounds default relative to the image."""

    delta: int = 3
    max_variation: float = 0.25
    min_area: int = 30
    max_area: int | None = None        # None -> 0.9 * image area
    polarity: str = "both"             # "dark" | "bright" | "both"
    tiny_min_area: int | None = None   # None -> 0.1% of image area (box filter)
    dedup_iou: float = 0.9
    collapse_ratio: float = 0.95

    def __post_init__(self) -> None:
        if not 1 <= self.delta <= 127:
            raise ValueError(f"delta must be in [1, 127], got {self.delta}")
        if self.max_variation <= 0:
            raise ValueError(f"max_variation must be > 0, got {self.max_variation}")
        if self.max_area is not None and self.min_area >= self.max_area:
            raise ValueError(
                f"min_area must be < max_area, got {self.min_area} >= {self.max_area}")
        if self.polarity not in POLARITIES + ("both",):
            raise ValueError(f"unknown polarity {self.polarity!r}")

    def resolved_max_area(self, width: int, height: int) -> int:
        if self.max_area is not None:
            return self.max_area
        return int(0.9 * width * height)

    def resolved_tiny_min_area(self, width: int, height: int) -> int:
        if self.tiny_min_area is not None:
            return self.tiny_min_area
        return max(1, int(0.001 * width * height))


@dataclass
class Region:
    """An extracted maximally stable region at its evaluation threshold."""

    node_id: int
    polarity: str
    threshold: int
    area: int
    stability_v: float
    bbox: BBox
    pixel_runs: tuple[tuple[int, int, int], ...]  # (row, col_start, col_stop)
    area_at_threshold: dict[int, int]

    def pixel_count(self) -> int:
        return sum(stop - start for _, start, stop in self.pixel_runs)


def _find(uf: list[int], x: int) -> int:
    while uf[x] != x:
        uf[x] = uf[uf[x]]  # path halving
        x = uf[x]
    return x


def component_tree(image: Raster, polarity: str = "dark") -> ComponentTree:
    """Build the extremal-region tree for one polarity.

    Every threshold t in 0..255 is visited; components merge through new
    pixels only, so node bookkeeping happens where pixels of intensity t
    land. Nodes record ``(threshold, area)`` steps at every change.
    """
    if polarity not in POLARITIES:
        raise ValueError(f"polarity must be one of {POLARITIES}, got {polarity!r}")
    work = image if polarity == "dark" else (255 - image.astype(np.int16)).astype(np.uint8)
    h, w = work.shape
    n = h * w
    flat = work.ravel()

    order = np.argsort(flat, kind="stable")
    values = flat[order]
    # bucket_bounds[t] .. bucket_bounds[t+1] indexes pixels of intensity t
    bucket_bounds = np.searchsorted(values, np.arange(257))

    uf = list(range(n))
    size = [0] * n
    added = bytearray(n)
    comp_node = [-1] * n          # node id owned by a live root, -1 = none yet
    nodes: list[RegionNode] = []
    pending: dict[int, set[int]] = {}  # root -> prior nodes merged this threshold

    def prior_nodes_of(root: int) -> set[int]:
        s = pending.pop(root, None)
        if s is not None:
            return s
        nid = comp_node[root]
        return {nid} if nid >= 0 else set()

    for t in range(256):
        lo, hi = bucket_bounds[t], bucket_bounds[t + 1]
        if lo == hi:
            continue
        new_pixels = order[lo:hi].tolist()
        for p in new_pixels:
            uf[p] = p
            size[p] = 1
            comp_node[p] = -1
            added[p] = 1
        for p in new_pixels:
            y, x = divmod(p, w)
            for q in (p - 1 if x > 0 else -1,
                      p + 1 if x < w - 1 else -1,
                      p - w if y > 0 else -1,
                      p + w if y < h - 1 else -1):
                if q < 0 or not added[q]:
                    continue
                ra = _find(uf, p)
                rb = _find(uf, q)
                if ra == rb:
                    continue
                merged = prior_nodes_of(ra) | prior_nodes_of(rb)
                if size[ra] < size[rb]:
                    ra, rb = rb, ra
                uf[rb] = ra
                size[ra] += size[rb]
                pending[ra] = merged

        seen_roots: set[int] = set()
        for p in new_pixels:
            root = _find(uf, p)
            if root in seen_roots:
                continue
            seen_roots.add(root)
            s = pending.pop(root, None)
            if s is None:
                nid = comp_node[root]
                s = {nid} if nid >= 0 else set()
            if len(s) == 1:
                nid = next(iter(s))
                nodes[nid].area_steps.append((t, size[root]))
            else:
                nid = len(nodes)
                nodes.append(RegionNode(node_id=nid, birth=t, seed_pixel=root,
                                        area_steps=[(t, size[root])]))
                for child in s:
                    nodes[child].death = t - 1
                    nodes[child].parent = nid
            comp_node[root] = nid

    root_id = comp_node[_find(uf, 0)]
    return ComponentTree(width=w, height=h, polarity=polarity, nodes=nodes,
                         root_id=root_id, work_image=work)


def stability(node: RegionNode, threshold: int, delta: int) -> float | None:
    """Area-change ratio at ``threshold``; None when the node is too
    short-lived for a window of +-delta around it."""
    if threshold - delta < node.birth or threshold + delta > node.death:
        return None
    return abs(node.area_at(threshold + delta)
               - node.area_at(threshold - delta)) / node.area_at(threshold)


def _plateau_minima(values: list[float]) -> list[int]:
    """Indices of the first element of each plateau that is a local minimum.

    A plateau (maximal run of equal values) counts as a minimum when every
    adjacent plateau is strictly larger; range boundaries bound plateaus.
    """
    runs: list[tuple[int, float]] = []
    for i, v in enumerate(values):
        if not runs or runs[-1][1] != v:
            runs.append((i, v))
    out = []
    for k, (start, v) in enumerate(runs):
        left_ok = k == 0 or runs[k - 1][1] > v
        right_ok = k == len(runs) - 1 or runs[k + 1][1] > v
        if left_ok and right_ok:
            out.append(start)
    return out


def _flood_pixels(work: np.ndarray, seed_pixel: int, threshold: int,
                  ) -> tuple[tuple[tuple[int, int, int], ...], BBox, int]:
    """Pixel runs, tight bbox, and area of the component of
    {work <= threshold} that contains ``seed_pixel``."""
    h, w = work.shape
    inside = work.ravel() <= threshold
    visited = np.zeros(h * w, dtype=bool)
    queue = deque([seed_pixel])
    visited[seed_pixel] = True
    cols_by_row: dict[int, list[int]] = {}
    while queue:
        p = queue.popleft()
        y, x = divmod(p, w)
        cols_by_row.setdefault(y, []).append(x)
        for q in (p - 1 if x > 0 else -1,
                  p + 1 if x < w - 1 else -1,
                  p - w if y > 0 else -1,
                  p + w if y < h - 1 else -1):
            if q >= 0 and inside[q] and not visited[q]:
                visited[q] = True
                queue.append(q)
    runs: list[tuple[int, int, int]] = []
    area = 0
    min_x, max_x = w, -1
    for y in sorted(cols_by_row):
        cols = sorted(cols_by_row[y])
        start = prev = cols[0]
        for c in cols[1:]:
            if c == prev + 1:
                prev = c
                continue
            runs.append((y, start, prev + 1))
            start = prev = c
        runs.append((y, start, prev + 1))
        area += len(cols)
        min_x = min(min_x, cols[0])
        max_x = max(max_x, cols[-1])
    rows = sorted(cols_by_row)
    bbox = BBox(min_x, rows[0], max_x - min_x + 1, rows[-1] - rows[0] + 1)
    return tuple(runs), bbox, area


def _candidates_for_tree(tree: ComponentTree, params: MserParams) -> list[Region]:
    max_area = params.resolved_max_area(tree.width, tree.height)
    delta = params.delta
    kept: dict[int, list[Region]] = {}  # node_id -> candidates by threshold
    for node in tree.nodes:
        lo = node.birth + delta
        hi = node.death - delta
        if hi < lo:
            continue  # too short-lived to evaluate
        vs = [stability(node, i, delta) for i in range(lo, hi + 1)]
        for offset in _plateau_minima(vs):
            i_star = lo + offset
            v = vs[offset]
            area = node.area_at(i_star)
            if v >= params.max_variation:
                continue
            if not params.min_area <= area <= max_area:
                continue
            runs, bbox, flood_area = _flood_pixels(tree.work_image,
                                                   node.seed_pixel, i_star)
            if flood_area != area:
                raise AssertionError(
                    f"sweep/flood area mismatch for node {node.node_id} "
                    f"at t={i_star}: {area} vs {flood_area}")
            region = Region(node_id=node.node_id, polarity=tree.polarity,
                            threshold=i_star, area=area, stability_v=v,
                            bbox=bbox, pixel_runs=runs,
                            area_at_threshold=node.area_history())
            kept.setdefault(node.node_id, []).append(region)
    return _collapse_nested(tree, kept, params.collapse_ratio)


def _collapse_nested(tree: ComponentTree, by_node: dict[int, list[Region]],
                     ratio: float) -> list[Region]:
    """Collapse towers of near-identical nested candidates, keeping the
    most stable (lowest v) of each pair with area ratio above ``ratio``."""
    for regions in by_node.values():
        regions.sort(key=lambda r: r.threshold)
    alive: set[tuple[int, int]] = {(r.node_id, r.threshold)
                                   for rs in by_node.values() for r in rs}

    def enclosing(region: Region) -> Region | None:
        # next alive candidate at the same node, else nearest alive
        # candidate on the ancestor chain
        for r in by_node.get(region.node_id, []):
            if r.threshold > region.threshold and (r.node_id, r.threshold) in alive:
                return r
        nid = tree.nodes[region.node_id].parent
        while nid is not None:
            for r in by_node.get(nid, []):
                if (r.node_id, r.threshold) in alive:
                    return r
            nid = tree.nodes[nid].parent
        return None

    ordered = sorted((r for rs in by_node.values() for r in rs),
                     key=lambda r: (r.area, r.node_id, r.threshold))
    for region in ordered:
        if (region.node_id, region.threshold) not in alive:
            continue
        while True:
            outer = enclosing(region)
            if outer is None or region.area / outer.area <= ratio:
                break
            if region.stability_v < outer.stability_v:
                alive.discard((outer.node_id, outer.threshold))
            else:
                alive.discard((region.node_id, region.threshold))
                break
    survivors = [r for rs in by_node.values() for r in rs
                 if (r.node_id, r.threshold) in alive]
    survivors.sort(key=lambda r: (r.bbox.y, r.bbox.x, r.area, r.threshold))
    return survivors


def extract_mser(image: Raster, params: MserParams | None = None) -> list[Region]:
    """Extract maximally stable regions for the configured polarity/-ies."""
    params = params or MserParams()
    polarities = POLARITIES if params.polarity == "both" else (params.polarity,)
    regions: list[Region] = []
    for pol in polarities:
        tree = component_tree(image, pol)
        regions.extend(_candidates_for_tree(tree, params))
    return regions


def scored_proposals(image: Raster, params: MserParams | None = None,
                     ) -> list[tuple[BBox, float]]:
    """Candidate boxes with stability scores: tiny boxes dropped, then
    near-duplicate boxes (IoU > dedup threshold) reduced to the most stable."""
    params = params or MserParams()
    h, w = image.shape
    tiny = params.resolved_tiny_min_area(w, h)
    scored = [(r.bbox, r.stability_v) for r in extract_mser(image, params)
              if r.bbox.area >= tiny]
    scored.sort(key=lambda bv: (bv[1], bv[0].y, bv[0].x, bv[0].w, bv[0].h))
    kept: list[tuple[BBox, float]] = []
    for box, v in scored:
        if all(iou(box, kb) <= params.dedup_iou for kb, _ in kept):
            kept.append((box, v))
    kept.sort(key=lambda bv: (bv[0].y, bv[0].x, bv[0].w, bv[0].h))
    return kept


def proposals(image: Raster, params: MserParams | None = None) -> list[BBox]:
    """Candidate marginalia boxes from both polarities of the MSER sweep."""
    return [box for box, _ in scored_proposals(image, params)]
