"""Axis-aligned boxes in integer pixel coordinates, and IoU between them.

The whole pipeline uses one box convention: ``(x, y, w, h)`` anchored at the
top-left corner, with strictly positive sides. Areas are integer pixel
counts (``w * h``), so IoU here agrees exactly with counting pixels on a
grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def round_half_up(value: float) -> int:
    """Round to the nearest integer, with .5 rounding up."""
    return math.floor(value + 0.5)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle: top-left anchor ``(x, y)``, size ``(w, h)``."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, int):
                raise TypeError(f"box {name} must be an int, got {type(v).__name__}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box origin must be non-negative, got x={self.x} y={self.y}")

    @property
    def x2(self) -> int:
        """Exclusive right edge."""
        return self.x + self.w

    @property
    def y2(self) -> int:
        """Exclusive bottom edge."""
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def contains(self, other: "BBox") -> bool:
        return (self.x <= other.x and self.y <= other.y
                and other.x2 <= self.x2 and other.y2 <= self.y2)

    def within_image(self, width: int, height: int) -> bool:
        return self.x2 <= width and self.y2 <= height

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]

    @classmethod
    def from_list(cls, values) -> "BBox":
        if len(values) != 4:
            raise ValueError(f"expected [x, y, w, h], got {values!r}")
        return cls(int(values[0]), int(values[1]), int(values[2]), int(values[3]))

    @classmethod
    def from_corners(cls, x1: int, y1: int, x2: int, y2: int) -> "BBox":
        """Box spanning two opposite corners, in either order."""
        xa, xb = min(x1, x2), max(x1, x2)
        ya, yb = min(y1, y2), max(y1, y2)
        return cls(xa, ya, xb - xa, yb - ya)


def intersection_area(a: BBox, b: BBox) -> int:
    """Pixel count of the overlap between two boxes (0 when disjoint)."""
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0
    return iw * ih


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, using integer pixel areas.

    Symmetric; 1.0 for identical boxes, exactly 0.0 when disjoint.
    """
    inter = intersection_area(a, b)
    if inter == 0:
        return 0.0
    union = a.area + b.area - inter
    return inter / union


def scale_box(box: BBox, sx: float, sy: float, target_w: int, target_h: int) -> BBox:
    """Map a box through an image rescale of factors ``(sx, sy)``.

    Coordinates and sides are rounded half-up, then clamped so the result
    stays inside the ``target_w x target_h`` frame with sides of at least 1.
    """
    x = round_half_up(box.x * sx)
    y = round_half_up(box.y * sy)
    w = max(1, round_half_up(box.w * sx))
    h = max(1, round_half_up(box.h * sy))
    x = min(max(x, 0), target_w - 1)
    y = min(max(y, 0), target_h - 1)
    w = min(w, target_w - x)
    h = min(h, target_h - y)
    return BBox(x, y, w, h)
