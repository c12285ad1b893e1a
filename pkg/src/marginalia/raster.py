"""8-bit grayscale rasters: loading, cropping, bilinear resampling.

A raster is a 2-D ``numpy.uint8`` array of shape ``(height, width)``; a
binary raster is a 2-D bool array of the same layout (True = ink). Color
inputs are converted to grayscale via the standard luma weighting on load.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .geometry import BBox, scale_box

# Type aliases; all pixel carriers in the package are plain numpy arrays.
Raster = np.ndarray
BinaryRaster = np.ndarray


def as_raster(pixels) -> Raster:
    """Coerce array-like pixel data to a validated uint8 raster."""
    arr = np.asarray(pixels)
    if arr.ndim != 2:
        raise ValueError(f"raster must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"raster sides must be >= 1, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        if arr.min() < 0 or arr.max() > 255:
            raise ValueError("pixel values must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def load_raster(path) -> Raster:
    """Read an image file (PNG/PGM/...) as 8-bit grayscale."""
    with Image.open(path) as img:
        return np.asarray(img.convert("L"), dtype=np.uint8)


def save_raster(path, image: Raster) -> None:
    Image.fromarray(as_raster(image), mode="L").save(path)


def crop(image: Raster, box: BBox) -> Raster:
    """Cut out ``box`` from the image; the box must lie fully inside it."""
    h, w = image.shape
    if not box.within_image(w, h):
        raise ValueError(
            f"crop box {box.as_list()} exceeds image bounds {w}x{h}")
    return image[box.y:box.y2, box.x:box.x2].copy()


def resize(image: Raster, target_w: int, target_h: int) -> Raster:
    """Bilinear resample to ``target_w x target_h``.

    Uses half-pixel-center sampling, so an identity target is bit-identical
    and a constant image stays constant. Output is rounded half-up.
    """
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target size must be >= 1, got {target_w}x{target_h}")
    h, w = image.shape
    if (target_w, target_h) == (w, h):
        return image.copy()
    src = image.astype(np.float64)
    sx = np.clip((np.arange(target_w) + 0.5) * (w / target_w) - 0.5, 0.0, w - 1.0)
    sy = np.clip((np.arange(target_h) + 0.5) * (h / target_h) - 0.5, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = (sy - y0)[:, None]
    top = src[np.ix_(y0, x0)] * (1.0 - fx) + src[np.ix_(y0, x1)] * fx
    bottom = src[np.ix_(y1, x0)] * (1.0 - fx) + src[np.ix_(y1, x1)] * fx
    out = top * (1.0 - fy) + bottom * fy
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def rescale_page(page: Raster, boxes: list[BBox], target_w: int, target_h: int,
                 ) -> tuple[Raster, list[BBox]]:
    """Resample a page to the target size and map its boxes along with it.

    Box corners scale by ``(target_w/W, target_h/H)`` with half-up rounding;
    degenerate results are clamped back to at least 1x1 inside the frame.
    Identity targets leave both the image and box list unchanged.
    """
    h, w = page.shape
    out = resize(page, target_w, target_h)
    sx = target_w / w
    sy = target_h / h
    return out, [scale_box(b, sx, sy, target_w, target_h) for b in boxes]
