"""Projection-profile segmentation of marginalia crops into lines and words.

Lines: a sobel magnitude image is projected onto rows; rows at or above
the midpoint between the profile's peak and its minimum form line bands,
padded by one row on each side. Words: each line is Otsu-binarized and
projected onto columns; the line splits at every inter-word gap strictly
longer than the average gap. Both stages are deterministic, and both
inherit the known failure mode of projection methods: text rows (or words)
that overlap in the projection direction come out merged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .raster import BinaryRaster, Raster

logger = logging.getLogger(__name__)


@dataclass
class ProjectionProfile:
    values: np.ndarray  # int64 sums, length = height (horizontal) or width
    axis: str           # "horizontal" | "vertical"


@dataclass
class LineSegment:
    """One text line: a half-open row span of the parent crop."""

    row_start: int
    row_stop: int
    image: Raster


@dataclass
class WordSegment:
    """One word: a half-open column span of the parent line."""

    col_start: int
    col_stop: int
    image: Raster


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.int64)
_SOBEL_Y = _SOBEL_X.T


def _convolve3(padded: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    h, w = padded.shape[0] - 2, padded.shape[1] - 2
    out = np.zeros((h, w), dtype=np.int64)
    for dy in range(3):
        for dx in range(3):
            k = kernel[dy, dx]
            if k:
                out += k * padded[dy:dy + h, dx:dx + w]
    return out


def sobel_magnitude(gray: Raster) -> Raster:
    """Edge magnitude min(255, |Gx| + |Gy|) with edge-replicated borders."""
    padded = np.pad(gray.astype(np.int64), 1, mode="edge")
    gx = _convolve3(padded, _SOBEL_X)
    gy = _convolve3(padded, _SOBEL_Y)
    return np.minimum(np.abs(gx) + np.abs(gy), 255).astype(np.uint8)


def horizontal_projection(image: Raster) -> ProjectionProfile:
    """Per-row pixel sums (one value per image row)."""
    return ProjectionProfile(values=image.sum(axis=1, dtype=np.int64),
                             axis="horizontal")


def vertical_projection(image: np.ndarray) -> ProjectionProfile:
    """Per-column pixel sums; on a binary raster these are ink counts."""
    return ProjectionProfile(values=image.sum(axis=0, dtype=np.int64),
                             axis="vertical")


def _runs_at_least(values: np.ndarray, threshold: float) -> list[tuple[int, int]]:
    """Maximal inclusive index runs where values >= threshold."""
    mask = values >= threshold
    runs = []
    start = None
    for i, m in enumerate(mask):
        if m and start is None:
            start = i
        elif not m and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(mask) - 1))
    return runs


def split_lines(crop: Raster) -> list[LineSegment]:
    """Cut a marginalia crop into text lines, top to bottom.

    The row profile of the sobel image is thresholded at the midpoint
    between its maximum and minimum; each run of rows at or above it is one
    line, padded by a row on each side (never into a neighboring line). A
    flat profile means no text structure and yields no lines.
    """
    profile = horizontal_projection(sobel_magnitude(crop)).values
    lo = int(profile.min())
    hi = int(profile.max())
    if lo == hi:
        logger.info("flat row profile: no text structure found")
        return []
    threshold = (hi + lo) / 2.0
    h = crop.shape[0]
    segments: list[LineSegment] = []
    prev_stop = 0  # exclusive stop row of the previous padded span
    for a, b in _runs_at_least(profile, threshold):
        start = max(a - 1, prev_stop, 0)
        stop = min(b + 2, h)  # +1 for padding, +1 for half-open
        segments.append(LineSegment(row_start=start, row_stop=stop,
                                    image=crop[start:stop].copy()))
        prev_stop = stop
    return segments


def otsu_threshold(gray: Raster) -> int | None:
    """Threshold t maximizing between-class variance of {<=t} vs {>t}.

    Ties resolve to the smallest maximizing t. None for single-intensity
    images, where no split exists.
    """
    histogram = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    total = histogram.sum()
    omega = np.cumsum(histogram)                      # pixels at or below t
    mu = np.cumsum(histogram * np.arange(256))        # intensity mass at or below t
    mu_total = mu[-1]
    valid = (omega > 0) & (omega < total)
    if not valid.any():
        return None
    omega_v = omega[valid]
    mu_v = mu[valid]
    between = (mu_total * omega_v - mu_v) ** 2 / (omega_v * (total - omega_v))
    thresholds = np.flatnonzero(valid)
    return int(thresholds[np.argmax(between)])


def binarize(gray: Raster) -> BinaryRaster:
    """Otsu binarization; ink (True) is the darker class."""
    t = otsu_threshold(gray)
    if t is None:
        return np.zeros(gray.shape, dtype=bool)
    return gray <= t


def _interior_gaps(ink_per_col: np.ndarray) -> tuple[int, int, list[tuple[int, int]]]:
    """First/last ink columns and the (start, length) zero-ink runs between."""
    ink_cols = np.flatnonzero(ink_per_col)
    first, last = int(ink_cols[0]), int(ink_cols[-1])
    gaps = []
    run_start = None
    for c in range(first, last + 1):
        if ink_per_col[c] == 0:
            if run_start is None:
                run_start = c
        elif run_start is not None:
            gaps.append((run_start, c - run_start))
            run_start = None
    return first, last, gaps


def split_words(line: Raster) -> list[WordSegment]:
    """Cut a text line into words, left to right.

    The binarized line's column ink counts define gaps (zero-ink runs
    strictly between the first and last ink columns). The line is split at
    every gap strictly longer than the average gap length; ties and
    shorter gaps are treated as letter spacing and kept inside a word.
    """
    mask = binarize(line)
    ink_per_col = vertical_projection(mask).values
    if not ink_per_col.any():
        logger.info("no ink columns: nothing to split")
        return []
    first, last, gaps = _interior_gaps(ink_per_col)
    cuts = []
    if gaps:
        mean_gap = sum(length for _, length in gaps) / len(gaps)
        cuts = [(start, length) for start, length in gaps if length > mean_gap]
    words: list[WordSegment] = []
    col = first
    for start, length in cuts:
        words.append(WordSegment(col_start=col, col_stop=start,
                                 image=line[:, col:start].copy()))
        col = start + length
    words.append(WordSegment(col_start=col, col_stop=last + 1,
                             image=line[:, col:last + 1].copy()))
    return words


def segment_marginalia(crop: Raster) -> list[list[WordSegment]]:
    """Full segmentation of one crop: lines, then words within each line.

    Output is ordered (line, word); an empty or structureless crop yields
    an empty list.
    """
    return [split_words(line.image) for line in split_lines(crop)]
