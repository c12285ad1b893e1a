"""Training-set augmentation: horizontal flip, Gaussian noise, photometric jitter.

Each training page expands into exactly four samples — the original, its
mirror image, a noisy copy, and a brightness/contrast-jittered copy — so a
462-page train split becomes 1848 samples. Box lists ride along: the flip
remaps x coordinates, the photometric variants keep boxes untouched.

Noise uses Box-Muller over a counter-based Philox stream keyed by a
per-page derived seed, which keeps samples bit-stable across platforms and
independent of page processing order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BBox
from .raster import Raster
from .seeding import derive_seed

VARIANTS = ("original", "hflip", "noise", "brightness_contrast")


@dataclass
class AugmentParams:
    sigma: float = 10.0
    alpha_range: tuple[float, float] = (0.8, 1.2)
    beta_range: tuple[float, float] = (-30.0, 30.0)

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if self.alpha_range[0] <= 0 or self.alpha_range[0] > self.alpha_range[1]:
            raise ValueError(f"bad alpha range {self.alpha_range}")
        if self.beta_range[0] > self.beta_range[1]:
            raise ValueError(f"bad beta range {self.beta_range}")


@dataclass
class AugmentedSample:
    source_page_id: str
    variant: str
    image: Raster
    boxes: list[BBox]
    seed: int

    @property
    def sample_id(self) -> str:
        return f"{self.source_page_id}__{self.variant}"


def hflip(image: Raster, boxes: list[BBox]) -> tuple[Raster, list[BBox]]:
    """Mirror the image left-right and remap boxes: x' = W - x - w."""
    w = image.shape[1]
    flipped = [BBox(w - b.x - b.w, b.y, b.w, b.h) for b in boxes]
    return np.fliplr(image).copy(), flipped


def gaussian_noise(image: Raster, sigma: float, seed: int) -> Raster:
    """Add clamped i.i.d. Gaussian noise of the given sigma, per pixel.

    Deterministic under ``seed``: uniforms come from a Philox counter
    stream and are mapped through the Box-Muller transform.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return image.copy()
    n = image.size
    rng = np.random.Generator(np.random.Philox(key=seed))
    half = (n + 1) // 2
    u1 = 1.0 - rng.random(half)  # (0, 1]: keeps log() finite
    u2 = rng.random(half)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    normals = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
    noisy = image.astype(np.float64) + sigma * normals.reshape(image.shape)
    return np.clip(np.floor(noisy + 0.5), 0, 255).astype(np.uint8)


def brightness_contrast(image: Raster, alpha: float, beta: float) -> Raster:
    """Affine intensity jitter: out = clamp(round(alpha * in + beta))."""
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    out = alpha * image.astype(np.float64) + beta
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def draw_jitter(seed: int, params: AugmentParams) -> tuple[float, float]:
    """Deterministic (alpha, beta) pair for one page's photometric variant."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    u = rng.random(2)
    alpha = params.alpha_range[0] + u[0] * (params.alpha_range[1] - params.alpha_range[0])
    beta = params.beta_range[0] + u[1] * (params.beta_range[1] - params.beta_range[0])
    return float(alpha), float(beta)


def augment_page(page_id: str, image: Raster, boxes: list[BBox],
                 corpus_seed: int, params: AugmentParams | None = None,
                 ) -> list[AugmentedSample]:
    """Produce the four augmentation variants of one training page.

    Per-variant seeds are derived from ``(corpus_seed, page_id, variant)``,
    so the sample set is a pure function of its inputs.
    """
    params = params or AugmentParams()
    seeds = {v: derive_seed(corpus_seed, page_id, v) for v in VARIANTS}

    flipped_img, flipped_boxes = hflip(image, boxes)
    noisy = gaussian_noise(image, params.sigma, seeds["noise"])
    alpha, beta = draw_jitter(seeds["brightness_contrast"], params)
    jittered = brightness_contrast(image, alpha, beta)

    return [
        AugmentedSample(page_id, "original", image.copy(), list(boxes),
                        seeds["original"]),
        AugmentedSample(page_id, "hflip", flipped_img, flipped_boxes,
                        seeds["hflip"]),
        AugmentedSample(page_id, "noise", noisy, list(boxes), seeds["noise"]),
        AugmentedSample(page_id, "brightness_contrast", jittered, list(boxes),
                        seeds["brightness_contrast"]),
    ]
