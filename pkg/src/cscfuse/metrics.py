"""No-reference fusion-quality metrics: AG, EN, SF, EI.

All formulas operate on the image rescaled to [0, 255] so values match the
magnitudes customary in the fusion literature. Every metric is zero on a
constant image and invariant under flips and 180-degree rotation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .containers import Image
from .pgm import quantize_u8

SCALE = 255.0


@dataclass(frozen=True)
class MetricReport:
    ag: float
    en: float
    sf: float
    ei: float

    def __post_init__(self):
        for name in ("ag", "en", "sf", "ei"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"metric {name} must be finite and >= 0, got {v}")


def ag(img: Image) -> float:
    """Average gradient: mean over interior pixels of sqrt((dx^2 + dy^2)/2),
    forward differences."""
    if img.height < 2 or img.width < 2:
        raise ValueError(f"average gradient needs at least 2x2 pixels, got {img.shape}")
    a = img.data * SCALE
    dx = a[:, 1:] - a[:, :-1]
    dy = a[1:, :] - a[:-1, :]
    interior_dx = dx[: img.height - 1, :]
    interior_dy = dy[:, : img.width - 1]
    return float(np.sqrt((interior_dx**2 + interior_dy**2) / 2.0).mean())


def en(img: Image) -> float:
    """Shannon entropy (bits) of the 256-bin histogram of the 8-bit-quantized
    image."""
    counts = np.bincount(quantize_u8(img.data).ravel(), minlength=256)
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log2(p)).sum())


def sf(img: Image) -> float:
    """Spatial frequency: sqrt(RF^2 + CF^2) of row/column forward differences.

    A degenerate axis (single row or column) contributes zero.
    """
    if img.height < 2 and img.width < 2:
        raise ValueError(f"spatial frequency needs 2 pixels on some axis, got {img.shape}")
    a = img.data * SCALE
    rf2 = float(((a[:, 1:] - a[:, :-1]) ** 2).mean()) if img.width >= 2 else 0.0
    cf2 = float(((a[1:, :] - a[:-1, :]) ** 2).mean()) if img.height >= 2 else 0.0
    return float(np.sqrt(rf2 + cf2))


def ei(img: Image) -> float:
    """Edge intensity: mean Sobel gradient magnitude, replicate boundary."""
    if img.height < 3 or img.width < 3:
        raise ValueError(f"edge intensity needs at least 3x3 pixels, got {img.shape}")
    a = img.data * SCALE
    sx = ndimage.sobel(a, axis=1, mode="nearest")
    sy = ndimage.sobel(a, axis=0, mode="nearest")
    return float(np.sqrt(sx**2 + sy**2).mean())


def metric_report(img: Image) -> MetricReport:
    return MetricReport(ag=ag(img), en=en(img), sf=sf(img), ei=ei(img))
