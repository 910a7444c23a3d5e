"""PSNR and SSIM for 8-bit grayscale images."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .image_io import ImageBuffer, PixelMask

__all__ = ["QualityScore", "psnr", "ssim", "quality", "SSIM_WINDOW", "C1", "C2"]

PEAK = 255.0
SSIM_WINDOW = 8
C1 = (0.01 * PEAK) ** 2
C2 = (0.03 * PEAK) ** 2


@dataclass(frozen=True)
class QualityScore:
    psnr: float
    ssim: float


def _check_pair(a: ImageBuffer, b: ImageBuffer) -> None:
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"image sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}")


def psnr(a: ImageBuffer, b: ImageBuffer, region: PixelMask | None = None) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs.

    ``region`` restricts the error to pixels flagged ``False`` in the mask
    (the pixels that were extrapolated).
    """
    _check_pair(a, b)
    diff = a.pixels.astype(np.int64) - b.pixels.astype(np.int64)
    if region is not None:
        if region.flags.shape != diff.shape:
            raise ValueError("region mask does not match image size")
        diff = diff[~region.flags]
        if diff.size == 0:
            return math.inf
    sq = int(np.sum(diff * diff))
    if sq == 0:
        return math.inf
    mse = sq / diff.size
    return 10.0 * math.log10(PEAK * PEAK / mse)


def _box_sums(values: np.ndarray, k: int) -> np.ndarray:
    # exact integer sums over every k x k window (valid positions only)
    integral = np.zeros((values.shape[0] + 1, values.shape[1] + 1), dtype=np.int64)
    integral[1:, 1:] = values.cumsum(0).cumsum(1)
    return integral[k:, k:] - integral[:-k, k:] - integral[k:, :-k] + integral[:-k, :-k]


def ssim(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean SSIM over all 8x8 windows at stride 1, uniform weights.

    Window statistics are population moments computed from exact integer
    sums, so ``ssim(a, a)`` is exactly 1.
    """
    _check_pair(a, b)
    k = SSIM_WINDOW
    if min(a.width, a.height) < k:
        raise ValueError(f"SSIM needs at least {k}x{k} pixels, got {a.width}x{a.height}")
    x = a.pixels.astype(np.int64)
    y = b.pixels.astype(np.int64)
    n = k * k
    sx, sy = _box_sums(x, k), _box_sums(y, k)
    sxx, syy, sxy = _box_sums(x * x, k), _box_sums(y * y, k), _box_sums(x * y, k)
    mx, my = sx / n, sy / n
    # n^2 * covariance, exact in int64 before the division
    vx = (n * sxx - sx * sx) / (n * n)
    vy = (n * syy - sy * sy) / (n * n)
    cxy = (n * sxy - sx * sy) / (n * n)
    num = (2.0 * mx * my + C1) * (2.0 * cxy + C2)
    den = (mx * mx + my * my + C1) * (vx + vy + C2)
    return float(np.mean(num / den))


def quality(a: ImageBuffer, b: ImageBuffer) -> QualityScore:
    return QualityScore(psnr(a, b), ssim(a, b))
