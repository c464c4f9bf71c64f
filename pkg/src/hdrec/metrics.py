"""Structural similarity and peak signal-to-noise ratio.

SSIM follows the standard mean-SSIM recipe: Gaussian window of 11 samples with
sigma 1.5, K1 = 0.01, K2 = 0.03, local statistics over 'valid' window
positions only, averaged into a scalar.  1D signals (single projections) use
the 1D window; 2D images use the separable 2D window.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ShapeError
from .types import ProjectionStack, QualityReport

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

# Sentinel reported when MSE is exactly zero.
PSNR_CAP_DB = 200.0


def _gaussian_kernel() -> np.ndarray:
    half = (SSIM_WINDOW - 1) / 2.0
    x = np.arange(SSIM_WINDOW, dtype=np.float64) - half
    k = np.exp(-0.5 * (x / SSIM_SIGMA) ** 2)
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-mode separable correlation along every axis."""
    out = img
    for axis in range(img.ndim):
        windows = np.lib.stride_tricks.sliding_window_view(out, SSIM_WINDOW, axis=axis)
        out = windows @ kernel
    return out


def ssim_map(a: np.ndarray, b: np.ndarray, data_range: float) -> np.ndarray:
    """Local SSIM at every valid window position (1D or 2D input)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if data_range <= 0:
        raise ParameterError("data_range must be > 0")
    if a.ndim not in (1, 2):
        raise ShapeError("ssim expects a 1D signal or 2D image")
    if min(a.shape) < SSIM_WINDOW:
        raise ShapeError(
            f"every dimension must be >= {SSIM_WINDOW} for the SSIM window, got {a.shape}"
        )
    kernel = _gaussian_kernel()
    mu_a = _windowed_mean(a, kernel)
    mu_b = _windowed_mean(b, kernel)
    var_a = _windowed_mean(a * a, kernel) - mu_a * mu_a
    var_b = _windowed_mean(b * b, kernel) - mu_b * mu_b
    cov = _windowed_mean(a * b, kernel) - mu_a * mu_b
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )


def ssim(
    a: np.ndarray, b: np.ndarray, data_range: float, roi: np.ndarray | None = None
) -> float:
    """Mean SSIM, optionally restricted to window positions where roi is True.

    ``roi`` is indexed like the inputs; a window position counts when the roi
    is True at the window center.
    """
    smap = ssim_map(a, b, data_range)
    if roi is None:
        return float(smap.mean())
    roi = np.asarray(roi, dtype=bool)
    if roi.shape != np.asarray(a).shape:
        raise ShapeError("roi must match the image shape")
    margin = (SSIM_WINDOW - 1) // 2
    sl = tuple(slice(margin, margin + n) for n in smap.shape)
    centers = roi[sl]
    if not centers.any():
        raise ParameterError("roi selects no valid window positions")
    return float(smap[centers].mean())


def psnr(a: np.ndarray, b: np.ndarray, data_range: float) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    if data_range <= 0:
        raise ParameterError("data_range must be > 0")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return 20.0 * np.log10(data_range) - 10.0 * np.log10(mse)


def stack_report(
    a: ProjectionStack, b: ProjectionStack, data_range: float
) -> QualityReport:
    """Per-angle SSIM/PSNR of stack ``a`` against reference ``b``."""
    if a.values.shape != b.values.shape:
        raise ShapeError(
            f"stack shapes differ: {a.values.shape} vs {b.values.shape}"
        )
    items = []
    for i in range(a.n_angles):
        row_a = a.values[i].astype(np.float64)
        row_b = b.values[i].astype(np.float64)
        items.append((i, ssim(row_a, row_b, data_range), psnr(row_a, row_b, data_range)))
    return QualityReport(tuple(items))
