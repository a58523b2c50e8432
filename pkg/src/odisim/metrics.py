"""Reconstruction quality metrics: PSNR, SSIM, SAM."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage.metrics import structural_similarity

__all__ = ["MetricReport", "psnr", "ssim", "sam", "evaluate", "PSNR_CAP_DB"]

PSNR_CAP_DB = 300.0


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float
    sam_degrees: float
    band_psnr_db: tuple[float, ...]
    sam_excluded_pixels: int = 0


def _cube_arrays(reference, estimate):
    r = np.asarray(getattr(reference, "data", reference), dtype=np.float64)
    e = np.asarray(getattr(estimate, "data", estimate), dtype=np.float64)
    if r.shape != e.shape:
        raise ValueError(f"shape mismatch {r.shape} vs {e.shape}")
    return r, e


def psnr(reference, estimate, peak: float = 1.0) -> float:
    """10*log10(peak^2 / MSE) over all voxels; zero MSE caps at 300 dB."""
    if peak <= 0:
        raise ValueError("peak must be > 0")
    r, e = _cube_arrays(reference, estimate)
    mse = float(np.mean((r - e) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * math.log10(peak ** 2 / mse), PSNR_CAP_DB)


def ssim(reference_band, estimate_band) -> float:
    """Windowed SSIM of two bands: 11x11 Gaussian window sigma=1.5,
    K1=0.01, K2=0.03, dynamic range 1.0; mean over windows."""
    r, e = _cube_arrays(reference_band, estimate_band)
    if min(r.shape) < 11:
        raise ValueError(f"image {r.shape} smaller than the 11x11 SSIM window")
    return float(structural_similarity(
        r, e, win_size=11, gaussian_weights=True, sigma=1.5,
        use_sample_covariance=False, K1=0.01, K2=0.03, data_range=1.0))


def sam(reference, estimate) -> tuple[float, int]:
    """Mean per-pixel spectral angle in degrees.

    Pixels where either spectrum has zero norm are excluded (undefined
    angle); the exclusion count is returned alongside the mean.
    """
    r, e = _cube_arrays(reference, estimate)
    C = r.shape[0]
    rf = r.reshape(C, -1)
    ef = e.reshape(C, -1)
    rn = np.linalg.norm(rf, axis=0)
    en = np.linalg.norm(ef, axis=0)
    valid = (rn > 0) & (en > 0)
    excluded = int(np.size(rn) - np.count_nonzero(valid))
    if not np.any(valid):
        return 0.0, excluded
    cosang = (rf[:, valid] * ef[:, valid]).sum(axis=0) / (rn[valid] * en[valid])
    ang = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    return float(ang.mean()), excluded


def evaluate(reference, estimate, peak: float = 1.0) -> MetricReport:
    """Full metric report; cube-level SSIM is the mean over per-band SSIM."""
    r, e = _cube_arrays(reference, estimate)
    band_psnr = tuple(
        min(PSNR_CAP_DB,
            PSNR_CAP_DB if mse == 0 else 10.0 * math.log10(peak ** 2 / mse))
        for mse in (float(np.mean((rb - eb) ** 2)) for rb, eb in zip(r, e)))
    ssim_mean = float(np.mean([ssim(rb, eb) for rb, eb in zip(r, e)]))
    sam_deg, excluded = sam(r, e)
    return MetricReport(psnr_db=psnr(r, e, peak), ssim=ssim_mean,
                        sam_degrees=sam_deg, band_psnr_db=band_psnr,
                        sam_excluded_pixels=excluded)
