"""Calibrated low-light measurement noise.

Scene illuminance sets an effective sensor bit depth: the full-scale
signal (clean value 1.0) maps to ``2**shot_bits`` photoelectrons, shot
noise is Poisson in electrons, and a Gaussian read noise of
``read_sigma_e`` electrons (default 9.29) is added before rescaling back
to normalized units.  The lux -> bits calibration table is

    lux   2  4  9  18  35  141
    bits  5  6  7   8   9   11

with values between table points interpolated linearly in log2(lux) and
rounded; outside the table the edge value is used.

Randomness comes from a counter-based Philox generator keyed by the
model seed, so outputs are reproducible regardless of how the caller
schedules work across threads or processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NDArrayF

__all__ = [
    "IlluminationModel",
    "LUX_TO_BITS_TABLE",
    "lux_to_shot_bits",
    "apply_noise",
    "measurement_snr",
    "SNR_CAP_DB",
]

LUX_TO_BITS_TABLE: tuple[tuple[float, int], ...] = (
    (2, 5), (4, 6), (9, 7), (18, 8), (35, 9), (141, 11))

SNR_CAP_DB = 300.0

# Poisson sampling switches to its Gaussian approximation above this count
_GAUSSIAN_APPROX_ELECTRONS = 1000.0


def lux_to_shot_bits(lux: float) -> int:
    """Effective shot-noise bit depth for a scene illuminance in lux."""
    if lux <= 0:
        raise ValueError(f"lux must be positive, got {lux}")
    pts = LUX_TO_BITS_TABLE
    for tab_lux, bits in pts:
        if lux == tab_lux:
            return bits
    if lux <= pts[0][0]:
        return pts[0][1]
    if lux >= pts[-1][0]:
        return pts[-1][1]
    lg = math.log2(lux)
    for (l0, b0), (l1, b1) in zip(pts, pts[1:]):
        if l0 < lux < l1:
            t = (lg - math.log2(l0)) / (math.log2(l1) - math.log2(l0))
            return int(round(b0 + t * (b1 - b0)))
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class IlluminationModel:
    """Noise parameters for one acquisition.

    ``shot_bits`` is derived from ``lux`` when not given explicitly.
    """

    lux: float
    exposure_ms: float = 500.0
    shot_bits: int | None = None
    read_sigma_e: float = 9.29
    seed: int = 0

    def __post_init__(self):
        if self.shot_bits is None:
            object.__setattr__(self, "shot_bits", lux_to_shot_bits(self.lux))
        if not 1 <= self.shot_bits <= 16:
            raise ValueError(f"shot_bits must be in [1, 16], got {self.shot_bits}")
        if self.read_sigma_e < 0:
            raise ValueError("read_sigma_e must be >= 0")
        if self.exposure_ms <= 0:
            raise ValueError("exposure_ms must be > 0")


def apply_noise(clean, model: IlluminationModel) -> NDArrayF:
    """Sample one noisy realization of a clean measurement.

    ``clean`` must be non-negative and normalized so full scale is 1.0.
    Pipeline: scale to electrons e = clean * 2**shot_bits; draw
    Poisson(e) (Gaussian N(e, e) above 1000 electrons); add
    N(0, read_sigma_e^2); rescale by 2**-shot_bits; clamp at 0.
    Deterministic for a fixed (clean, model) pair.
    """
    clean = np.asarray(clean, dtype=np.float64)
    if np.any(clean < 0):
        raise ValueError("clean measurement must be non-negative")
    rng = np.random.Generator(np.random.Philox(key=model.seed))
    peak = float(2 ** model.shot_bits)
    electrons = clean * peak

    noisy = np.empty_like(electrons)
    big = electrons > _GAUSSIAN_APPROX_ELECTRONS
    small = ~big
    if np.any(small):
        noisy[small] = rng.poisson(electrons[small])
    if np.any(big):
        e = electrons[big]
        noisy[big] = e + np.sqrt(e) * rng.standard_normal(e.shape)
    if model.read_sigma_e > 0:
        noisy += rng.normal(0.0, model.read_sigma_e, size=noisy.shape)
    return np.maximum(noisy / peak, 0.0)


def measurement_snr(clean, noisy) -> float:
    """10*log10(sum clean^2 / sum (noisy - clean)^2), capped at 300 dB."""
    clean = np.asarray(clean, dtype=np.float64)
    noisy = np.asarray(noisy, dtype=np.float64)
    if clean.shape != noisy.shape:
        raise ValueError(f"shape mismatch {clean.shape} vs {noisy.shape}")
    sig = float(np.sum(clean ** 2))
    if sig == 0.0:
        raise ValueError("clean measurement is all-zero; SNR undefined")
    err = float(np.sum((noisy - clean) ** 2))
    if err == 0.0:
        return SNR_CAP_DB
    return min(10.0 * math.log10(sig / err), SNR_CAP_DB)
