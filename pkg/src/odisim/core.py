"""Core data types for hyperspectral cubes and spectrometer measurements.

Conventions used throughout the toolkit:

* A cube holds ``C`` spectral bands of ``H x W`` pixels.  Intensities are
  64-bit floats, normalized so a full-scale scene has per-channel values
  in ``[0, 1]``.  Radiometric scaling to photoelectrons happens only in
  the noise module.
* Memory layout is band-sequential: all of band 1, then band 2, ...
  The flat index of (row x, col y, band c) is ``((c-1)*H + x)*W + y``
  (1-based band).  Internally this is a C-contiguous array of shape
  ``(C, H, W)``.
* Dispersion always acts along the image y axis (columns).  Rotating a
  scene so that dispersion is column-aligned is the caller's job.

All types are immutable after construction (backing arrays are marked
read-only) and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

NDArrayF = npt.NDArray[np.floating]

__all__ = [
    "HSICube",
    "PanImage",
    "DispersedImage",
    "Wavelengths",
    "make_cube",
    "band",
    "linspace_wavelengths",
]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class HSICube:
    """A hyperspectral cube: ``C`` wavelength-labelled bands of ``H x W``.

    ``data`` has shape ``(C, H, W)`` so that ``data.ravel()`` is the
    band-sequential flat layout.
    """

    height: int
    width: int
    channels: int
    wavelengths_nm: NDArrayF
    data: NDArrayF = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "wavelengths_nm",
                           _freeze(np.atleast_1d(self.wavelengths_nm)))
        object.__setattr__(self, "data", _freeze(self.data))
        if self.data.shape != (self.channels, self.height, self.width):
            raise ValueError(
                f"data shape {self.data.shape} != "
                f"(C={self.channels}, H={self.height}, W={self.width})")
        if self.wavelengths_nm.shape != (self.channels,):
            raise ValueError(
                f"expected {self.channels} wavelengths, "
                f"got {self.wavelengths_nm.shape[0]}")
        if not np.all(np.diff(self.wavelengths_nm) > 0):
            raise ValueError("wavelengths must be strictly increasing")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("cube intensities must be finite")
        if np.any(self.data < 0):
            raise ValueError("cube intensities must be non-negative")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.channels, self.height, self.width)


@dataclass(frozen=True)
class PanImage:
    """A panchromatic (spectrally integrated) image, ``H x W``."""

    height: int
    width: int
    data: NDArrayF = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(self.data))
        if self.data.shape != (self.height, self.width):
            raise ValueError(
                f"data shape {self.data.shape} != (H={self.height}, W={self.width})")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image values must be finite")


@dataclass(frozen=True)
class DispersedImage:
    """A dispersed measurement: ``H x (W + d*(C-1))`` shift-and-sum image.

    ``width`` is the detector width, already widened by the per-channel
    lateral shift; ``step`` is the dispersion step d in pixels/channel.
    """

    height: int
    width: int
    step: int
    data: NDArrayF = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "data", _freeze(self.data))
        if not (isinstance(self.step, (int, np.integer)) and self.step >= 1):
            raise ValueError(f"dispersion step must be a positive integer, got {self.step}")
        if self.data.shape != (self.height, self.width):
            raise ValueError(
                f"data shape {self.data.shape} != (H={self.height}, W_d={self.width})")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image values must be finite")


@dataclass(frozen=True)
class Wavelengths:
    """An evenly spaced wavelength grid from ``start_nm`` to ``end_nm``."""

    start_nm: float
    end_nm: float
    count: int

    def __post_init__(self):
        if not self.start_nm < self.end_nm:
            raise ValueError("start_nm must be < end_nm")
        if self.count < 1:
            raise ValueError("count must be >= 1")

    def values(self) -> NDArrayF:
        if self.count == 1:
            return np.array([self.start_nm])
        return np.linspace(self.start_nm, self.end_nm, self.count)


def make_cube(H: int, W: int, C: int, wavelengths, data) -> HSICube:
    """Build a validated cube from band-sequential data.

    ``data`` may be flat of length H*W*C (band-sequential) or already
    shaped ``(C, H, W)``.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        if arr.size != H * W * C:
            raise ValueError(
                f"data length {arr.size} != H*W*C = {H * W * C}")
        arr = arr.reshape(C, H, W)
    return HSICube(height=H, width=W, channels=C,
                   wavelengths_nm=np.asarray(wavelengths, dtype=np.float64),
                   data=arr)


def band(cube: HSICube, c: int) -> NDArrayF:
    """Return band ``c`` (1-based) as an ``H x W`` array."""
    if not 1 <= c <= cube.channels:
        raise IndexError(f"band {c} out of range 1..{cube.channels}")
    return cube.data[c - 1]


def linspace_wavelengths(start_nm: float, end_nm: float, C: int) -> NDArrayF:
    """C equally spaced wavelengths including both endpoints."""
    if C < 2:
        raise ValueError("need at least 2 wavelengths to span a range")
    if not start_nm < end_nm:
        raise ValueError("start_nm must be < end_nm")
    return np.linspace(start_nm, end_nm, C)
