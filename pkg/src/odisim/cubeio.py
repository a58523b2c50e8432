"""Cube container format, synthetic scenes, and rendering helpers.

File format (version 1): a single-line JSON header, a newline, then the
raw payload.  The header is
    {"height": H, "width": W, "channels": C, "wavelengths_nm": [...],
     "dtype": "f32", "byte_order": "little", "layout": "band_sequential"}
and the payload is H*W*C 32-bit little-endian floats, band-sequential and
row-major within each band (i.e. a C-order (C, H, W) array).  Measurement
images (PAN, dispersed) reuse the same container with channels=1 and a
placeholder wavelength of 0.0.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np
from PIL import Image

from .core import NDArrayF, HSICube, band

__all__ = [
    "SYNTH_KINDS",
    "read_cube",
    "write_cube",
    "image_to_cube",
    "synth_cube",
    "render_band_png",
    "render_pseudo_rgb",
    "export_spectrum_csv",
    "default_rgb_response",
]

SYNTH_KINDS = ("gaussian_blobs", "smooth_gradient", "checker_spectra")

_MEASUREMENT_WAVELENGTH_NM = 0.0  # placeholder for non-spectral payloads


def write_cube(cube: HSICube, path: str) -> None:
    header = {
        "height": cube.height,
        "width": cube.width,
        "channels": cube.channels,
        "wavelengths_nm": [float(w) for w in cube.wavelengths_nm],
        "dtype": "f32",
        "byte_order": "little",
        "layout": "band_sequential",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii"))
        fh.write(b"\n")
        fh.write(np.ascontiguousarray(cube.data, dtype="<f4").tobytes())


def read_cube(path: str) -> HSICube:
    with open(path, "rb") as fh:
        blob = fh.read()
    nl = blob.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: no header line found")
    try:
        header = json.loads(blob[:nl].decode("ascii"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: malformed header: {exc}") from exc
    for key in ("height", "width", "channels", "wavelengths_nm", "dtype",
                "byte_order", "layout"):
        if key not in header:
            raise ValueError(f"{path}: header missing field {key!r}")
    if header["dtype"] != "f32":
        raise ValueError(f"{path}: unsupported dtype {header['dtype']!r} (format is f32-only)")
    if header["byte_order"] != "little":
        raise ValueError(f"{path}: unsupported byte order {header['byte_order']!r}")
    if header["layout"] != "band_sequential":
        raise ValueError(f"{path}: unsupported layout {header['layout']!r}")
    h, w, c = int(header["height"]), int(header["width"]), int(header["channels"])
    payload = blob[nl + 1:]
    expected = 4 * h * w * c
    if len(payload) != expected:
        raise ValueError(f"{path}: payload length mismatch: expected {expected} bytes, got {len(payload)}")
    data = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(c, h, w)
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: payload contains non-finite values")
    return HSICube(height=h, width=w, channels=c,
                   wavelengths_nm=np.asarray(header["wavelengths_nm"], dtype=np.float64),
                   data=data)


def image_to_cube(img: NDArrayF) -> HSICube:
    """Wrap a single 2-D measurement image in the cube container (C=1)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    return HSICube(height=img.shape[0], width=img.shape[1], channels=1,
                   wavelengths_nm=np.array([_MEASUREMENT_WAVELENGTH_NM]),
                   data=img[None, :, :])


def _native_wavelengths(channels: int) -> NDArrayF:
    if channels >= 2:
        return np.linspace(450.0, 650.0, channels)
    return np.array([550.0])


def synth_cube(kind: str, dims: tuple[int, int, int], seed: int = 0) -> HSICube:
    """Deterministic synthetic scene; values in [0, 1].

    'smooth_gradient' is closed-form: band c (1-based) equals
        ((x/(H-1) + y/(W-1)) / 2) * (c / C),
    a plane whose slope grows linearly with the channel index (degenerate
    axes contribute 0).  'gaussian_blobs' sums a few random spatial bumps,
    each with its own smooth spectrum.  'checker_spectra' tiles the scene
    into a checkerboard whose two region classes carry distinct spectra.
    """
    kind = str(kind).lower()
    if kind not in SYNTH_KINDS:
        raise ValueError(f"unknown scene kind {kind!r}; choose from {SYNTH_KINDS}")
    h, w, c = (int(v) for v in dims)
    if h < 1 or w < 1 or c < 1:
        raise ValueError(f"dims must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    xs = np.arange(h)[:, None] / max(h - 1, 1)
    ys = np.arange(w)[None, :] / max(w - 1, 1)
    bands = np.arange(1, c + 1, dtype=np.float64)

    if kind == "smooth_gradient":
        plane = (xs + ys) / 2.0
        data = plane[None, :, :] * (bands / c)[:, None, None]
    elif kind == "gaussian_blobs":
        data = np.zeros((c, h, w))
        for _ in range(5):
            cx, cy = rng.random(2)
            spatial_sigma = 0.08 + 0.17 * rng.random()
            bump = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2 * spatial_sigma ** 2))
            center_band = 1 + (c - 1) * rng.random()
            spectral_sigma = max(c / 4.0, 0.75)
            spectrum = np.exp(-((bands - center_band) ** 2) / (2 * spectral_sigma ** 2))
            data += (0.5 + 0.5 * rng.random()) * spectrum[:, None, None] * bump[None, :, :]
        peak = data.max()
        if peak > 0:
            data /= peak
    else:  # checker_spectra
        tile = max(2, min(h, w) // 4)
        parity = ((np.arange(h)[:, None] // tile) + (np.arange(w)[None, :] // tile)) % 2
        centers = 1 + (c - 1) * (0.25 + 0.1 * rng.random(2) - 0.05)
        centers[1] = 1 + (c - 1) * (0.75 + 0.1 * rng.random() - 0.05)
        sigma = max(c / 5.0, 0.75)
        spec_a = np.exp(-((bands - centers[0]) ** 2) / (2 * sigma ** 2))
        spec_b = np.exp(-((bands - centers[1]) ** 2) / (2 * sigma ** 2))
        data = (spec_a[:, None, None] * (1 - parity)[None, :, :]
                + spec_b[:, None, None] * parity[None, :, :])
        # mild brightness ramp so regions are not spatially constant
        data *= (0.6 + 0.4 * ((xs + ys) / 2.0))[None, :, :]
    data = np.clip(data, 0.0, 1.0)
    return HSICube(height=h, width=w, channels=c,
                   wavelengths_nm=_native_wavelengths(c), data=data)


def render_band_png(cube: HSICube, c: int, path: str, bit_depth: int = 8) -> None:
    """Write one band as a grayscale PNG, linearly scaling [0, band max]."""
    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    img = band(cube, c)
    peak = float(img.max())
    scaled = img / peak if peak > 0 else np.zeros_like(img)
    if bit_depth == 8:
        arr = np.round(scaled * 255.0).astype(np.uint8)
    else:
        arr = np.round(scaled * 65535.0).astype(np.uint16)
    Image.fromarray(arr).save(path, format="PNG")


def default_rgb_response(wavelengths_nm: NDArrayF) -> NDArrayF:
    """3xC Gaussian responses at 610/540/470 nm, sigma 40 nm, rows sum to 1."""
    lam = np.asarray(wavelengths_nm, dtype=np.float64)
    resp = np.stack([np.exp(-((lam - mu) ** 2) / (2 * 40.0 ** 2))
                     for mu in (610.0, 540.0, 470.0)])
    return resp / resp.sum(axis=1, keepdims=True)


def render_pseudo_rgb(cube: HSICube, path: str, response=None) -> None:
    """Project the cube through a 3xC response matrix and write an RGB PNG.

    ``response`` may be a 3xC array or a path to a CSV holding one; the
    default is the Gaussian response of default_rgb_response.
    """
    if response is None:
        resp = default_rgb_response(cube.wavelengths_nm)
    elif isinstance(response, (str, os.PathLike)):
        resp = np.atleast_2d(np.loadtxt(response, delimiter=",", dtype=np.float64))
    else:
        resp = np.asarray(response, dtype=np.float64)
    if resp.shape != (3, cube.channels):
        raise ValueError(f"response matrix must be 3x{cube.channels}, got {resp.shape}")
    rgb = np.tensordot(resp, cube.data, axes=([1], [0]))
    peak = float(rgb.max())
    scaled = rgb / peak if peak > 0 else np.zeros_like(rgb)
    arr = np.round(scaled * 255.0).astype(np.uint8).transpose(1, 2, 0)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")


def export_spectrum_csv(cube: HSICube, x: int, y: int, path: str) -> None:
    """Write the spectrum at pixel (row x, column y), 0-based, as CSV.

    Columns: wavelength_nm, value, value_normalized_to_max (zero spectrum
    normalizes to zeros).
    """
    if not (0 <= x < cube.height and 0 <= y < cube.width):
        raise ValueError(f"pixel ({x}, {y}) outside {cube.height}x{cube.width} image")
    spectrum = cube.data[:, x, y]
    peak = float(spectrum.max())
    normalized = spectrum / peak if peak > 0 else np.zeros_like(spectrum)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["wavelength_nm", "value", "value_normalized_to_max"])
        for lam, v, nv in zip(cube.wavelengths_nm, spectrum, normalized):
            writer.writerow([f"{lam:.6g}", f"{v:.9g}", f"{nv:.9g}"])
