"""Matrix-free forward operators for ODIS and competitor architectures.

The ODIS instrument takes two sequential full-throughput exposures of the
same scene:

* dispersed arm: band c is shifted along y by ``d*(c-1)`` pixels and all
  bands are summed on a detector of width ``W + d*(C-1)``, so every
  shifted sample lands on the detector (no truncation, no wraparound);
* PAN arm: plain channel sum at each pixel (prism at zero dispersion).

Competitor systems for the cross-system study are modelled at desk scale:
single-disperser CASSI (mask then disperse), its dual-camera variant with
a 50/50 beam splitter and a PAN arm, dual-disperser CASSI (shift, mask,
unshift, channel sum; width-W output), and a per-pixel single-channel
mosaic system (PMVIS) with a PAN arm.

Uniform losses (beam splitter) multiply the clean signal; mask/selection
losses act structurally by zeroing or selecting samples.  Per-arm
effective throughput products are recorded on the Measurements for
accounting; photon noise is applied downstream by the noise module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import NDArrayF, HSICube, PanImage, DispersedImage

__all__ = [
    "OdisSpec",
    "SystemSpec",
    "Measurements",
    "SYSTEM_KINDS",
    "odis_disperse",
    "odis_pan",
    "odis_adjoint_disperse",
    "odis_adjoint_pan",
    "joint_forward",
    "competitor_forward",
    "effective_throughput",
    "random_binary_mask",
    "mosaic_channel_map",
    "disperse_array",
    "pan_array",
    "adjoint_disperse_array",
    "adjoint_pan_array",
]

SYSTEM_KINDS = ("odis", "sdcassi", "sdcassi_dc", "ddcassi_dc", "pmvis_dc")
_DUAL_CAMERA = ("sdcassi_dc", "ddcassi_dc", "pmvis_dc")


@dataclass(frozen=True)
class OdisSpec:
    """Geometry of one ODIS acquisition: dims (H, W, C) and step d."""

    height: int
    width: int
    channels: int
    step: int = 1

    def __post_init__(self):
        if not (isinstance(self.step, (int, np.integer)) and self.step >= 1):
            raise ValueError(f"dispersion step must be a positive integer, got {self.step}")
        if min(self.height, self.width, self.channels) < 1:
            raise ValueError("dims must be positive")

    @property
    def detector_width(self) -> int:
        return self.width + self.step * (self.channels - 1)

    @property
    def size(self) -> int:
        return self.height * self.width * self.channels


@dataclass(frozen=True)
class SystemSpec:
    """A simulated architecture for the cross-system study.

    ``mask`` is an H x W binary aperture for the CASSI kinds, or an
    H x W channel-index map (values 1..C) for the mosaic kind.  The
    splitter fraction defaults to 0.5 for dual-camera kinds and 1.0
    otherwise.
    """

    kind: str
    step: int = 1
    mask: np.ndarray | None = field(default=None, repr=False)
    splitter: float | None = None

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind not in SYSTEM_KINDS:
            raise ValueError(f"unknown system kind {self.kind!r}; expected one of {SYSTEM_KINDS}")
        splitter = self.splitter
        if splitter is None:
            splitter = 0.5 if kind in _DUAL_CAMERA else 1.0
        if not 0 < splitter <= 1:
            raise ValueError(f"splitter fraction must be in (0, 1], got {splitter}")
        object.__setattr__(self, "splitter", float(splitter))
        if self.mask is not None:
            mask = np.asarray(self.mask)
            if kind == "pmvis_dc":
                if not np.issubdtype(mask.dtype, np.integer) or mask.min() < 1:
                    raise ValueError("pmvis mask must be an integer channel map with values >= 1")
            elif kind != "odis":
                vals = np.unique(mask)
                if not np.all(np.isin(vals, (0, 1))):
                    raise ValueError("cassi mask entries must be 0 or 1")
                mask = mask.astype(np.float64)
            mask.flags.writeable = False
            object.__setattr__(self, "mask", mask)
        elif kind not in ("odis",):
            raise ValueError(f"system kind {kind!r} requires a mask")


@dataclass(frozen=True)
class Measurements:
    """Per-arm measurements plus effective throughput scale factors."""

    coded: DispersedImage | None = None
    pan: PanImage | None = None
    coded_scale: float | None = None
    pan_scale: float | None = None

    def __post_init__(self):
        if self.coded is None and self.pan is None:
            raise ValueError("at least one measurement arm must be present")
        for s in (self.coded_scale, self.pan_scale):
            if s is not None and not 0 < s <= 1:
                raise ValueError(f"throughput scale must be in (0, 1], got {s}")


# ---------------------------------------------------------------------------
# array-level operators (solver hot path, plain ndarrays in/out)
# ---------------------------------------------------------------------------

def disperse_array(x: NDArrayF, d: int) -> NDArrayF:
    """Shift-and-sum a (C, H, W) array into an (H, W + d*(C-1)) image."""
    C, H, W = x.shape
    out = np.zeros((H, W + d * (C - 1)), dtype=np.float64)
    for c in range(C):
        out[:, c * d:c * d + W] += x[c]
    return out


def adjoint_disperse_array(y: NDArrayF, d: int, C: int, W: int) -> NDArrayF:
    """Adjoint of disperse_array: band c reads columns [d*c, d*c + W)."""
    H = y.shape[0]
    out = np.empty((C, H, W), dtype=np.float64)
    for c in range(C):
        out[c] = y[:, c * d:c * d + W]
    return out


def pan_array(x: NDArrayF) -> NDArrayF:
    """Channel sum of a (C, H, W) array: the PAN image."""
    return x.sum(axis=0)


def adjoint_pan_array(img: NDArrayF, C: int) -> NDArrayF:
    """Adjoint of pan_array: replicate the image into every channel."""
    return np.broadcast_to(img, (C,) + img.shape).copy()


# ---------------------------------------------------------------------------
# typed ODIS operators
# ---------------------------------------------------------------------------

def odis_disperse(cube: HSICube, d: int = 1) -> DispersedImage:
    """Dispersed measurement Y(x, y) = sum_c X(x, y - d*(c-1), c).

    Bands are taken as zero outside the column range [0, W); the output
    width W + d*(C-1) collects every shifted sample.
    """
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise ValueError(f"dispersion step must be a positive integer, got {d}")
    out = disperse_array(cube.data, d)
    return DispersedImage(height=cube.height, width=out.shape[1], step=int(d), data=out)


def odis_pan(cube: HSICube) -> PanImage:
    """PAN measurement Y(x, y) = sum_c X(x, y, c)."""
    return PanImage(height=cube.height, width=cube.width, data=pan_array(cube.data))


def odis_adjoint_disperse(img: DispersedImage, spec: OdisSpec) -> NDArrayF:
    """Apply the dispersed-arm adjoint; returns a (C, H, W) array.

    The result is an operator output, not a scene: entries may be negative.
    """
    if img.width != spec.detector_width:
        raise ValueError(
            f"dispersed width {img.width} != W + d*(C-1) = {spec.detector_width}")
    return adjoint_disperse_array(img.data, spec.step, spec.channels, spec.width)


def odis_adjoint_pan(img: PanImage, C: int) -> NDArrayF:
    """Apply the PAN-arm adjoint: replicate into C channels."""
    return adjoint_pan_array(img.data, C)


def joint_forward(cube: HSICube, spec: OdisSpec) -> Measurements:
    """Both ODIS exposures; each sequential exposure has throughput 1.0."""
    return Measurements(coded=odis_disperse(cube, spec.step),
                        pan=odis_pan(cube),
                        coded_scale=1.0, pan_scale=1.0)


# ---------------------------------------------------------------------------
# competitor systems
# ---------------------------------------------------------------------------

def _check_mask(sys: SystemSpec, cube: HSICube) -> np.ndarray:
    mask = sys.mask
    if mask is None or mask.shape != (cube.height, cube.width):
        have = None if mask is None else mask.shape
        raise ValueError(f"mask shape {have} does not match cube "
                         f"({cube.height}, {cube.width})")
    return mask


def competitor_forward(cube: HSICube, sys: SystemSpec) -> Measurements:
    """Clean measurements of ``cube`` through a competitor architecture.

    The beam splitter multiplies the clean signal; coded/mask losses act
    structurally.  Recorded scale factors are the per-arm effective
    throughput products (mask transmittance x splitter).
    """
    x = cube.data
    C, H, W = x.shape
    d, s = sys.step, sys.splitter

    if sys.kind == "odis":
        return joint_forward(cube, OdisSpec(H, W, C, step=d))

    if sys.kind in ("sdcassi", "sdcassi_dc"):
        mask = _check_mask(sys, cube)
        coded = s * disperse_array(mask[None] * x, d)
        coded_img = DispersedImage(height=H, width=coded.shape[1], step=d, data=coded)
        coded_scale = float(mask.mean()) * s
        if sys.kind == "sdcassi":
            return Measurements(coded=coded_img, coded_scale=coded_scale)
        pan = PanImage(height=H, width=W, data=s * pan_array(x))
        return Measurements(coded=coded_img, pan=pan,
                            coded_scale=coded_scale, pan_scale=s)

    if sys.kind == "ddcassi_dc":
        mask = _check_mask(sys, cube)
        # shift -> mask -> unshift collapses to a per-channel shifted mask;
        # shifts wrap cyclically so the H x W mask covers the sheared field
        coded = np.zeros((H, W), dtype=np.float64)
        for c in range(C):
            coded += np.roll(mask, -c * d, axis=1) * x[c]
        coded *= s
        coded_img = DispersedImage(height=H, width=W, step=d, data=coded)
        pan = PanImage(height=H, width=W, data=s * pan_array(x))
        return Measurements(coded=coded_img, pan=pan,
                            coded_scale=float(mask.mean()) * s, pan_scale=s)

    if sys.kind == "pmvis_dc":
        m = _check_mask(sys, cube)
        if m.max() > C:
            raise ValueError(f"channel map refers to band {m.max()} > C = {C}")
        coded = s * np.take_along_axis(x, (m - 1)[None], axis=0)[0]
        coded_img = DispersedImage(height=H, width=W, step=d, data=coded)
        pan = PanImage(height=H, width=W, data=s * pan_array(x))
        return Measurements(coded=coded_img, pan=pan,
                            coded_scale=s / C, pan_scale=s)

    raise ValueError(f"unknown system kind {sys.kind!r}")


def effective_throughput(sys: SystemSpec, channels: int | None = None) -> dict[str, float]:
    """Nominal per-arm light throughput fractions, keyed 'coded' / 'pan'.

    Uses the design values of the protocol (50%-transmittance binary
    masks, 50/50 splitter for dual-camera kinds, 1/C selection for the
    mosaic system) rather than the empirical mean of a particular mask.
    """
    if sys.kind == "odis":
        return {"coded": 1.0, "pan": 1.0}
    if sys.kind == "sdcassi":
        return {"coded": 0.5 * sys.splitter}
    if sys.kind in ("sdcassi_dc", "ddcassi_dc"):
        return {"coded": 0.5 * sys.splitter, "pan": sys.splitter}
    if sys.kind == "pmvis_dc":
        if channels is None:
            if sys.mask is None:
                raise ValueError("channel count needed for mosaic throughput")
            channels = int(sys.mask.max())
        return {"coded": sys.splitter / channels, "pan": sys.splitter}
    raise ValueError(f"unknown system kind {sys.kind!r}")


def random_binary_mask(H: int, W: int, transmittance: float = 0.5,
                       seed: int = 0) -> np.ndarray:
    """I.i.d. Bernoulli(transmittance) binary mask, deterministic per seed."""
    if not 0 < transmittance < 1:
        raise ValueError(f"transmittance must be in (0, 1), got {transmittance}")
    rng = np.random.default_rng(seed)
    return (rng.random((H, W)) < transmittance).astype(np.float64)


def mosaic_channel_map(H: int, W: int, C: int) -> np.ndarray:
    """Periodic channel-index map (values 1..C): each pixel samples one band."""
    r = int(np.ceil(np.sqrt(C)))
    xx, yy = np.meshgrid(np.arange(H), np.arange(W), indexing="ij")
    cell = (xx % r) * r + (yy % r)
    return (cell % C + 1).astype(np.int64)
