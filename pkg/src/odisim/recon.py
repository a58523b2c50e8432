"""Plug-and-play ADMM reconstruction.

Each stage k alternates
  x-step: solve (A_disp^T A_disp + lam*A_pan^T A_pan + rho*I) x = b_k,
          b_k = A_disp^T y_disp + lam*A_pan^T y_pan + rho*(z_k - u_k),
          by preconditioned CG warm-started at the previous x;
  z-step: denoise x_{k+1} + u_k at the stage noise level sigma_k = 1/sqrt(rho_k);
  dual:   u_{k+1} = u_k + x_{k+1} - z_{k+1}.

The denoiser is a classical plug-in prior: identity, channel-wise total
variation (Chambolle dual iteration, weight = multiplier * sigma_k^2), or
a guided filter steered by the PAN image.  The final estimate is the last
z clamped to be non-negative; intermediate iterates are never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NDArrayF, HSICube, PanImage, DispersedImage
from .forward import (OdisSpec, disperse_array, adjoint_disperse_array,
                      pan_array, adjoint_pan_array)
from .linalg import NormalOperator, CyclicPreconditioner, PcgReport, pcg_solve

__all__ = [
    "Schedule",
    "Prior",
    "AdmmState",
    "StageDiagnostics",
    "default_schedule",
    "initialize",
    "x_step",
    "z_step",
    "dual_update",
    "data_residual",
    "objective",
    "reconstruct",
    "tv_denoise",
    "guided_filter",
]


@dataclass(frozen=True)
class Schedule:
    """Per-stage penalty parameters; sigma_k is always derived as 1/sqrt(rho_k)."""

    rho: tuple[float, ...]
    lam: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(float(r) for r in self.rho))
        object.__setattr__(self, "lam", tuple(float(l) for l in self.lam))
        if len(self.rho) != len(self.lam) or not self.rho:
            raise ValueError("rho and lam must be non-empty, equal-length sequences")
        if any(r <= 0 for r in self.rho):
            raise ValueError("rho values must be > 0")
        if any(l < 0 for l in self.lam):
            raise ValueError("lam values must be >= 0")

    @property
    def stages(self) -> int:
        return len(self.rho)

    def sigma(self, k: int) -> float:
        return 1.0 / math.sqrt(self.rho[k])


def default_schedule(K: int, rho_start: float = 0.01, rho_end: float = 1.0,
                     lam: float = 1.0) -> Schedule:
    """Geometric rho ramp from rho_start to rho_end; constant lam."""
    if K < 1:
        raise ValueError("need at least one stage")
    if K == 1:
        rho = (rho_start,)
    else:
        rho = tuple(rho_start * (rho_end / rho_start) ** (k / (K - 1))
                    for k in range(K))
    return Schedule(rho=rho, lam=(lam,) * K)


@dataclass(frozen=True)
class Prior:
    """Plug-in denoiser choice for the z-step.

    kind 'identity': z = v.
    kind 'tv': channel-wise total variation, regularization weight
        = weight * sigma_k^2, ``iterations`` Chambolle dual iterations.
    kind 'guided': per-channel guided filter with the PAN image
        (scaled to [0,1] by 1/C) as guidance; parameters (radius, eps).
    """

    kind: str = "tv"
    weight: float = 1.0
    iterations: int = 30
    radius: int = 4
    eps: float = 1e-4

    def __post_init__(self):
        kind = str(self.kind).lower()
        object.__setattr__(self, "kind", kind)
        if kind not in ("identity", "tv", "guided"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if kind == "tv" and self.iterations < 1:
            raise ValueError("tv prior needs iterations >= 1")
        if kind == "guided":
            if self.radius < 1:
                raise ValueError("guided prior needs radius >= 1")
            if self.eps <= 0:
                raise ValueError("guided prior needs eps > 0")


@dataclass
class AdmmState:
    """Mutable solver state across stages (arrays shaped (C, H, W))."""

    spec: OdisSpec
    x: NDArrayF
    z: NDArrayF
    u: NDArrayF
    stage: int = 0

    def __post_init__(self):
        shape = (self.spec.channels, self.spec.height, self.spec.width)
        for name in ("x", "z", "u"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} shape {getattr(self, name).shape} != {shape}")


@dataclass(frozen=True)
class StageDiagnostics:
    stage: int
    rho: float
    lam: float
    sigma: float
    objective: float
    data_residual_norm: float
    pcg: PcgReport


# ---------------------------------------------------------------------------
# denoisers
# ---------------------------------------------------------------------------

def _divergence(px: NDArrayF, py: NDArrayF) -> NDArrayF:
    div = np.zeros_like(px)
    div[0, :] = px[0, :]
    div[1:-1, :] = px[1:-1, :] - px[:-2, :]
    div[-1, :] = -px[-2, :]
    div[:, 0] += py[:, 0]
    div[:, 1:-1] += py[:, 1:-1] - py[:, :-2]
    div[:, -1] += -py[:, -2]
    return div


def tv_denoise(img: NDArrayF, weight: float, n_iter: int = 30) -> NDArrayF:
    """2-D total-variation denoising via Chambolle's dual projection."""
    img = np.asarray(img, dtype=np.float64)
    if weight <= 0 or n_iter < 1:
        return img.copy()
    px = np.zeros_like(img)
    py = np.zeros_like(img)
    divp = np.zeros_like(img)
    tau = 0.25
    for _ in range(n_iter):
        r = divp - img / weight
        gx = np.zeros_like(img)
        gy = np.zeros_like(img)
        gx[:-1, :] = np.diff(r, axis=0)
        gy[:, :-1] = np.diff(r, axis=1)
        norm = np.sqrt(gx ** 2 + gy ** 2)
        px = (px + tau * gx) / (1.0 + tau * norm)
        py = (py + tau * gy) / (1.0 + tau * norm)
        divp = _divergence(px, py)
    return img - weight * divp


def _boxsum(img: NDArrayF, r: int) -> NDArrayF:
    """Sum over a (2r+1)^2 window, edge windows truncated to the image."""
    H, W = img.shape
    ii = np.zeros((H + 1, W + 1))
    ii[1:, 1:] = np.cumsum(np.cumsum(img, axis=0), axis=1)
    y0 = np.clip(np.arange(H) - r, 0, H)
    y1 = np.clip(np.arange(H) + r + 1, 0, H)
    x0 = np.clip(np.arange(W) - r, 0, W)
    x1 = np.clip(np.arange(W) + r + 1, 0, W)
    return (ii[np.ix_(y1, x1)] - ii[np.ix_(y0, x1)]
            - ii[np.ix_(y1, x0)] + ii[np.ix_(y0, x0)])


def guided_filter(guide: NDArrayF, img: NDArrayF, radius: int, eps: float) -> NDArrayF:
    """Edge-preserving smoothing of ``img`` steered by ``guide`` (He et al. scheme)."""
    guide = np.asarray(guide, dtype=np.float64)
    img = np.asarray(img, dtype=np.float64)
    n = _boxsum(np.ones_like(guide), radius)
    mean_g = _boxsum(guide, radius) / n
    mean_i = _boxsum(img, radius) / n
    corr_gg = _boxsum(guide * guide, radius) / n
    corr_gi = _boxsum(guide * img, radius) / n
    var_g = corr_gg - mean_g ** 2
    cov_gi = corr_gi - mean_g * mean_i
    a = cov_gi / (var_g + eps)
    b = mean_i - a * mean_g
    mean_a = _boxsum(a, radius) / n
    mean_b = _boxsum(b, radius) / n
    return mean_a * guide + mean_b


# ---------------------------------------------------------------------------
# ADMM steps
# ---------------------------------------------------------------------------

def initialize(y_disp: DispersedImage, y_pan: PanImage, spec: OdisSpec) -> NDArrayF:
    """PAN-replication start: x0(x, y, c) = y_pan(x, y) / C.

    In the noiseless case this satisfies the PAN measurement exactly.
    """
    if (y_pan.height, y_pan.width) != (spec.height, spec.width):
        raise ValueError("PAN shape does not match spec")
    if y_disp.width != spec.detector_width or y_disp.height != spec.height:
        raise ValueError("dispersed shape does not match spec")
    return adjoint_pan_array(y_pan.data / spec.channels, spec.channels)


def x_step(state: AdmmState, y_disp: DispersedImage, y_pan: PanImage,
           rho: float, lam: float, T: int = 10, tol: float = 1e-6,
           pre: CyclicPreconditioner | None = None) -> tuple[NDArrayF, PcgReport]:
    """Solve the data-consistency subproblem by warm-started PCG."""
    spec = state.spec
    op = NormalOperator(spec, rho=rho, lam=lam)
    if pre is None:
        pre = CyclicPreconditioner(spec, rho=rho, lam=lam)
    b = adjoint_disperse_array(y_disp.data, spec.step, spec.channels, spec.width)
    if lam:
        b += lam * adjoint_pan_array(y_pan.data, spec.channels)
    b += rho * (state.z - state.u)
    return pcg_solve(op, pre, b, T=T, tol=tol, x0=state.x)


def z_step(v: NDArrayF, prior: Prior, sigma: float,
           y_pan: PanImage | NDArrayF | None = None) -> NDArrayF:
    """Apply the plug-in denoiser to v = x_{k+1} + u_k."""
    if prior.kind == "identity":
        return np.array(v, dtype=np.float64)
    if prior.kind == "tv":
        w = prior.weight * sigma ** 2
        return np.stack([tv_denoise(ch, w, prior.iterations) for ch in v])
    # guided filter: PAN image as guidance, scaled to the per-channel range
    if y_pan is None:
        raise ValueError("guided prior needs the PAN image as guidance")
    g = np.asarray(getattr(y_pan, "data", y_pan), dtype=np.float64) / v.shape[0]
    return np.stack([guided_filter(g, ch, prior.radius, prior.eps) for ch in v])


def dual_update(state: AdmmState) -> NDArrayF:
    """u_{k+1} = u_k + x_{k+1} - z_{k+1} (exact arithmetic identity)."""
    return state.u + state.x - state.z


def data_residual(x: NDArrayF, y_disp: DispersedImage, spec: OdisSpec) -> NDArrayF:
    """Back-projected dispersed-arm residual A_disp^T (y_disp - A_disp x)."""
    r = y_disp.data - disperse_array(np.asarray(x, dtype=np.float64), spec.step)
    return adjoint_disperse_array(r, spec.step, spec.channels, spec.width)


def objective(x: NDArrayF, y_disp: DispersedImage, y_pan: PanImage,
              lam: float) -> float:
    """Data terms only: 0.5*||A_disp x - y_disp||^2 + (lam/2)*||A_pan x - y_pan||^2."""
    x = np.asarray(x, dtype=np.float64)
    rd = disperse_array(x, y_disp.step) - y_disp.data
    val = 0.5 * float(np.sum(rd ** 2))
    if lam:
        rp = pan_array(x) - y_pan.data
        val += 0.5 * lam * float(np.sum(rp ** 2))
    return val


def reconstruct(y_disp: DispersedImage, y_pan: PanImage, spec: OdisSpec,
                schedule: Schedule | None = None, prior: Prior | None = None,
                T: int = 10, tol: float = 1e-6,
                wavelengths_nm=None) -> tuple[HSICube, tuple[StageDiagnostics, ...]]:
    """Full K-stage reconstruction of an ODIS acquisition.

    Returns the final z clamped to be non-negative as an HSICube, plus
    per-stage diagnostics.  ``wavelengths_nm`` labels the output bands
    (default: the instrument's native 450-650 nm grid).
    """
    if schedule is None:
        schedule = default_schedule(8)
    if prior is None:
        prior = Prior(kind="tv", weight=2e-3)
    x0 = initialize(y_disp, y_pan, spec)
    state = AdmmState(spec=spec, x=x0, z=x0.copy(), u=np.zeros_like(x0))
    diagnostics: list[StageDiagnostics] = []
    for k in range(schedule.stages):
        rho, lam, sigma = schedule.rho[k], schedule.lam[k], schedule.sigma(k)
        state.x, report = x_step(state, y_disp, y_pan, rho, lam, T=T, tol=tol)
        state.z = z_step(state.x + state.u, prior, sigma, y_pan)
        state.u = dual_update(state)
        state.stage = k + 1
        diagnostics.append(StageDiagnostics(
            stage=k + 1, rho=rho, lam=lam, sigma=sigma,
            objective=objective(state.x, y_disp, y_pan, lam),
            data_residual_norm=float(np.linalg.norm(data_residual(state.x, y_disp, spec))),
            pcg=report))
    estimate = np.maximum(state.z, 0.0)
    if wavelengths_nm is None:
        if spec.channels >= 2:
            wavelengths_nm = np.linspace(450.0, 650.0, spec.channels)
        else:
            wavelengths_nm = np.array([550.0])
    cube = HSICube(height=spec.height, width=spec.width, channels=spec.channels,
                   wavelengths_nm=np.asarray(wavelengths_nm, dtype=np.float64),
                   data=estimate)
    return cube, tuple(diagnostics)
