"""Normal-equation machinery for the reconstruction x-step.

The data-fidelity subproblem reduces to solving ``H x = b`` with

    H = A_disp^T A_disp + lam * A_pan^T A_pan + rho * I

applied matrix-free through the forward module.  Under a cyclic model of
the shift-and-sum (circular shifts on a padded row of length L, PAN over
all L columns), H becomes block-circulant along y: an FFT per (row, band)
line turns it into independent C x C systems per frequency,

    N(f) = psi(f) psi(f)^H + lam * 1 1^T + rho * I,

each a rank-one-plus-rank-one update of rho*I.  Its inverse is applied
with Sherman-Morrison for the shift term and a Woodbury fold with a
precomputed per-frequency scalar for the PAN term.  The resulting
preconditioner is the exact inverse of the cyclic operator and costs
exactly one forward and one inverse FFT pass per application; the only
mismatch with the true H is the zero-pad/crop restriction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import NDArrayF
from .forward import (OdisSpec, disperse_array, adjoint_disperse_array,
                      pan_array, adjoint_pan_array)

__all__ = [
    "NormalOperator",
    "CyclicPreconditioner",
    "PcgReport",
    "apply_normal",
    "apply_c_inverse",
    "apply_cyclic_inverse",
    "apply_preconditioner",
    "pcg_solve",
    "cg_solve",
    "materialize_dense",
    "fft_pass_counts",
    "reset_fft_counters",
]

# instrumentation for the two-FFT-pass cost contract
_FFT_PASSES = {"forward": 0, "inverse": 0}


def reset_fft_counters() -> None:
    _FFT_PASSES["forward"] = 0
    _FFT_PASSES["inverse"] = 0


def fft_pass_counts() -> dict[str, int]:
    return dict(_FFT_PASSES)


def _rfft(a, axis):
    _FFT_PASSES["forward"] += 1
    return np.fft.rfft(a, axis=axis)


def _irfft(a, n, axis):
    _FFT_PASSES["inverse"] += 1
    return np.fft.irfft(a, n=n, axis=axis)


@dataclass(frozen=True)
class NormalOperator:
    """H v = A_disp^T A_disp v + lam * A_pan^T A_pan v + rho * v."""

    spec: OdisSpec
    rho: float
    lam: float = 1.0

    def __post_init__(self):
        if self.rho < 0 or self.lam < 0:
            raise ValueError("rho and lam must be non-negative")


def _as_cube_array(v, spec: OdisSpec) -> tuple[NDArrayF, bool]:
    v = np.asarray(v, dtype=np.float64)
    shape = (spec.channels, spec.height, spec.width)
    if v.ndim == 1:
        if v.size != spec.size:
            raise ValueError(f"vector length {v.size} != H*W*C = {spec.size}")
        return v.reshape(shape), True
    if v.shape != shape:
        raise ValueError(f"array shape {v.shape} != (C, H, W) = {shape}")
    return v, False


def apply_normal(op: NormalOperator, v) -> NDArrayF:
    """Apply H to ``v`` (flat length H*W*C or shaped (C, H, W))."""
    s = op.spec
    x, flat = _as_cube_array(v, s)
    out = adjoint_disperse_array(disperse_array(x, s.step), s.step, s.channels, s.width)
    if op.lam:
        out += op.lam * adjoint_pan_array(pan_array(x), s.channels)
    if op.rho:
        out += op.rho * x
    return out.ravel() if flat else out


@dataclass(frozen=True)
class CyclicPreconditioner:
    """Exact inverse of the padded cyclic normal operator.

    ``pad_to`` is the per-row FFT length L (default, and minimum for use
    as a preconditioner of the true operator: W + d*(C-1)).  All
    per-frequency quantities are cached at construction: the phase
    vectors, C(f)^-1 applied to the all-ones spectral vector, and the
    Woodbury scalars 1^H C(f)^-1 1.
    """

    spec: OdisSpec
    rho: float
    lam: float = 1.0
    pad_to: int | None = None
    # cached spectra, filled in __post_init__
    phase: np.ndarray = field(init=False, repr=False)
    _cinv_one: np.ndarray = field(init=False, repr=False)
    _woodbury_denom: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be > 0 for the cyclic inverse")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        s = self.spec
        L = s.detector_width if self.pad_to is None else int(self.pad_to)
        if L < s.width:
            raise ValueError(f"pad length {L} < cube width {s.width}")
        object.__setattr__(self, "pad_to", L)

        C, d, rho = s.channels, s.step, self.rho
        f = np.arange(L // 2 + 1)
        # symbol of the shift-and-sum normal matrix under numpy's forward
        # FFT sign convention: psi_c(f) = exp(+2i*pi*f*d*c/L), c zero-based
        phase = np.exp(2j * np.pi * np.outer(np.arange(C) * d, f) / L)
        psi_h_one = phase.conj().sum(axis=0)                     # psi(f)^H 1
        cinv_one = (1.0 - phase * psi_h_one / (rho + C)) / rho   # C(f)^-1 1
        ones_cinv_one = (C - np.abs(psi_h_one) ** 2 / (rho + C)) / rho
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "_cinv_one", cinv_one)
        object.__setattr__(self, "_woodbury_denom", 1.0 + self.lam * ones_cinv_one)

    @property
    def frequencies(self) -> int:
        return self.pad_to // 2 + 1


def apply_c_inverse(pre: CyclicPreconditioner, v_hat, f: int) -> np.ndarray:
    """Apply (rho*I + psi(f) psi(f)^H)^-1 to one spectral C-vector.

    Sherman-Morrison with psi(f)^H psi(f) = C:
    v/rho - psi * (psi^H v) / (rho * (rho + C)).
    """
    v_hat = np.asarray(v_hat, dtype=np.complex128)
    psi = pre.phase[:, f]
    rho, C = pre.rho, pre.spec.channels
    return v_hat / rho - psi * (psi.conj() @ v_hat) / (rho * (rho + C))


def _c_inverse_spectrum(pre: CyclicPreconditioner, vhat: np.ndarray) -> np.ndarray:
    # vhat shape (C, H, F); batched Sherman-Morrison over rows and frequencies
    rho, C = pre.rho, pre.spec.channels
    psi = pre.phase[:, None, :]
    proj = (psi.conj() * vhat).sum(axis=0)
    return vhat / rho - psi * (proj / (rho * (rho + C)))[None]


def apply_cyclic_inverse(pre: CyclicPreconditioner, v_padded: NDArrayF) -> NDArrayF:
    """Exact cyclic-model inverse on width-L data of shape (C, H, L)."""
    C, _, L = v_padded.shape
    if L != pre.pad_to or C != pre.spec.channels:
        raise ValueError(f"padded shape {v_padded.shape} incompatible with "
                         f"(C={pre.spec.channels}, *, L={pre.pad_to})")
    vhat = _rfft(v_padded, axis=2)
    u = _c_inverse_spectrum(pre, vhat)
    if pre.lam:
        ones_u = u.sum(axis=0)                       # 1^H u per (row, freq)
        u -= pre.lam * pre._cinv_one[:, None, :] * (ones_u / pre._woodbury_denom)[None]
    return _irfft(u, n=L, axis=2)


def apply_preconditioner(pre: CyclicPreconditioner, v) -> NDArrayF:
    """P^-1 v: zero-pad rows W -> L, cyclic inverse, crop back to W."""
    s = pre.spec
    x, flat = _as_cube_array(v, s)
    padded = np.zeros((s.channels, s.height, pre.pad_to), dtype=np.float64)
    padded[:, :, :s.width] = x
    out = apply_cyclic_inverse(pre, padded)[:, :, :s.width]
    return out.ravel() if flat else np.ascontiguousarray(out)


@dataclass(frozen=True)
class PcgReport:
    iterations: int
    relative_residual: float
    residuals: tuple[float, ...]
    converged: bool


def _cg_loop(apply_h, apply_p, b, T, tol, x0):
    b = np.asarray(b, dtype=np.float64)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != b.shape:
        raise ValueError(f"warm start shape {x.shape} != rhs shape {b.shape}")
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), PcgReport(0, 0.0, (0.0,), True)

    r = b - apply_h(x)
    res = float(np.linalg.norm(r)) / bnorm
    hist = [res]
    if res <= tol:
        return x, PcgReport(0, res, tuple(hist), True)
    z = apply_p(r) if apply_p is not None else r
    p = z.copy()
    delta = float(np.vdot(r, z).real)
    converged = False
    it = 0
    for it in range(1, T + 1):
        q = apply_h(p)
        curv = float(np.vdot(p, q).real)
        if not np.isfinite(curv):
            raise FloatingPointError("non-finite curvature in CG (ill-posed system?)")
        if curv <= 1e-14 * float(np.vdot(p, p).real):
            it -= 1          # step not taken; Krylov space exhausted
            break
        alpha = delta / curv
        x = x + alpha * p
        r = r - alpha * q
        res = float(np.linalg.norm(r)) / bnorm
        if not np.isfinite(res):
            raise FloatingPointError("non-finite residual in CG (ill-posed system?)")
        hist.append(res)
        if res <= tol:
            converged = True
            break
        z = apply_p(r) if apply_p is not None else r
        delta_new = float(np.vdot(r, z).real)
        if delta_new <= 0:
            break            # preconditioned inner product lost positivity
        p = z + (delta_new / delta) * p
        delta = delta_new
    return x, PcgReport(it, hist[-1], tuple(hist), converged)


def pcg_solve(op: NormalOperator, pre: CyclicPreconditioner, b,
              T: int = 10, tol: float = 1e-6, x0=None):
    """Preconditioned CG on H x = b (Hestenes-Stiefel recurrence).

    Terminates when ||b - Hx|| / ||b|| <= tol or after T iterations;
    warm-startable via ``x0``.  Returns (x, PcgReport).
    """
    if T < 1 or tol <= 0:
        raise ValueError("need T >= 1 and tol > 0")
    apply_h = op if callable(op) else (lambda v: apply_normal(op, v))
    apply_p = pre if callable(pre) else (lambda v: apply_preconditioner(pre, v))
    return _cg_loop(apply_h, apply_p, b, T, tol, x0)


def cg_solve(op: NormalOperator, b, T: int = 100, tol: float = 1e-6, x0=None):
    """Unpreconditioned CG baseline; same contract as pcg_solve.

    ``op`` may also be any callable v -> H v for symmetric PSD H, which is
    how non-ODIS systems are solved in the benchmark.
    """
    if T < 1 or tol <= 0:
        raise ValueError("need T >= 1 and tol > 0")
    apply_h = op if callable(op) else (lambda v: apply_normal(op, v))
    return _cg_loop(apply_h, None, b, T, tol, x0)


def materialize_dense(linear_op, dim: int, max_dim: int = 512) -> np.ndarray:
    """Apply ``linear_op`` to every basis vector; test oracle only."""
    if dim > max_dim:
        raise ValueError(f"dense materialization guard: dim {dim} > {max_dim}")
    cols = []
    for j in range(dim):
        e = np.zeros(dim)
        e[j] = 1.0
        cols.append(np.asarray(linear_op(e), dtype=np.float64).ravel())
    return np.stack(cols, axis=1)
