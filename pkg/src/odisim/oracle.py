"""Dense-matrix verification suite at tiny dimensions.

Every matrix-free operator in the package is checked here against a
brute-force construction: explicit dense matrices, circular-shift
matrices for the cyclic model, direct linear solves, and Monte-Carlo
noise moments.  ``run_oracle`` prints one PASS/FAIL line per check and
returns the number of failures; the CLI exposes it as the ``oracle``
subcommand.
"""

from __future__ import annotations

import numpy as np

from .core import PanImage, DispersedImage, make_cube
from .forward import (OdisSpec, disperse_array, adjoint_disperse_array,
                      pan_array, adjoint_pan_array, joint_forward)
from .linalg import (NormalOperator, CyclicPreconditioner, apply_normal,
                     apply_cyclic_inverse, materialize_dense)
from .noise import IlluminationModel, apply_noise, lux_to_shot_bits, LUX_TO_BITS_TABLE
from .recon import (Schedule, Prior, AdmmState, x_step,
                    data_residual, reconstruct, guided_filter)
from .metrics import psnr, sam, ssim

__all__ = ["run_oracle", "ORACLE_CHECKS"]

ORACLE_CHECKS = []


def _check(fn):
    ORACLE_CHECKS.append(fn)
    return fn


def _rel(err: float, ref: float) -> float:
    return err / ref if ref > 0 else err


def _dense_forward_matrices(h: int, w: int, c: int, d: int):
    """Materialized dispersion and PAN matrices acting on flat cubes."""
    dim = c * h * w

    def disp_flat(v):
        return disperse_array(v.reshape(c, h, w), d).ravel()

    def pan_flat(v):
        return pan_array(v.reshape(c, h, w)).ravel()

    return materialize_dense(disp_flat, dim), materialize_dense(pan_flat, dim)


@_check
def adjoint_identities():
    """<A x, y> == <x, A^T y> for both arms, 100 random trials at (4,6,3)."""
    h, w, c, d = 4, 6, 3, 1
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        x = rng.standard_normal((c, h, w))
        yd = rng.standard_normal((h, w + d * (c - 1)))
        yp = rng.standard_normal((h, w))
        lhs = float(np.sum(disperse_array(x, d) * yd))
        rhs = float(np.sum(x * adjoint_disperse_array(yd, d, c, w)))
        worst = max(worst, _rel(abs(lhs - rhs), abs(lhs)))
        lhs = float(np.sum(pan_array(x) * yp))
        rhs = float(np.sum(x * adjoint_pan_array(yp, c)))
        worst = max(worst, _rel(abs(lhs - rhs), abs(lhs)))
    return worst <= 1e-12, f"max relative error {worst:.2e} (tol 1e-12)"


@_check
def hand_enumerated_matrix():
    """Dispersion at (H,W,C,d)=(1,2,2,1) equals the 3x4 matrix written by hand."""
    a_disp, _ = _dense_forward_matrices(1, 2, 2, 1)
    expected = np.array([[1.0, 0, 0, 0],
                         [0, 1.0, 1.0, 0],
                         [0, 0, 0, 1.0]])
    err = float(np.abs(a_disp - expected).max())
    return err == 0.0, f"max abs deviation {err:.2e} (exact match required)"


@_check
def dense_normal_equivalence():
    """Matrix-free H equals A_d^T A_d + lam A_p^T A_p + rho I at two sizes."""
    worst = 0.0
    for (h, w, c), rho, lam in (((2, 3, 2), 0.7, 0.9), ((4, 6, 3), 0.05, 0.4)):
        d = 1
        a_d, a_p = _dense_forward_matrices(h, w, c, d)
        dim = c * h * w
        dense = a_d.T @ a_d + lam * (a_p.T @ a_p) + rho * np.eye(dim)
        op = NormalOperator(OdisSpec(h, w, c, d), rho=rho, lam=lam)
        free = materialize_dense(lambda v: apply_normal(op, v), dim)
        worst = max(worst, _rel(float(np.abs(free - dense).max()),
                                float(np.abs(dense).max())))
    return worst <= 1e-12, f"max relative deviation {worst:.2e} (tol 1e-12)"


def _dense_cyclic_normal(L: int, c: int, d: int, rho: float, lam: float, h: int = 2):
    """H-tilde built from explicit circular-shift matrices and PAN column sums."""
    dim = c * h * L
    a_d = np.zeros((h * L, dim))
    a_p = np.zeros((h * L, dim))
    for ch in range(c):
        for x in range(h):
            for y in range(L):
                col = (ch * h + x) * L + y
                a_d[x * L + (y + ch * d) % L, col] = 1.0
                a_p[x * L + y, col] = 1.0
    return a_d.T @ a_d + lam * (a_p.T @ a_p) + rho * np.eye(dim)


@_check
def cyclic_preconditioner_exact():
    """P^-1 applied after the dense cyclic normal operator is the identity."""
    rng = np.random.default_rng(5)
    h = 2
    worst = 0.0
    for L in (8, 16):
        for c in (2, 3):
            for d in (1, 2):
                for rho in (0.1, 1.0):
                    for lam in (0.0, 1.0):
                        hmat = _dense_cyclic_normal(L, c, d, rho, lam, h)
                        pre = CyclicPreconditioner(OdisSpec(h, L, c, d),
                                                   rho=rho, lam=lam, pad_to=L)
                        v = rng.standard_normal((c, h, L))
                        hv = (hmat @ v.ravel()).reshape(c, h, L)
                        back = apply_cyclic_inverse(pre, hv)
                        worst = max(worst, float(np.linalg.norm(back - v)
                                                 / np.linalg.norm(v)))
    return worst <= 1e-10, f"max relative error {worst:.2e} (tol 1e-10)"


@_check
def x_step_matches_dense_solve():
    """PCG x-step at (2,3,2) agrees with a direct dense solve."""
    h, w, c, d = 2, 3, 2, 1
    rho, lam = 0.7, 0.9
    rng = np.random.default_rng(3)
    spec = OdisSpec(h, w, c, d)
    y_disp = DispersedImage(h, spec.detector_width, d,
                            rng.random((h, spec.detector_width)))
    y_pan = PanImage(h, w, rng.random((h, w)))
    z = rng.standard_normal((c, h, w))
    u = rng.standard_normal((c, h, w))
    state = AdmmState(spec=spec, x=np.zeros((c, h, w)), z=z, u=u)
    x, _ = x_step(state, y_disp, y_pan, rho, lam, T=50, tol=1e-13)
    a_d, a_p = _dense_forward_matrices(h, w, c, d)
    dim = c * h * w
    hmat = a_d.T @ a_d + lam * (a_p.T @ a_p) + rho * np.eye(dim)
    b = (a_d.T @ y_disp.data.ravel() + lam * (a_p.T @ y_pan.data.ravel())
         + rho * (z - u).ravel())
    x_dense = np.linalg.solve(hmat, b).reshape(c, h, w)
    err = float(np.linalg.norm(x - x_dense) / np.linalg.norm(x_dense))
    return err <= 1e-8, f"relative error {err:.2e} (tol 1e-8)"


@_check
def data_residual_matches_dense():
    """data_residual at (2,3,2) equals the materialized A_d^T (y - A_d x)."""
    h, w, c, d = 2, 3, 2, 1
    rng = np.random.default_rng(9)
    spec = OdisSpec(h, w, c, d)
    x = rng.standard_normal((c, h, w))
    y = DispersedImage(h, spec.detector_width, d, rng.random((h, spec.detector_width)))
    r = data_residual(x, y, spec)
    a_d, _ = _dense_forward_matrices(h, w, c, d)
    r_dense = (a_d.T @ (y.data.ravel() - a_d @ x.ravel())).reshape(c, h, w)
    err = float(np.abs(r - r_dense).max())
    return err <= 1e-12, f"max abs deviation {err:.2e} (tol 1e-12)"


@_check
def single_channel_exact_recovery():
    """C=1, Identity prior, noiseless: one ADMM stage recovers the scene."""
    h, w = 5, 6
    rng = np.random.default_rng(2)
    data = rng.random((1, h, w))
    cube = make_cube(h, w, 1, [550.0], data)
    spec = OdisSpec(h, w, 1, 1)
    meas = joint_forward(cube, spec)
    est, _ = reconstruct(meas.coded, meas.pan, spec,
                         Schedule(rho=(0.5,), lam=(1.0,)),
                         Prior(kind="identity"), T=10, tol=1e-12)
    err = float(np.abs(est.data - data).max())
    return err <= 1e-6, f"max abs error {err:.2e} (tol 1e-6)"


@_check
def noise_calibration_table():
    """The six published lux -> shot-bit pairs reproduce exactly."""
    ok = all(lux_to_shot_bits(lux) == bits for lux, bits in LUX_TO_BITS_TABLE)
    return ok, f"pairs {dict(LUX_TO_BITS_TABLE)}"


@_check
def noise_monte_carlo_moments():
    """Sample mean/variance of the noise model match Poisson+read theory."""
    value, n = 0.25, 10_000
    model = IlluminationModel(lux=18.0, seed=123)
    peak = 2.0 ** model.shot_bits
    e = value * peak
    clean = np.full(n, value)
    noisy = apply_noise(clean, model)
    mean_th = value
    var_th = (e + model.read_sigma_e ** 2) / peak ** 2
    se_mean = np.sqrt(var_th / n)
    se_var = var_th * np.sqrt(2.0 / (n - 1))
    dm = abs(float(noisy.mean()) - mean_th) / se_mean
    dv = abs(float(noisy.var()) - var_th) / se_var
    return dm <= 3 and dv <= 3, f"mean {dm:.2f} SE, variance {dv:.2f} SE (tol 3 SE)"


@_check
def metric_oracles():
    """PSNR brute force, SAM orthogonality, SSIM of identical bands."""
    rng = np.random.default_rng(21)
    a = rng.random((3, 4, 4))
    b = rng.random((3, 4, 4))
    mse = float(np.mean((a - b) ** 2))
    direct = 10.0 * np.log10(1.0 / mse)
    ok = abs(psnr(a, b) - direct) <= 1e-9
    r = np.zeros((2, 1, 1)); r[0] = 1.0
    e = np.zeros((2, 1, 1)); e[1] = 1.0
    angle, _ = sam(r, e)
    ok = ok and abs(angle - 90.0) <= 1e-9
    band = rng.random((16, 16))
    ok = ok and abs(ssim(band, band) - 1.0) <= 1e-12
    return ok, "PSNR/SAM/SSIM against closed forms"


@_check
def guided_filter_degenerates_to_identity():
    """Guidance == input with tiny eps reproduces the input."""
    rng = np.random.default_rng(14)
    img = rng.random((12, 12))
    out = guided_filter(img, img, radius=3, eps=1e-12)
    err = float(np.abs(out - img).max())
    return err <= 1e-6, f"max abs deviation {err:.2e} (tol 1e-6)"


def run_oracle(verbose: bool = False) -> int:
    """Run every check; print one PASS/FAIL line each; return failure count."""
    failures = 0
    for fn in ORACLE_CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # surface, keep running the rest
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        status = "PASS" if ok else "FAIL"
        if not ok:
            failures += 1
        line = f"{status} {fn.__name__}"
        if verbose or not ok:
            line += f": {detail}"
        print(line)
    print(f"{len(ORACLE_CHECKS) - failures}/{len(ORACLE_CHECKS)} checks passed")
    return failures
