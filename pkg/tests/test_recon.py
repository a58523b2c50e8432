"""ADMM reconstruction: schedules, priors, the update steps, end-to-end runs."""

import numpy as np
import pytest

from odisim.core import DispersedImage, PanImage
from odisim.cubeio import synth_cube
from odisim.forward import (OdisSpec, joint_forward, disperse_array, pan_array,
                            adjoint_disperse_array, adjoint_pan_array)
from odisim.linalg import NormalOperator, apply_normal, materialize_dense
from odisim.recon import (AdmmState, Prior, Schedule, data_residual,
                          default_schedule, dual_update, guided_filter,
                          initialize, objective, reconstruct, tv_denoise,
                          x_step, z_step)


def _clean_measurements(h, w, c, d=1, kind="smooth_gradient", seed=0):
    cube = synth_cube(kind, (h, w, c), seed=seed)
    spec = OdisSpec(height=h, width=w, channels=c, step=d)
    meas = joint_forward(cube, spec)
    return cube, spec, meas.coded, meas.pan


# ---------------------------------------------------------------------------
# schedule / prior containers
# ---------------------------------------------------------------------------

def test_schedule_validation():
    with pytest.raises(ValueError, match="equal-length"):
        Schedule(rho=(1.0, 2.0), lam=(1.0,))
    with pytest.raises(ValueError, match="non-empty"):
        Schedule(rho=(), lam=())
    with pytest.raises(ValueError, match="rho values"):
        Schedule(rho=(1.0, 0.0), lam=(1.0, 1.0))
    with pytest.raises(ValueError, match="lam values"):
        Schedule(rho=(1.0,), lam=(-0.5,))


def test_schedule_sigma_is_inverse_sqrt_rho():
    sch = Schedule(rho=(4.0, 0.25), lam=(0.0, 1.0))
    assert sch.stages == 2
    assert sch.sigma(0) == pytest.approx(0.5)
    assert sch.sigma(1) == pytest.approx(2.0)


def test_default_schedule_geometric_ramp():
    sch = default_schedule(5, rho_start=0.01, rho_end=1.0, lam=0.7)
    assert sch.stages == 5
    assert sch.rho[0] == pytest.approx(0.01)
    assert sch.rho[-1] == pytest.approx(1.0)
    ratios = [sch.rho[k + 1] / sch.rho[k] for k in range(4)]
    assert np.allclose(ratios, ratios[0])
    assert sch.lam == (0.7,) * 5


def test_default_schedule_single_stage_and_errors():
    assert default_schedule(1).rho == (0.01,)
    with pytest.raises(ValueError, match="at least one stage"):
        default_schedule(0)


def test_prior_validation():
    assert Prior(kind="TV").kind == "tv"  # case-folded
    with pytest.raises(ValueError, match="unknown prior kind"):
        Prior(kind="bm3d")
    with pytest.raises(ValueError, match="iterations >= 1"):
        Prior(kind="tv", iterations=0)
    with pytest.raises(ValueError, match="radius >= 1"):
        Prior(kind="guided", radius=0)
    with pytest.raises(ValueError, match="eps > 0"):
        Prior(kind="guided", eps=0.0)


def test_admm_state_shape_check():
    spec = OdisSpec(height=2, width=3, channels=2)
    good = np.zeros((2, 2, 3))
    with pytest.raises(ValueError, match="z shape"):
        AdmmState(spec=spec, x=good, z=np.zeros((2, 3, 2)), u=good)


# ---------------------------------------------------------------------------
# initialization
# ---------------------------------------------------------------------------

def test_initialize_replicates_pan():
    cube, spec, y_d, y_p = _clean_measurements(5, 7, 3, d=2)
    x0 = initialize(y_d, y_p, spec)
    assert x0.shape == (3, 5, 7)
    for c in range(3):
        assert np.array_equal(x0[c], y_p.data / 3.0)
    # the replicated start satisfies the PAN measurement exactly
    assert np.allclose(pan_array(x0), y_p.data, atol=1e-12)


def test_initialize_shape_errors():
    _, spec, y_d, y_p = _clean_measurements(4, 6, 3)
    bad_pan = PanImage(height=4, width=5, data=np.zeros((4, 5)))
    with pytest.raises(ValueError, match="PAN shape"):
        initialize(y_d, bad_pan, spec)
    bad_disp = DispersedImage(height=4, width=6, step=1, data=np.zeros((4, 6)))
    with pytest.raises(ValueError, match="dispersed shape"):
        initialize(bad_disp, y_p, spec)


# ---------------------------------------------------------------------------
# x-step
# ---------------------------------------------------------------------------

def test_x_step_matches_dense_solve():
    rng = np.random.default_rng(11)
    h, w, c, d = 2, 3, 2, 1
    spec = OdisSpec(height=h, width=w, channels=c, step=d)
    rho, lam = 0.7, 0.9
    y_d = DispersedImage(height=h, width=spec.detector_width, step=d,
                         data=rng.normal(size=(h, spec.detector_width)))
    y_p = PanImage(height=h, width=w, data=rng.normal(size=(h, w)))
    z = rng.normal(size=(c, h, w))
    u = rng.normal(size=(c, h, w))
    state = AdmmState(spec=spec, x=np.zeros((c, h, w)), z=z, u=u)

    x, report = x_step(state, y_d, y_p, rho=rho, lam=lam, T=50, tol=1e-13)
    assert report.converged

    dim = spec.size
    op = NormalOperator(spec, rho=rho, lam=lam)
    h_mat = materialize_dense(lambda v: apply_normal(op, v), dim)
    b = adjoint_disperse_array(y_d.data, d, c, w)
    b += lam * adjoint_pan_array(y_p.data, c)
    b += rho * (z - u)
    expected = np.linalg.solve(h_mat, b.ravel()).reshape(c, h, w)
    assert np.allclose(x, expected, atol=1e-8)


def test_x_step_single_channel_is_direct():
    # C = 1: both arms are the identity, so H = (1 + lam + rho) I and the
    # preconditioner is exact -- PCG must finish in at most one iteration.
    rng = np.random.default_rng(3)
    spec = OdisSpec(height=4, width=5, channels=1, step=1)
    img = rng.uniform(size=(4, 5))
    y_d = DispersedImage(height=4, width=5, step=1, data=img.copy())
    y_p = PanImage(height=4, width=5, data=img.copy())
    z = rng.normal(size=(1, 4, 5))
    state = AdmmState(spec=spec, x=np.zeros((1, 4, 5)), z=z,
                      u=np.zeros((1, 4, 5)))
    rho, lam = 0.3, 0.6
    x, report = x_step(state, y_d, y_p, rho=rho, lam=lam, T=10, tol=1e-12)
    expected = (img * (1 + lam) + rho * z[0]) / (1 + lam + rho)
    assert np.allclose(x[0], expected, atol=1e-10)
    assert report.iterations <= 1


def test_x_step_recovers_truth_when_anchored_at_truth():
    # with z = ground truth, u = 0 and noiseless data the subproblem's
    # exact minimizer is the ground truth at *every* rho
    cube, spec, y_d, y_p = _clean_measurements(8, 10, 3, d=1)
    gt = cube.data
    for rho in (1.0, 10.0, 100.0):
        state = AdmmState(spec=spec, x=np.zeros_like(gt), z=gt.copy(),
                          u=np.zeros_like(gt))
        x, report = x_step(state, y_d, y_p, rho=rho, lam=1.0, T=60, tol=1e-12)
        assert report.converged
        assert np.max(np.abs(x - gt)) <= 1e-6


def test_x_step_error_shrinks_as_rho_grows():
    # when the measurements are inconsistent with the anchor, growing rho
    # pulls the solve toward z: the error to z must decrease monotonically
    cube, spec, y_d, y_p = _clean_measurements(8, 10, 3, d=1)
    gt = cube.data
    rng = np.random.default_rng(0)
    y_d = DispersedImage(height=y_d.height, width=y_d.width, step=y_d.step,
                         data=y_d.data + 0.05 * rng.normal(size=y_d.data.shape))
    y_p = PanImage(height=y_p.height, width=y_p.width,
                   data=y_p.data + 0.05 * rng.normal(size=y_p.data.shape))
    errs = []
    for rho in (1.0, 10.0, 100.0):
        state = AdmmState(spec=spec, x=np.zeros_like(gt), z=gt.copy(),
                          u=np.zeros_like(gt))
        x, _ = x_step(state, y_d, y_p, rho=rho, lam=1.0, T=60, tol=1e-12)
        errs.append(float(np.linalg.norm(x - gt)))
    assert errs[0] > errs[1] > errs[2]


def test_x_step_scale_equivariance():
    # the subproblem is linear: scaling (y, z, u) scales the solution
    cube, spec, y_d, y_p = _clean_measurements(4, 6, 3, d=2, kind="gaussian_blobs")
    rng = np.random.default_rng(5)
    z = rng.normal(size=cube.data.shape)
    u = rng.normal(size=cube.data.shape)
    s = 3.5

    def solve(scale):
        yd = DispersedImage(height=y_d.height, width=y_d.width, step=y_d.step,
                            data=scale * y_d.data)
        yp = PanImage(height=y_p.height, width=y_p.width, data=scale * y_p.data)
        state = AdmmState(spec=spec, x=np.zeros_like(z), z=scale * z,
                          u=scale * u)
        x, _ = x_step(state, yd, yp, rho=0.4, lam=0.8, T=80, tol=1e-13)
        return x

    assert np.allclose(solve(s), s * solve(1.0), atol=1e-10)


# ---------------------------------------------------------------------------
# z-step and denoisers
# ---------------------------------------------------------------------------

def test_z_step_identity_copies():
    v = np.random.default_rng(0).normal(size=(2, 4, 4))
    z = z_step(v, Prior(kind="identity"), sigma=1.0)
    assert np.array_equal(z, v)
    assert z is not v  # must not alias the input


def test_tv_denoise_constant_fixed_point():
    img = np.full((6, 6), 0.37)
    out = tv_denoise(img, weight=0.5, n_iter=40)
    assert np.allclose(out, img, atol=1e-12)


def test_tv_denoise_reduces_total_variation():
    rng = np.random.default_rng(1)
    clean = np.outer(np.linspace(0, 1, 16), np.ones(16))
    noisy = clean + 0.2 * rng.normal(size=clean.shape)

    def total_variation(a):
        gx = np.diff(a, axis=0)
        gy = np.diff(a, axis=1)
        return float(np.sum(np.abs(gx)) + np.sum(np.abs(gy)))

    out = tv_denoise(noisy, weight=0.2, n_iter=60)
    assert total_variation(out) < total_variation(noisy)
    # and it should land closer to the clean ramp than the noisy input
    assert np.linalg.norm(out - clean) < np.linalg.norm(noisy - clean)


def test_tv_denoise_nonpositive_weight_is_identity():
    img = np.random.default_rng(2).normal(size=(5, 7))
    assert np.array_equal(tv_denoise(img, weight=0.0), img)
    assert np.array_equal(tv_denoise(img, weight=0.3, n_iter=0), img)


def test_z_step_tv_scales_weight_by_sigma_squared():
    rng = np.random.default_rng(4)
    v = rng.uniform(size=(2, 8, 8))
    prior = Prior(kind="tv", weight=0.05, iterations=25)
    sigma = 2.0
    out = z_step(v, prior, sigma)
    expected = np.stack([tv_denoise(ch, 0.05 * sigma ** 2, 25) for ch in v])
    assert np.array_equal(out, expected)


def test_guided_filter_identity_limit():
    # eps -> 0 with the image as its own guide returns (nearly) the image
    rng = np.random.default_rng(6)
    img = rng.uniform(size=(12, 12))
    out = guided_filter(img, img, radius=3, eps=1e-12)
    assert np.allclose(out, img, atol=1e-6)


def test_guided_filter_smooths_under_flat_guide():
    rng = np.random.default_rng(7)
    noisy = 0.5 + 0.1 * rng.normal(size=(16, 16))
    out = guided_filter(np.full((16, 16), 0.5), noisy, radius=4, eps=1e-2)
    assert np.std(out) < np.std(noisy)


def test_z_step_guided_requires_pan():
    v = np.zeros((2, 8, 8))
    with pytest.raises(ValueError, match="needs the PAN image"):
        z_step(v, Prior(kind="guided"), sigma=1.0, y_pan=None)
    # typed image and raw array guidance both accepted
    pan = PanImage(height=8, width=8, data=np.ones((8, 8)))
    a = z_step(v, Prior(kind="guided"), sigma=1.0, y_pan=pan)
    b = z_step(v, Prior(kind="guided"), sigma=1.0, y_pan=np.ones((8, 8)))
    assert np.array_equal(a, b)


# ---------------------------------------------------------------------------
# dual update, residuals, objective
# ---------------------------------------------------------------------------

def test_dual_update_identity():
    rng = np.random.default_rng(8)
    spec = OdisSpec(height=3, width=4, channels=2)
    x = rng.normal(size=(2, 3, 4))
    z = rng.normal(size=(2, 3, 4))
    u = rng.normal(size=(2, 3, 4))
    state = AdmmState(spec=spec, x=x, z=z, u=u)
    assert np.array_equal(dual_update(state), u + x - z)


def test_identity_prior_keeps_dual_at_zero():
    # z = x + u makes the dual update telescope to exactly zero each stage
    cube, spec, y_d, y_p = _clean_measurements(6, 8, 2)
    x0 = initialize(y_d, y_p, spec)
    state = AdmmState(spec=spec, x=x0, z=x0.copy(), u=np.zeros_like(x0))
    for k in range(4):
        state.x, _ = x_step(state, y_d, y_p, rho=0.5, lam=1.0, T=30, tol=1e-10)
        state.z = z_step(state.x + state.u, Prior(kind="identity"), 1.0)
        state.u = dual_update(state)
        assert np.array_equal(state.u, np.zeros_like(state.u))


def test_data_residual_zero_at_truth():
    cube, spec, y_d, _ = _clean_measurements(5, 6, 3, d=2)
    r = data_residual(cube.data, y_d, spec)
    assert r.shape == cube.data.shape
    assert np.max(np.abs(r)) <= 1e-12


def test_data_residual_at_zero_is_backprojection():
    cube, spec, y_d, _ = _clean_measurements(5, 6, 3, d=2)
    r = data_residual(np.zeros_like(cube.data), y_d, spec)
    expected = adjoint_disperse_array(y_d.data, spec.step, spec.channels, spec.width)
    assert np.allclose(r, expected, atol=1e-12)


def test_objective_closed_form():
    rng = np.random.default_rng(9)
    h, w, c, d = 3, 4, 2, 1
    spec = OdisSpec(height=h, width=w, channels=c, step=d)
    x = rng.normal(size=(c, h, w))
    y_d = DispersedImage(height=h, width=spec.detector_width, step=d,
                         data=rng.normal(size=(h, spec.detector_width)))
    y_p = PanImage(height=h, width=w, data=rng.normal(size=(h, w)))
    lam = 0.8
    rd = disperse_array(x, d) - y_d.data
    rp = pan_array(x) - y_p.data
    expected = 0.5 * np.sum(rd ** 2) + 0.5 * lam * np.sum(rp ** 2)
    assert objective(x, y_d, y_p, lam) == pytest.approx(expected, rel=1e-12)
    # lam = 0 drops the PAN term entirely
    assert objective(x, y_d, y_p, 0.0) == pytest.approx(0.5 * np.sum(rd ** 2),
                                                        rel=1e-12)


def test_objective_zero_at_truth():
    cube, spec, y_d, y_p = _clean_measurements(4, 5, 3)
    assert objective(cube.data, y_d, y_p, 1.0) <= 1e-18


# ---------------------------------------------------------------------------
# full reconstruction
# ---------------------------------------------------------------------------

def test_reconstruct_shapes_and_wavelengths():
    cube, spec, y_d, y_p = _clean_measurements(8, 8, 4)
    est, diag = reconstruct(y_d, y_p, spec, schedule=default_schedule(3),
                            prior=Prior(kind="identity"), T=8)
    assert (est.height, est.width, est.channels) == (8, 8, 4)
    assert np.allclose(est.wavelengths_nm, np.linspace(450.0, 650.0, 4))
    assert len(diag) == 3
    assert [d.stage for d in diag] == [1, 2, 3]
    assert np.min(est.data) >= 0.0


def test_reconstruct_identity_prior_drives_objective_down():
    cube, spec, y_d, y_p = _clean_measurements(8, 10, 3)
    _, diag = reconstruct(y_d, y_p, spec, schedule=default_schedule(8),
                          prior=Prior(kind="identity"), T=12, tol=1e-10)
    objs = [d.objective for d in diag]
    for a, b in zip(objs, objs[1:]):
        assert b <= a + 1e-8
    assert objs[-1] < objs[0]


def test_reconstruct_is_deterministic():
    cube, spec, y_d, y_p = _clean_measurements(6, 8, 3, kind="gaussian_blobs")
    est1, diag1 = reconstruct(y_d, y_p, spec, T=6)
    est2, diag2 = reconstruct(y_d, y_p, spec, T=6)
    assert np.array_equal(est1.data, est2.data)
    assert [d.pcg.iterations for d in diag1] == [d.pcg.iterations for d in diag2]


def test_reconstruct_single_channel_exact():
    # C = 1 with an identity prior inverts the (identity) forward model
    cube, spec, y_d, y_p = _clean_measurements(6, 6, 1, kind="checker_spectra")
    est, _ = reconstruct(y_d, y_p, spec, schedule=Schedule(rho=(0.5,), lam=(1.0,)),
                         prior=Prior(kind="identity"), T=10, tol=1e-12)
    assert np.allclose(est.data, cube.data, atol=1e-6)


def test_reconstruct_improves_on_initialization():
    cube, spec, y_d, y_p = _clean_measurements(16, 16, 4)
    x0 = initialize(y_d, y_p, spec)
    est, _ = reconstruct(y_d, y_p, spec, T=10)
    err0 = np.linalg.norm(x0 - cube.data)
    err1 = np.linalg.norm(est.data - cube.data)
    assert err1 < 0.25 * err0


def test_reconstruct_custom_wavelengths_and_diag_fields():
    cube, spec, y_d, y_p = _clean_measurements(6, 6, 2)
    wl = [500.0, 600.0]
    est, diag = reconstruct(y_d, y_p, spec, schedule=default_schedule(2),
                            prior=Prior(kind="identity"), wavelengths_nm=wl)
    assert np.allclose(est.wavelengths_nm, wl)
    d0 = diag[0]
    assert d0.rho == pytest.approx(0.01)
    assert d0.sigma == pytest.approx(1.0 / np.sqrt(d0.rho))
    assert d0.data_residual_norm >= 0.0
    assert d0.pcg.iterations >= 0
