"""Cross-system benchmark: simulate, add noise, reconstruct, score.

Every (system, lux, seed) tuple produces one row: clean measurements are
synthesized with the system's throughput scaling, noise is applied with
the detector full scale pinned to C (a channel-integrating arm can reach
C when every band is at 1.0, so all systems share one well capacity and
the throughput penalty of masked/split designs shows up as reduced use
of the quantization range), the cube is reconstructed with the shared
ADMM pipeline (FFT-Woodbury PCG x-step for the dispersion-only system,
generic CG x-step for masked systems), and metrics are scored against
the ground-truth scene.  Rows are flushed to CSV as they complete.
"""

from __future__ import annotations

import csv
import json
import os
import time
from dataclasses import dataclass

import numpy as np

from .core import HSICube, PanImage, DispersedImage
from .forward import (SYSTEM_KINDS, OdisSpec, SystemSpec, Measurements,
                      joint_forward, competitor_forward, random_binary_mask,
                      mosaic_channel_map, disperse_array, adjoint_disperse_array,
                      pan_array, adjoint_pan_array)
from .noise import IlluminationModel, apply_noise, measurement_snr, lux_to_shot_bits
from .linalg import cg_solve
from .recon import Schedule, Prior, default_schedule, reconstruct, z_step
from .metrics import evaluate
from .cubeio import read_cube, synth_cube

__all__ = [
    "RunConfig",
    "BenchmarkRow",
    "load_run_config",
    "benchmark_sweep",
    "ablate_pcg",
    "DEFAULT_LUX_LEVELS",
]

DEFAULT_LUX_LEVELS = (2.0, 4.0, 9.0, 18.0, 35.0, 141.0)

ROW_FIELDS = ("system", "lux", "shot_bits", "seed", "snr_coded_db",
              "snr_pan_db", "psnr_db", "ssim", "sam_degrees", "runtime_ms")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved benchmark configuration (see README for the JSON schema)."""

    scene_kind: str = "smooth_gradient"
    scene_path: str | None = None
    height: int = 64
    width: int = 64
    channels: int = 8
    scene_seed: int = 7
    systems: tuple[str, ...] = ("odis", "sdcassi", "sdcassi_dc", "ddcassi_dc", "pmvis_dc")
    lux_levels: tuple[float, ...] = DEFAULT_LUX_LEVELS
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4, 5, 6, 7)
    step: int = 1
    mask_transmittance: float = 0.5
    mask_seed: int = 0
    exposure_ms: float = 500.0
    read_sigma_e: float = 9.29
    stages: int = 8
    rho_start: float = 0.01
    rho_end: float = 1.0
    lam: float = 1.0
    prior_kind: str = "tv"
    prior_weight: float = 2e-3
    prior_iterations: int = 30
    prior_radius: int = 4
    prior_eps: float = 1e-4
    pcg_iterations: int = 10
    pcg_tol: float = 1e-6
    output_dir: str = "bench_out"

    def __post_init__(self):
        for name in ("systems", "lux_levels", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        unknown = [s for s in self.systems if s not in SYSTEM_KINDS]
        if unknown:
            raise ValueError(f"unknown systems {unknown}; choose from {SYSTEM_KINDS}")
        if not self.systems or not self.lux_levels or not self.seeds:
            raise ValueError("systems, lux_levels, and seeds must be non-empty")
        if self.scene_path is not None and not os.path.exists(self.scene_path):
            raise ValueError(f"scene file not found: {self.scene_path}")

    def schedule(self) -> Schedule:
        return default_schedule(self.stages, self.rho_start, self.rho_end, self.lam)

    def prior(self) -> Prior:
        return Prior(kind=self.prior_kind, weight=self.prior_weight,
                     iterations=self.prior_iterations, radius=self.prior_radius,
                     eps=self.prior_eps)

    def scene(self) -> HSICube:
        if self.scene_path is not None:
            return read_cube(self.scene_path)
        return synth_cube(self.scene_kind,
                          (self.height, self.width, self.channels), self.scene_seed)


@dataclass(frozen=True)
class BenchmarkRow:
    system: str
    lux: float
    shot_bits: int
    seed: int
    snr_coded_db: float
    snr_pan_db: float | None
    psnr_db: float
    ssim: float
    sam_degrees: float
    runtime_ms: float


def load_run_config(source) -> RunConfig:
    """Build a RunConfig from a JSON file path, a JSON string, or a dict."""
    if isinstance(source, RunConfig):
        return source
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if os.path.exists(text):
            with open(text, "r") as fh:
                doc = json.load(fh)
        else:
            doc = json.loads(text)
    kw = {}
    scene = doc.get("scene", {})
    if "path" in scene:
        kw["scene_path"] = scene["path"]
    kw["scene_kind"] = scene.get("kind", "smooth_gradient")
    for src, dst in (("height", "height"), ("width", "width"),
                     ("channels", "channels"), ("seed", "scene_seed")):
        if src in scene:
            kw[dst] = int(scene[src])
    for key in ("systems", "lux_levels", "seeds", "step", "output_dir"):
        if key in doc:
            kw[key] = doc[key]
    mask = doc.get("mask", {})
    if "transmittance" in mask:
        kw["mask_transmittance"] = float(mask["transmittance"])
    if "seed" in mask:
        kw["mask_seed"] = int(mask["seed"])
    noise = doc.get("noise", {})
    if "exposure_ms" in noise:
        kw["exposure_ms"] = float(noise["exposure_ms"])
    if "read_sigma_e" in noise:
        kw["read_sigma_e"] = float(noise["read_sigma_e"])
    sched = doc.get("schedule", {})
    for src, dst in (("stages", "stages"), ("rho_start", "rho_start"),
                     ("rho_end", "rho_end"), ("lambda", "lam")):
        if src in sched:
            kw[dst] = sched[src]
    prior = doc.get("prior", {})
    for src, dst in (("kind", "prior_kind"), ("weight", "prior_weight"),
                     ("iterations", "prior_iterations"), ("radius", "prior_radius"),
                     ("eps", "prior_eps")):
        if src in prior:
            kw[dst] = prior[src]
    pcg = doc.get("pcg", {})
    if "iterations" in pcg:
        kw["pcg_iterations"] = int(pcg["iterations"])
    if "tol" in pcg:
        kw["pcg_tol"] = float(pcg["tol"])
    return RunConfig(**kw)


# ---------------------------------------------------------------------------
# per-system plumbing
# ---------------------------------------------------------------------------

def _build_system(kind: str, cfg: RunConfig, dims: tuple[int, int, int]) -> SystemSpec:
    h, w, c = dims
    if kind == "odis":
        return SystemSpec(kind="odis", step=cfg.step)
    if kind == "pmvis_dc":
        return SystemSpec(kind=kind, step=cfg.step, mask=mosaic_channel_map(h, w, c))
    mask = random_binary_mask(h, w, cfg.mask_transmittance, cfg.mask_seed)
    return SystemSpec(kind=kind, step=cfg.step, mask=mask)


def _arm_seed(seed: int, sys_idx: int, lux_idx: int, arm_idx: int) -> int:
    ss = np.random.SeedSequence([int(seed), sys_idx, lux_idx, arm_idx])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _noisy_arm(clean, full_scale: float, lux: float, cfg: RunConfig, seed: int):
    model = IlluminationModel(lux=lux, exposure_ms=cfg.exposure_ms,
                              read_sigma_e=cfg.read_sigma_e, seed=seed)
    noisy = apply_noise(clean / full_scale, model) * full_scale
    return noisy, measurement_snr(clean, noisy)


def _coded_ops(sys: SystemSpec, dims: tuple[int, int, int]):
    """Return (forward, adjoint) closures for the coded arm of a masked system."""
    h, w, c = dims
    d, s = sys.step, sys.splitter
    if sys.kind in ("sdcassi", "sdcassi_dc"):
        mask = sys.mask

        def fwd(x):
            return s * disperse_array(mask[None, :, :] * x, d)

        def adj(y):
            return s * mask[None, :, :] * adjoint_disperse_array(y, d, c, w)
    elif sys.kind == "ddcassi_dc":
        rolled = np.stack([np.roll(sys.mask, -ch * d, axis=1) for ch in range(c)])

        def fwd(x):
            return s * np.sum(rolled * x, axis=0)

        def adj(y):
            return s * rolled * y[None, :, :]
    elif sys.kind == "pmvis_dc":
        sel = (sys.mask.astype(np.int64) - 1)[None, :, :]

        def fwd(x):
            return s * np.take_along_axis(x, sel, axis=0)[0]

        def adj(y):
            out = np.zeros((c, h, w))
            np.put_along_axis(out, sel, (s * y)[None, :, :], axis=0)
            return out
    else:
        raise ValueError(f"no coded-arm closures for kind {sys.kind!r}")
    return fwd, adj


def _reconstruct_masked(y_coded, y_pan, sys: SystemSpec, dims, schedule: Schedule,
                        prior: Prior, T: int, tol: float):
    """Shared ADMM loop with a generic-CG x-step (no circulant structure to exploit)."""
    h, w, c = dims
    s = sys.splitter
    fwd_c, adj_c = _coded_ops(sys, dims)
    has_pan = y_pan is not None
    if has_pan:
        x = np.broadcast_to(y_pan / (s * c), (c, h, w)).copy()
        pan_guidance = y_pan / s
    else:
        x = adj_c(y_coded)
        pan_guidance = None
    z = x.copy()
    u = np.zeros_like(x)
    b_data = adj_c(y_coded)
    for k in range(schedule.stages):
        rho, lam = schedule.rho[k], schedule.lam[k]
        lam_eff = lam if has_pan else 0.0

        def apply_h(v, rho=rho, lam_eff=lam_eff):
            out = adj_c(fwd_c(v)) + rho * v
            if lam_eff:
                out += lam_eff * (s * s) * adjoint_pan_array(pan_array(v), c)
            return out

        b = b_data + rho * (z - u)
        if lam_eff:
            b = b + lam_eff * s * adjoint_pan_array(y_pan, c)
        x, _ = cg_solve(apply_h, b, T=T, tol=tol, x0=x)
        z = z_step(x + u, prior, schedule.sigma(k), pan_guidance)
        u = u + x - z
    return np.maximum(z, 0.0)


def _simulate(cube: HSICube, sys: SystemSpec) -> Measurements:
    if sys.kind == "odis":
        return joint_forward(cube, OdisSpec(cube.height, cube.width,
                                            cube.channels, sys.step))
    return competitor_forward(cube, sys)


def _run_row(cube: HSICube, kind: str, sys: SystemSpec, lux: float, seed: int,
             cfg: RunConfig, sys_idx: int, lux_idx: int) -> BenchmarkRow:
    dims = (cube.height, cube.width, cube.channels)
    full_scale = float(cube.channels)
    meas = _simulate(cube, sys)
    bits = lux_to_shot_bits(lux)
    y_coded, snr_coded = _noisy_arm(meas.coded.data, full_scale, lux, cfg,
                                    _arm_seed(seed, sys_idx, lux_idx, 0))
    if meas.pan is not None:
        y_pan, snr_pan = _noisy_arm(meas.pan.data, full_scale, lux, cfg,
                                    _arm_seed(seed, sys_idx, lux_idx, 1))
    else:
        y_pan, snr_pan = None, None
    schedule, prior = cfg.schedule(), cfg.prior()
    t0 = time.perf_counter()
    if kind == "odis":
        spec = OdisSpec(cube.height, cube.width, cube.channels, cfg.step)
        est, _ = reconstruct(DispersedImage(cube.height, spec.detector_width,
                                            cfg.step, y_coded),
                             PanImage(cube.height, cube.width, y_pan),
                             spec, schedule, prior,
                             T=cfg.pcg_iterations, tol=cfg.pcg_tol,
                             wavelengths_nm=cube.wavelengths_nm)
        est = est.data
    else:
        est = _reconstruct_masked(y_coded, y_pan, sys, dims, schedule, prior,
                                  cfg.pcg_iterations, cfg.pcg_tol)
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    rep = evaluate(cube.data, est)
    return BenchmarkRow(system=kind, lux=lux, shot_bits=bits, seed=seed,
                        snr_coded_db=snr_coded, snr_pan_db=snr_pan,
                        psnr_db=rep.psnr_db, ssim=rep.ssim,
                        sam_degrees=rep.sam_degrees, runtime_ms=runtime_ms)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _write_rows_csv(path: str, fields, rows_iter):
    """Write rows as they arrive, flushing per row so partial runs are usable."""
    out = []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        fh.flush()
        for row in rows_iter:
            writer.writerow([_fmt(getattr(row, f)) for f in fields])
            fh.flush()
            out.append(row)
    return out


def _summarize(rows: list[BenchmarkRow]):
    keys = sorted({(r.system, r.lux) for r in rows},
                  key=lambda t: (t[0], t[1]))
    summary = []
    for system, lux in keys:
        grp = [r for r in rows if r.system == system and r.lux == lux]
        pans = [r.snr_pan_db for r in grp if r.snr_pan_db is not None]
        summary.append({
            "system": system,
            "lux": lux,
            "shot_bits": grp[0].shot_bits,
            "rows": len(grp),
            "mean_snr_coded_db": float(np.mean([r.snr_coded_db for r in grp])),
            "mean_snr_pan_db": float(np.mean(pans)) if pans else None,
            "mean_psnr_db": float(np.mean([r.psnr_db for r in grp])),
            "mean_ssim": float(np.mean([r.ssim for r in grp])),
            "mean_sam_degrees": float(np.mean([r.sam_degrees for r in grp])),
        })
    return summary


def _plot_vs_lux(summary, value_key: str, ylabel: str, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from PIL import Image

    systems = sorted({s["system"] for s in summary})
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for system in systems:
        pts = sorted([(s["lux"], s[value_key]) for s in summary
                      if s["system"] == system and s[value_key] is not None])
        if not pts:
            continue
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=system)
    ax.set_xscale("log")
    ax.set_xlabel("illumination (lux)")
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    Image.open(path).convert("RGB").save(path, format="PNG")


def benchmark_sweep(config, out_dir: str | None = None) -> list[BenchmarkRow]:
    """Run the full (system, lux, seed) grid; write CSVs and summary plots.

    Files written to the output directory: benchmark_rows.csv (one row per
    tuple, flushed as computed), benchmark_summary.csv (means per
    system+lux), psnr_vs_lux.png, snr_vs_lux.png.
    """
    cfg = load_run_config(config)
    out = out_dir if out_dir is not None else cfg.output_dir
    os.makedirs(out, exist_ok=True)
    cube = cfg.scene()
    dims = (cube.height, cube.width, cube.channels)
    systems = [(kind, _build_system(kind, cfg, dims)) for kind in cfg.systems]

    def rows_iter():
        for sys_idx, (kind, sys) in enumerate(systems):
            for lux_idx, lux in enumerate(cfg.lux_levels):
                for seed in cfg.seeds:
                    yield _run_row(cube, kind, sys, float(lux), int(seed),
                                   cfg, sys_idx, lux_idx)

    rows = _write_rows_csv(os.path.join(out, "benchmark_rows.csv"),
                           ROW_FIELDS, rows_iter())
    summary = _summarize(rows)
    sum_fields = ["system", "lux", "shot_bits", "rows", "mean_snr_coded_db",
                  "mean_snr_pan_db", "mean_psnr_db", "mean_ssim", "mean_sam_degrees"]
    with open(os.path.join(out, "benchmark_summary.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(sum_fields)
        for s in summary:
            writer.writerow([_fmt(s[f]) for f in sum_fields])
    _plot_vs_lux(summary, "mean_psnr_db", "reconstruction PSNR (dB)",
                 os.path.join(out, "psnr_vs_lux.png"))
    _plot_vs_lux(summary, "mean_snr_coded_db", "coded-arm measurement SNR (dB)",
                 os.path.join(out, "snr_vs_lux.png"))
    return rows


@dataclass(frozen=True)
class AblationRow:
    pcg_iterations: int
    psnr_db: float
    ssim: float
    sam_degrees: float
    runtime_ms: float


def ablate_pcg(config, budgets=(5, 10, 15, 20), out_dir: str | None = None) -> list[AblationRow]:
    """Noiseless single-system ablation over the per-stage PCG budget.

    Reconstructs the configured scene from clean (noise-free) dispersion-only
    measurements once per budget and reports metrics per budget in
    pcg_ablation.csv.
    """
    cfg = load_run_config(config)
    out = out_dir if out_dir is not None else cfg.output_dir
    os.makedirs(out, exist_ok=True)
    budgets = tuple(int(b) for b in budgets)
    if not budgets or any(b < 1 for b in budgets):
        raise ValueError("budgets must be positive integers")
    cube = cfg.scene()
    spec = OdisSpec(cube.height, cube.width, cube.channels, cfg.step)
    meas = joint_forward(cube, spec)
    y_disp, y_pan = meas.coded, meas.pan
    schedule, prior = cfg.schedule(), cfg.prior()

    def rows_iter():
        for budget in budgets:
            t0 = time.perf_counter()
            est, _ = reconstruct(y_disp, y_pan, spec, schedule, prior,
                                 T=budget, tol=cfg.pcg_tol,
                                 wavelengths_nm=cube.wavelengths_nm)
            runtime_ms = (time.perf_counter() - t0) * 1000.0
            rep = evaluate(cube.data, est.data)
            yield AblationRow(pcg_iterations=budget, psnr_db=rep.psnr_db,
                              ssim=rep.ssim, sam_degrees=rep.sam_degrees,
                              runtime_ms=runtime_ms)

    fields = ("pcg_iterations", "psnr_db", "ssim", "sam_degrees", "runtime_ms")
    return _write_rows_csv(os.path.join(out, "pcg_ablation.csv"), fields, rows_iter())
