"""Command-line interface.

Subcommands: synth, simulate, reconstruct, metrics, benchmark, oracle.
Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors (message
on standard error).  All CSV output is comma-separated with a header row
and LF line endings; measurement files reuse the cube container with
channels=1.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from .core import PanImage, DispersedImage
from .forward import (SYSTEM_KINDS, OdisSpec, SystemSpec, joint_forward,
                      competitor_forward, random_binary_mask, mosaic_channel_map)
from .noise import IlluminationModel, apply_noise, measurement_snr
from .recon import reconstruct
from .metrics import evaluate
from .cubeio import (SYNTH_KINDS, read_cube, write_cube, image_to_cube,
                     synth_cube, render_band_png, render_pseudo_rgb,
                     export_spectrum_csv)
from .benchmark import load_run_config, benchmark_sweep, ablate_pcg
from .oracle import run_oracle

__all__ = ["cli_dispatch", "main"]


def _parse_dims(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ValueError(f"dims must look like HxWxC, got {text!r}")
    return tuple(int(p) for p in parts)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odisim",
        description="Simulate and reconstruct snapshot spectral measurements.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene cube")
    p.add_argument("--kind", choices=SYNTH_KINDS, default="smooth_gradient")
    p.add_argument("--dims", default="64x64x8", help="HxWxC (default 64x64x8)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output cube path")

    p = sub.add_parser("simulate",
                       help="cube -> measurement files (optionally noisy)")
    p.add_argument("--cube", required=True, help="input scene cube")
    p.add_argument("--system", choices=SYSTEM_KINDS, default="odis")
    p.add_argument("--step", type=int, default=1, help="dispersion step in pixels")
    p.add_argument("--transmittance", type=float, default=0.5,
                   help="mask open fraction for coded-aperture systems")
    p.add_argument("--mask-seed", type=int, default=0)
    p.add_argument("--lux", type=float, default=None,
                   help="apply the noise model at this illumination (omit for clean)")
    p.add_argument("--noise-seed", type=int, default=0)
    p.add_argument("--exposure-ms", type=float, default=500.0)
    p.add_argument("--read-sigma", type=float, default=9.29,
                   help="read-noise standard deviation in electrons")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("reconstruct",
                       help="dispersed + PAN measurements -> estimated cube")
    p.add_argument("--dispersed", required=True, help="dispersed measurement cube file")
    p.add_argument("--pan", required=True, help="PAN measurement cube file")
    p.add_argument("--config", default=None,
                   help="run-config JSON for channels/step/schedule/prior/PCG")
    p.add_argument("--channels", type=int, default=None,
                   help="override the channel count from the config")
    p.add_argument("--step", type=int, default=None,
                   help="override the dispersion step from the config")
    p.add_argument("--out", required=True, help="output cube path")
    p.add_argument("--ref", default=None, help="ground-truth cube for metrics")
    p.add_argument("--metrics-out", default=None, help="metrics CSV path")
    p.add_argument("--diagnostics-out", default=None, help="per-stage diagnostics CSV")

    p = sub.add_parser("metrics", help="score an estimate against a reference")
    p.add_argument("--reference", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--out", default=None, help="metrics CSV path")

    p = sub.add_parser("benchmark", help="cross-system sweep from a run config")
    p.add_argument("--config", required=True, help="RunConfig JSON path")
    p.add_argument("--out-dir", default=None, help="override config output_dir")
    p.add_argument("--ablate-pcg", default=None, metavar="BUDGETS",
                   help="comma-separated per-stage PCG budgets; runs the "
                        "noiseless iteration ablation instead of the sweep")

    p = sub.add_parser("render", help="export PNG views and spectra from a cube")
    p.add_argument("--cube", required=True)
    p.add_argument("--band", type=int, default=None, help="1-based band to render")
    p.add_argument("--bit-depth", type=int, choices=(8, 16), default=8)
    p.add_argument("--rgb", action="store_true", help="write a pseudo-RGB rendering")
    p.add_argument("--response", default=None, help="3xC response matrix CSV")
    p.add_argument("--spectrum", default=None, metavar="X,Y",
                   help="export the spectrum at pixel row X, column Y")
    p.add_argument("--out", required=True, help="output path (PNG or CSV)")

    p = sub.add_parser("oracle", help="run the dense-matrix verification suite")
    p.add_argument("--verbose", action="store_true")
    return parser


def _cmd_synth(args) -> int:
    cube = synth_cube(args.kind, _parse_dims(args.dims), args.seed)
    write_cube(cube, args.out)
    print(f"wrote {args.out} ({cube.height}x{cube.width}x{cube.channels}, {args.kind})")
    return 0


def _build_system(args, dims) -> SystemSpec:
    h, w, c = dims
    if args.system == "odis":
        return SystemSpec(kind="odis", step=args.step)
    if args.system == "pmvis_dc":
        return SystemSpec(kind=args.system, step=args.step,
                          mask=mosaic_channel_map(h, w, c))
    return SystemSpec(kind=args.system, step=args.step,
                      mask=random_binary_mask(h, w, args.transmittance, args.mask_seed))


def _cmd_simulate(args) -> int:
    cube = read_cube(args.cube)
    dims = (cube.height, cube.width, cube.channels)
    sys_spec = _build_system(args, dims)
    if args.system == "odis":
        meas = joint_forward(cube, OdisSpec(*dims, step=args.step))
    else:
        meas = competitor_forward(cube, sys_spec)
    os.makedirs(args.out_dir, exist_ok=True)
    full_scale = float(cube.channels)
    arms = [("coded", meas.coded.data)]
    if meas.pan is not None:
        arms.append(("pan", meas.pan.data))
    for arm_name, clean in arms:
        out = clean
        if args.lux is not None:
            model = IlluminationModel(lux=args.lux, exposure_ms=args.exposure_ms,
                                      read_sigma_e=args.read_sigma,
                                      seed=args.noise_seed + (0 if arm_name == "coded" else 1))
            out = apply_noise(clean / full_scale, model) * full_scale
            print(f"{arm_name}: SNR {measurement_snr(clean, out):.2f} dB "
                  f"(lux {args.lux:g}, {model.shot_bits}-bit shot scale)")
        path = os.path.join(args.out_dir, f"{arm_name}.cube")
        write_cube(image_to_cube(out), path)
        print(f"wrote {path}")
    return 0


def _cmd_reconstruct(args) -> int:
    cfg = load_run_config(args.config if args.config is not None else {})
    channels = args.channels if args.channels is not None else cfg.channels
    step = args.step if args.step is not None else cfg.step
    y_disp_cube = read_cube(args.dispersed)
    y_pan_cube = read_cube(args.pan)
    h, w = y_pan_cube.height, y_pan_cube.width
    spec = OdisSpec(h, w, channels, step)
    if y_disp_cube.width != spec.detector_width:
        raise ValueError(
            f"dispersed width {y_disp_cube.width} != W + step*(C-1) = "
            f"{spec.detector_width}; check --channels/--step")
    y_disp = DispersedImage(h, spec.detector_width, step, y_disp_cube.data[0])
    y_pan = PanImage(h, w, y_pan_cube.data[0])
    est, diags = reconstruct(y_disp, y_pan, spec, cfg.schedule(), cfg.prior(),
                             T=cfg.pcg_iterations, tol=cfg.pcg_tol)
    write_cube(est, args.out)
    print(f"wrote {args.out}")
    if args.diagnostics_out:
        with open(args.diagnostics_out, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["stage", "rho", "lam", "sigma", "objective",
                             "data_residual_norm", "pcg_iterations",
                             "pcg_relative_residual"])
            for dg in diags:
                writer.writerow([dg.stage, f"{dg.rho:.12g}", f"{dg.lam:.12g}",
                                 f"{dg.sigma:.12g}", f"{dg.objective:.12g}",
                                 f"{dg.data_residual_norm:.12g}",
                                 dg.pcg.iterations,
                                 f"{dg.pcg.relative_residual:.12g}"])
        print(f"wrote {args.diagnostics_out}")
    if args.ref:
        ref = read_cube(args.ref)
        _report_metrics(ref.data, est.data, args.metrics_out)
    return 0


def _report_metrics(ref, est, out_path) -> None:
    rep = evaluate(ref, est)
    print(f"PSNR {rep.psnr_db:.2f} dB  SSIM {rep.ssim:.4f}  "
          f"SAM {rep.sam_degrees:.2f} deg")
    if out_path:
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["metric", "value"])
            writer.writerow(["psnr_db", f"{rep.psnr_db:.12g}"])
            writer.writerow(["ssim", f"{rep.ssim:.12g}"])
            writer.writerow(["sam_degrees", f"{rep.sam_degrees:.12g}"])
            writer.writerow(["sam_excluded_pixels", rep.sam_excluded_pixels])
            for i, v in enumerate(rep.band_psnr_db, start=1):
                writer.writerow([f"band_psnr_db_{i}", f"{v:.12g}"])
        print(f"wrote {out_path}")


def _cmd_metrics(args) -> int:
    ref = read_cube(args.reference)
    est = read_cube(args.estimate)
    _report_metrics(ref.data, est.data, args.out)
    return 0


def _cmd_benchmark(args) -> int:
    if args.ablate_pcg is not None:
        budgets = tuple(int(b) for b in args.ablate_pcg.split(",") if b.strip())
        rows = ablate_pcg(args.config, budgets, out_dir=args.out_dir)
        for r in rows:
            print(f"T={r.pcg_iterations:3d}  PSNR {r.psnr_db:.2f} dB  "
                  f"SSIM {r.ssim:.4f}  SAM {r.sam_degrees:.2f} deg")
        return 0
    rows = benchmark_sweep(args.config, out_dir=args.out_dir)
    cfg = load_run_config(args.config)
    out = args.out_dir if args.out_dir is not None else cfg.output_dir
    print(f"{len(rows)} rows -> {os.path.join(out, 'benchmark_rows.csv')}")
    return 0


def _cmd_render(args) -> int:
    cube = read_cube(args.cube)
    if sum(bool(v) for v in (args.band is not None, args.rgb,
                             args.spectrum is not None)) != 1:
        raise ValueError("choose exactly one of --band, --rgb, --spectrum")
    if args.band is not None:
        render_band_png(cube, args.band, args.out, bit_depth=args.bit_depth)
    elif args.rgb:
        render_pseudo_rgb(cube, args.out, response=args.response)
    else:
        x, y = (int(p) for p in args.spectrum.split(","))
        export_spectrum_csv(cube, x, y, args.out)
    print(f"wrote {args.out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "simulate": _cmd_simulate,
    "reconstruct": _cmd_reconstruct,
    "metrics": _cmd_metrics,
    "benchmark": _cmd_benchmark,
    "render": _cmd_render,
}


def cli_dispatch(argv) -> int:
    """Parse argv (no program name) and run; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    if args.command == "oracle":
        return 1 if run_oracle(verbose=args.verbose) else 0
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
