"""Simulation and reconstruction toolkit for dispersion-based snapshot
spectral imaging.

The instrument model: one camera alternates between a dispersed exposure
(each spectral band shifted laterally by a fixed per-channel step before
summing on the detector) and a panchromatic exposure (plain band sum).
Reconstruction solves the joint inverse problem with plug-and-play ADMM
whose data step exploits the shift structure through an FFT-diagonalized
preconditioner.  Masked architectures (coded-aperture and per-pixel
filter systems) are modeled alongside for throughput and noise
comparisons.
"""

from .core import (NDArrayF, HSICube, PanImage, DispersedImage, Wavelengths,
                   make_cube, band, linspace_wavelengths)
from .forward import (SYSTEM_KINDS, OdisSpec, SystemSpec, Measurements,
                      odis_disperse, odis_pan, odis_adjoint_disperse,
                      odis_adjoint_pan, joint_forward, competitor_forward,
                      effective_throughput, random_binary_mask,
                      mosaic_channel_map)
from .noise import (LUX_TO_BITS_TABLE, IlluminationModel, lux_to_shot_bits,
                    apply_noise, measurement_snr)
from .linalg import (NormalOperator, CyclicPreconditioner, PcgReport,
                     apply_normal, apply_c_inverse, apply_cyclic_inverse,
                     apply_preconditioner, pcg_solve, cg_solve,
                     materialize_dense, reset_fft_counters, fft_pass_counts)
from .recon import (Schedule, Prior, AdmmState, StageDiagnostics,
                    default_schedule, initialize, x_step, z_step, dual_update,
                    data_residual, objective, reconstruct, tv_denoise,
                    guided_filter)
from .metrics import MetricReport, psnr, ssim, sam, evaluate
from .cubeio import (SYNTH_KINDS, read_cube, write_cube, image_to_cube,
                     synth_cube, render_band_png, render_pseudo_rgb,
                     export_spectrum_csv, default_rgb_response)
from .benchmark import (RunConfig, BenchmarkRow, load_run_config,
                        benchmark_sweep, ablate_pcg, DEFAULT_LUX_LEVELS)
from .oracle import run_oracle
from .cli import cli_dispatch

__version__ = "0.1.0"

__all__ = [
    "NDArrayF", "HSICube", "PanImage", "DispersedImage", "Wavelengths",
    "make_cube", "band", "linspace_wavelengths",
    "SYSTEM_KINDS", "OdisSpec", "SystemSpec", "Measurements",
    "odis_disperse", "odis_pan", "odis_adjoint_disperse", "odis_adjoint_pan",
    "joint_forward", "competitor_forward", "effective_throughput",
    "random_binary_mask", "mosaic_channel_map",
    "LUX_TO_BITS_TABLE", "IlluminationModel", "lux_to_shot_bits",
    "apply_noise", "measurement_snr",
    "NormalOperator", "CyclicPreconditioner", "PcgReport", "apply_normal",
    "apply_c_inverse", "apply_cyclic_inverse", "apply_preconditioner",
    "pcg_solve", "cg_solve", "materialize_dense", "reset_fft_counters",
    "fft_pass_counts",
    "Schedule", "Prior", "AdmmState", "StageDiagnostics", "default_schedule",
    "initialize", "x_step", "z_step", "dual_update", "data_residual",
    "objective", "reconstruct", "tv_denoise", "guided_filter",
    "MetricReport", "psnr", "ssim", "sam", "evaluate",
    "SYNTH_KINDS", "read_cube", "write_cube", "image_to_cube", "synth_cube",
    "render_band_png", "render_pseudo_rgb", "export_spectrum_csv",
    "default_rgb_response",
    "RunConfig", "BenchmarkRow", "load_run_config", "benchmark_sweep",
    "ablate_pcg", "DEFAULT_LUX_LEVELS",
    "run_oracle", "cli_dispatch",
]
