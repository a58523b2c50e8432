"""CLI: exit codes, file outputs, and the synth -> simulate -> reconstruct chain."""

import csv
import json

import numpy as np
import pytest
from PIL import Image

from odisim.cli import cli_dispatch
from odisim.cubeio import read_cube, synth_cube, write_cube


def run(*argv):
    return cli_dispatch(list(argv))


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------

def test_help_exits_zero(capsys):
    assert run("--help") == 0
    assert "synth" in capsys.readouterr().out


def test_usage_errors_exit_two(capsys):
    assert run() == 2                       # missing subcommand
    assert run("no_such_command") == 2
    assert run("synth") == 2                # missing required --out
    capsys.readouterr()


def test_runtime_errors_exit_one(tmp_path, capsys):
    missing = str(tmp_path / "nope.cube")
    assert run("simulate", "--cube", missing, "--out-dir", str(tmp_path)) == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")


# ---------------------------------------------------------------------------
# synth / render
# ---------------------------------------------------------------------------

def test_synth_writes_cube(tmp_path, capsys):
    out = str(tmp_path / "scene.cube")
    assert run("synth", "--kind", "gaussian_blobs", "--dims", "6x7x3",
               "--seed", "11", "--out", out) == 0
    assert "wrote" in capsys.readouterr().out
    cube = read_cube(out)
    assert (cube.height, cube.width, cube.channels) == (6, 7, 3)
    expected = synth_cube("gaussian_blobs", (6, 7, 3), seed=11)
    assert np.allclose(cube.data, expected.data, atol=1e-6)


def test_synth_bad_dims_exits_one(tmp_path, capsys):
    assert run("synth", "--dims", "6x7", "--out", str(tmp_path / "x.cube")) == 1
    assert "HxWxC" in capsys.readouterr().err


def test_render_band_and_rgb_and_spectrum(tmp_path, capsys):
    scene = str(tmp_path / "scene.cube")
    run("synth", "--kind", "checker_spectra", "--dims", "12x12x4", "--out", scene)
    band_png = str(tmp_path / "band.png")
    assert run("render", "--cube", scene, "--band", "2", "--out", band_png) == 0
    assert Image.open(band_png).size == (12, 12)

    rgb_png = str(tmp_path / "rgb.png")
    assert run("render", "--cube", scene, "--rgb", "--out", rgb_png) == 0
    assert Image.open(rgb_png).mode == "RGB"

    spec_csv = str(tmp_path / "spec.csv")
    assert run("render", "--cube", scene, "--spectrum", "3,4", "--out", spec_csv) == 0
    with open(spec_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["wavelength_nm", "value", "value_normalized_to_max"]
    assert len(rows) == 5
    capsys.readouterr()


def test_render_requires_exactly_one_mode(tmp_path, capsys):
    scene = str(tmp_path / "scene.cube")
    run("synth", "--dims", "12x12x2", "--out", scene)
    out = str(tmp_path / "x.png")
    assert run("render", "--cube", scene, "--out", out) == 1
    assert run("render", "--cube", scene, "--band", "1", "--rgb",
               "--out", out) == 1
    assert "exactly one" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# simulate / reconstruct / metrics chain
# ---------------------------------------------------------------------------

@pytest.fixture()
def scene_file(tmp_path):
    path = str(tmp_path / "scene.cube")
    write_cube(synth_cube("smooth_gradient", (12, 12, 3), seed=7), path)
    return path


def test_simulate_clean_measurements(scene_file, tmp_path, capsys):
    out_dir = str(tmp_path / "meas")
    assert run("simulate", "--cube", scene_file, "--out-dir", out_dir) == 0
    coded = read_cube(out_dir + "/coded.cube")
    pan = read_cube(out_dir + "/pan.cube")
    assert coded.channels == 1 and pan.channels == 1
    assert coded.width == 12 + (3 - 1)      # dispersed width W + d*(C-1)
    assert pan.width == 12
    # clean ODIS arms conserve flux: both arms sum to the cube total
    cube = read_cube(scene_file)
    assert np.sum(coded.data) == pytest.approx(np.sum(cube.data), rel=1e-6)
    assert np.sum(pan.data) == pytest.approx(np.sum(cube.data), rel=1e-6)
    capsys.readouterr()


def test_simulate_noisy_prints_snr(scene_file, tmp_path, capsys):
    out_dir = str(tmp_path / "meas")
    assert run("simulate", "--cube", scene_file, "--out-dir", out_dir,
               "--lux", "35", "--noise-seed", "3") == 0
    out = capsys.readouterr().out
    assert "SNR" in out and "9-bit" in out
    # the noisy payload differs from the clean one
    clean_dir = str(tmp_path / "clean")
    run("simulate", "--cube", scene_file, "--out-dir", clean_dir)
    noisy = read_cube(out_dir + "/coded.cube")
    clean = read_cube(clean_dir + "/coded.cube")
    assert not np.array_equal(noisy.data, clean.data)
    capsys.readouterr()


def test_simulate_competitor_system(scene_file, tmp_path, capsys):
    out_dir = str(tmp_path / "meas")
    assert run("simulate", "--cube", scene_file, "--system", "sdcassi_dc",
               "--out-dir", out_dir) == 0
    coded = read_cube(out_dir + "/coded.cube")
    assert coded.width == 12 + (3 - 1)
    capsys.readouterr()


def test_reconstruct_chain_with_metrics(scene_file, tmp_path, capsys):
    meas = str(tmp_path / "meas")
    run("simulate", "--cube", scene_file, "--out-dir", meas)
    est_path = str(tmp_path / "est.cube")
    metrics_csv = str(tmp_path / "metrics.csv")
    diags_csv = str(tmp_path / "diags.csv")
    cfg = {"schedule": {"stages": 4}, "pcg": {"iterations": 8}}
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w") as fh:
        json.dump(cfg, fh)
    assert run("reconstruct", "--dispersed", meas + "/coded.cube",
               "--pan", meas + "/pan.cube", "--config", cfg_path,
               "--channels", "3", "--out", est_path,
               "--ref", scene_file, "--metrics-out", metrics_csv,
               "--diagnostics-out", diags_csv) == 0
    out = capsys.readouterr().out
    assert "PSNR" in out

    est = read_cube(est_path)
    assert (est.height, est.width, est.channels) == (12, 12, 3)

    with open(metrics_csv, newline="") as fh:
        rows = {r[0]: r[1] for r in list(csv.reader(fh))[1:]}
    assert float(rows["psnr_db"]) > 20.0      # noiseless: easy reconstruction
    assert {"ssim", "sam_degrees", "sam_excluded_pixels",
            "band_psnr_db_1", "band_psnr_db_3"} <= set(rows)

    with open(diags_csv, newline="") as fh:
        recs = list(csv.DictReader(fh))
    assert len(recs) == 4
    assert [int(r["stage"]) for r in recs] == [1, 2, 3, 4]
    assert all(float(r["objective"]) >= 0 for r in recs)


def test_reconstruct_rejects_inconsistent_geometry(scene_file, tmp_path, capsys):
    meas = str(tmp_path / "meas")
    run("simulate", "--cube", scene_file, "--out-dir", meas)
    # claim 5 channels: detector width no longer matches the payload
    assert run("reconstruct", "--dispersed", meas + "/coded.cube",
               "--pan", meas + "/pan.cube", "--channels", "5",
               "--out", str(tmp_path / "est.cube")) == 1
    assert "check --channels/--step" in capsys.readouterr().err


def test_metrics_command(scene_file, tmp_path, capsys):
    est_path = str(tmp_path / "est.cube")
    cube = read_cube(scene_file)
    write_cube(cube, est_path)  # estimate == reference
    out_csv = str(tmp_path / "m.csv")
    assert run("metrics", "--reference", scene_file, "--estimate", est_path,
               "--out", out_csv) == 0
    assert "PSNR 300.00 dB" in capsys.readouterr().out
    with open(out_csv, newline="") as fh:
        rows = {r[0]: r[1] for r in list(csv.reader(fh))[1:]}
    assert float(rows["psnr_db"]) == 300.0
    assert float(rows["ssim"]) == 1.0


# ---------------------------------------------------------------------------
# benchmark and oracle entry points
# ---------------------------------------------------------------------------

def test_benchmark_command(tmp_path, capsys):
    cfg = {
        "scene": {"kind": "smooth_gradient", "height": 12, "width": 12,
                  "channels": 2, "seed": 1},
        "systems": ["odis"],
        "lux_levels": [141],
        "seeds": [0],
        "schedule": {"stages": 2},
        "pcg": {"iterations": 4},
    }
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w") as fh:
        json.dump(cfg, fh)
    out_dir = str(tmp_path / "bench")
    assert run("benchmark", "--config", cfg_path, "--out-dir", out_dir) == 0
    assert "benchmark_rows.csv" in capsys.readouterr().out
    with open(out_dir + "/benchmark_rows.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 1


def test_benchmark_ablation_flag(tmp_path, capsys):
    cfg = {
        "scene": {"kind": "smooth_gradient", "height": 12, "width": 12,
                  "channels": 2, "seed": 1},
        "systems": ["odis"],
        "lux_levels": [141],
        "seeds": [0],
        "schedule": {"stages": 2},
    }
    cfg_path = str(tmp_path / "cfg.json")
    with open(cfg_path, "w") as fh:
        json.dump(cfg, fh)
    out_dir = str(tmp_path / "ab")
    assert run("benchmark", "--config", cfg_path, "--out-dir", out_dir,
               "--ablate-pcg", "2,3") == 0
    out = capsys.readouterr().out
    assert "T=  2" in out and "T=  3" in out
    with open(out_dir + "/pcg_ablation.csv", newline="") as fh:
        recs = list(csv.DictReader(fh))
    assert [int(r["pcg_iterations"]) for r in recs] == [2, 3]


def test_oracle_command(capsys):
    assert run("oracle") == 0
    out = capsys.readouterr().out
    assert "checks passed" in out
