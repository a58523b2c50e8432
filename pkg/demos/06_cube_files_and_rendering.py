"""
Cube files, spectra, and pseudo-color views
===========================================

The on-disk container is deliberately boring: one JSON header line, then
raw 32-bit little-endian floats, band-sequential.  Anything that can read
a line and memcpy floats can consume it.
"""

import json
import os

import numpy as np

from odisim.cubeio import (export_spectrum_csv, read_cube, render_band_png,
                           render_pseudo_rgb, synth_cube, write_cube)

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

cube = synth_cube("checker_spectra", (48, 48, 8), seed=2)
path = os.path.join(OUT, "checker.cube")
write_cube(cube, path)

# peek at the header -- it is the first line of the file, nothing more
with open(path, "rb") as fh:
    header = json.loads(fh.readline())
print("header:", json.dumps(header, indent=2)[:220], "...")
print(f"file size: {os.path.getsize(path)} bytes "
      f"(= header line + 4*{cube.height}*{cube.width}*{cube.channels})")

back = read_cube(path)
print(f"round trip max deviation: {np.max(np.abs(back.data - cube.data)):.2e} "
      "(f32 quantization only)")

# pixel spectra: the two checker classes carry different spectral shapes
for name, (x, y) in (("class_a", (1, 1)), ("class_b", (1, 13))):
    csv_path = os.path.join(OUT, f"spectrum_{name}.csv")
    export_spectrum_csv(cube, x, y, csv_path)
    print(f"wrote {csv_path}")

# quick-look renderings
render_band_png(cube, 2, os.path.join(OUT, "checker_band2.png"))
render_band_png(cube, 2, os.path.join(OUT, "checker_band2_16bit.png"), bit_depth=16)
render_pseudo_rgb(cube, os.path.join(OUT, "checker_rgb.png"))
print("wrote checker_band2.png / checker_band2_16bit.png / checker_rgb.png")
