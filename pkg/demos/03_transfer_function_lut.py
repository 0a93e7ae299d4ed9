"""
Filters and the RGBA lookup table
=================================

A filter is a positioned, sized Gauss or sine kernel in histogram space
carrying a color and a peak opacity. Rasterizing blends all filters
into the 256x256 RGBA table the raycaster classifies samples with.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from voltf import FilterSpec, heart_preset, kernel_weight, rasterize
from voltf.transfer_function import lut_to_image

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

for d in (0.0, 0.25, 0.5, 0.75, 1.0):
    print(f"d={d:4.2f}  gauss={kernel_weight('gauss', d):.4f}  "
          f"sine={kernel_weight('sine', d):.4f}")

# The two-filter heart setup: yellow on the myocard/contrast materials,
# red on the contrast-agent boundary above it.
filters = heart_preset((((0.55, 0.06), (0.25, 0.10)),
                        ((0.45, 0.28), (0.30, 0.25))))
lut = rasterize(filters)
Image.fromarray(lut_to_image(lut)).save(out / "heart_lut.png")
print("wrote", out / "heart_lut.png")

# Blending is symmetric and bounded: add a wide sine-kernel backdrop.
backdrop = FilterSpec(center_x=0.5, center_y=0.15, size_x=0.9, size_y=0.5,
                      kernel="sine", color=(0.2, 0.4, 1.0), max_opacity=0.15)
blended = rasterize(filters + [backdrop])
print("alpha stays in [0,1]:", float(blended.rgba[:, :, 3].max()) <= 1.0)
Image.fromarray(lut_to_image(blended)).save(out / "blended_lut.png")
print("wrote", out / "blended_lut.png")
