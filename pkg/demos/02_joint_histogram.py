"""
Joint histogram and network input
=================================

The 256x256 joint histogram of attenuation vs gradient magnitude is
where filters are placed: homogeneous materials form low-gradient spots
at the bottom, boundaries form arches. The network never sees the full
histogram; it sees the lower half downscaled 4x and log-normalized:
2048 inputs.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from voltf import (Volume, gradient_magnitude, joint_histogram,
                   reduce_histogram, render_histogram_image)

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

# A smooth boundary (partial-volume effect, like a real scan) is what
# produces the arch: values pass through the intermediate attenuations
# while the gradient peaks mid-transition.
n = 48
idx = np.arange(n)
zz, yy, xx = np.meshgrid(idx, idx, idx, indexing="ij")
r = np.sqrt((xx - 23.5) ** 2 + (yy - 23.5) ** 2 + (zz - 23.5) ** 2)
ramp = np.clip((16.0 - r) / 4.0, 0.0, 1.0)
vol = Volume(dims=(n, n, n), spacing=(1, 1, 1), data=0.2 + 0.6 * ramp)
hist = joint_histogram(vol, gradient_magnitude(vol))
print(f"total binned voxels: {hist.total} (= {vol.voxel_count} voxels)")
print(f"gradient scale (magnitude at top bin): {hist.gradient_scale:.3f}")

Image.fromarray(render_histogram_image(hist)).save(out / "histogram.png")
print("wrote", out / "histogram.png")

reduced = reduce_histogram(hist)
grid = reduced.as_grid()
print(f"reduced input: {reduced.values.size} values "
      f"({grid.shape[0]} gradient rows x {grid.shape[1]} attenuation cols)")
print(f"occupied cells: {np.count_nonzero(grid)} of {grid.size}")

# Scale the reduced grid up for a side-by-side look.
preview = np.kron(np.flipud(grid), np.ones((8, 4)))
Image.fromarray((preview * 255).astype(np.uint8)).save(out / "reduced.png")
print("wrote", out / "reduced.png")
