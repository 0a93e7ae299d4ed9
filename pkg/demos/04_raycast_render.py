"""
Raycasting the classified volume
================================

March rays front to back through the phantom, classify each sample via
the LUT, and composite. Gradient-based Lambert shading is optional and
improves depth perception at material boundaries.
"""

import time
from pathlib import Path

from PIL import Image

from voltf import (Camera, PhantomSpec, RenderSettings, gradient_magnitude,
                   heart_preset, joint_histogram, make_phantom, rasterize,
                   render)
from voltf.renderer import image_to_uint8

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

spec = PhantomSpec(
    dims=(64, 64, 64),
    background_value=0.2,
    shells=(((31.5, 31.5, 31.5), 22.0, 0.5), ((31.5, 31.5, 31.5), 14.0, 0.8)),
)
vol = make_phantom(spec)
grad = gradient_magnitude(vol)
hist = joint_histogram(vol, grad)

filters = heart_preset((((0.5, 0.04), (0.22, 0.07)),
                        ((0.65, 0.3), (0.4, 0.5))))
lut = rasterize(filters)

camera = Camera(eye=(90.0, 70.0, -60.0), lookat=(31.5, 31.5, 31.5),
                up=(0, 1, 0), fov=40.0, projection="perspective",
                width=320, height=320)

for shading in ("none", "lambert"):
    settings = RenderSettings(step_size=0.5, shading=shading,
                              background=(0.05, 0.05, 0.08, 1.0),
                              light=(0.5, 0.7, -0.6))
    t0 = time.time()
    img = render(vol, grad, lut, camera, settings,
                 gradient_scale=hist.gradient_scale, threads=4)
    path = out / f"render_{shading}.png"
    Image.fromarray(image_to_uint8(img)).save(path)
    print(f"{shading:7s} {time.time() - t0:5.1f}s -> {path}")
