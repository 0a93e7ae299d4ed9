"""
Training the placement network
==============================

Generate a synthetic training set (reduced histogram -> the two-filter
geometry a user would pick), train the 2048-16-8 network, then let it
place filters on an unseen volume and render the result.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from voltf import (Camera, MlpNetwork, PhantomSpec, RenderSettings,
                   TrainConfig, gradient_magnitude, heart_preset,
                   joint_histogram, make_phantom, predict_filters, rasterize,
                   render, save_model, synthetic_heart_dataset, train)
from voltf.renderer import image_to_uint8

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

samples = synthetic_heart_dataset(8, seed=12)
pairs = [(s.input.values, s.target) for s in samples]

net = MlpNetwork.random([2048, 16, 8], seed=0)
cfg = TrainConfig(learning_rate=0.2, mode="online", max_epochs=3000,
                  error_limit=5e-4, shuffle_seed=0)
net, report = train(net, pairs, cfg)
print(f"trained for {report.epochs_run} epochs, "
      f"final MSE {report.epoch_mse[-1]:.2e} ({report.stop_reason})")
(out / "placement_model.json").write_bytes(save_model(net))

# An unseen member of the same family.
spec = PhantomSpec(dims=(32, 32, 32), background_value=0.19,
                   shells=(((15.0, 16.0, 15.5), 10.5, 0.68),))
vol = make_phantom(spec)
grad = gradient_magnitude(vol)
hist = joint_histogram(vol, grad)

geoms = predict_filters(net, hist)
for i, (center, size) in enumerate(geoms, 1):
    print(f"filter {i}: center=({center[0]:.3f}, {center[1]:.3f}) "
          f"size=({size[0]:.3f}, {size[1]:.3f})")

filters = heart_preset(geoms)
camera = Camera(eye=(50.0, 40.0, -35.0), lookat=(15.5, 15.5, 15.5),
                fov=40.0, projection="perspective", width=256, height=256)
img = render(vol, grad, rasterize(filters), camera,
             RenderSettings(background=(0.05, 0.05, 0.08, 1.0)),
             gradient_scale=hist.gradient_scale, threads=4)
Image.fromarray(image_to_uint8(img)).save(out / "autoplaced.png")
print("wrote", out / "autoplaced.png")
