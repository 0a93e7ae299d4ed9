"""
Learning-curve experiment
=========================

How many manually labeled volumes does the placement network need?
Hold out the last 2 of 12 samples, train fresh networks on the first
2, 4, 6, 8, 10, and compare training vs validation MSE. Generalization
saturates after a handful of samples because same-type histograms share
their basic shape.
"""

from pathlib import Path

from voltf import TrainConfig, learning_curve, synthetic_heart_dataset

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

samples = synthetic_heart_dataset(12, seed=42)
cfg = TrainConfig(learning_rate=0.2, mode="online", max_epochs=2000,
                  error_limit=1e-4, shuffle_seed=0, init_seed=0)
result = learning_curve(samples, cfg, csv_path=out / "curve.csv",
                        plot_path=out / "curve.png")

print(f"{'n':>3} {'train MSE':>12} {'val MSE':>12}")
for n, train_mse, val_mse in result.rows:
    print(f"{n:>3} {train_mse:>12.3e} {val_mse:>12.3e}")
print("wrote", out / "curve.csv", "and", out / "curve.png")
