"""Training-set management, filter prediction, learning-curve experiment.

A training sample pairs the 2048-value reduced histogram with the
geometry of the two filters a user would place for it, packed in the
fixed order (xpos1, ypos1, xsize1, ysize1, xpos2, ypos2, xsize2,
ysize2). The network predicts geometry only; colors and opacities come
from the heart preset.
"""

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientData, ShapeMismatch, WrongFilterCount
from .histogram import (REDUCED_SIZE, JointHistogram, ReducedInput,
                        joint_histogram, reduce_histogram)
from .neural import MlpNetwork, TrainConfig, train
from .transfer_function import FilterSpec
from .volume import PhantomSpec, Volume, gradient_magnitude, make_phantom

TARGET_SIZE = 8
MIN_FILTER_SIZE = 1.0 / 64.0   # one reduced-histogram cell
CURVE_SIZES = (2, 4, 6, 8, 10)
VALIDATION_COUNT = 2


@dataclass(frozen=True)
class TrainingSample:
    input: ReducedInput
    target: np.ndarray
    label: str = ""

    def __post_init__(self):
        target = np.ascontiguousarray(self.target, dtype=np.float64).ravel()
        if target.size != TARGET_SIZE:
            raise ShapeMismatch(f"target must have {TARGET_SIZE} values")
        if target.min() < 0.0 or target.max() > 1.0:
            raise ShapeMismatch("target values must lie in [0,1]")
        target.flags.writeable = False
        object.__setattr__(self, "target", target)


@dataclass
class LearningCurveResult:
    """(n, train_mse, val_mse) per training-set size."""

    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "train_mse", "val_mse"])
        for n, train_mse, val_mse in self.rows:
            writer.writerow([n, repr(float(train_mse)), repr(float(val_mse))])
        return buf.getvalue()


def pack_geometry(f1, f2) -> np.ndarray:
    """Two ((cx,cy),(sx,sy)) geometries into the 8-slot target vector."""
    (c1, s1), (c2, s2) = f1, f2
    return np.array([c1[0], c1[1], s1[0], s1[1],
                     c2[0], c2[1], s2[0], s2[1]], dtype=np.float64)


def unpack_geometry(vec):
    """Inverse of pack_geometry; exact, no clamping."""
    vec = np.asarray(vec, dtype=np.float64).ravel()
    if vec.size != TARGET_SIZE:
        raise ShapeMismatch(f"geometry vector must have {TARGET_SIZE} values")
    return (((vec[0], vec[1]), (vec[2], vec[3])),
            ((vec[4], vec[5]), (vec[6], vec[7])))


def build_sample(v: Volume, filters, label="") -> TrainingSample:
    """Reduced histogram of v paired with the two filters' geometry."""
    if len(filters) != 2:
        raise WrongFilterCount(f"need exactly 2 filters, got {len(filters)}")
    reduced = reduce_histogram(joint_histogram(v, gradient_magnitude(v)))
    f1, f2 = filters
    target = pack_geometry((f1.center, f1.size), (f2.center, f2.size))
    return TrainingSample(input=reduced, target=target, label=label)


def predict_filters(net: MlpNetwork, h: JointHistogram):
    """Forward the reduced histogram and unpack two filter geometries.

    Sizes are clamped below to one reduced-histogram cell so a network
    can never emit a degenerate zero-area filter.
    """
    from .neural import forward
    if net.layer_sizes[0] != REDUCED_SIZE or net.layer_sizes[-1] != TARGET_SIZE:
        raise ShapeMismatch(
            f"network must map {REDUCED_SIZE} inputs to {TARGET_SIZE} outputs, "
            f"got {net.layer_sizes}")
    out = forward(net, reduce_histogram(h).values)
    geoms = []
    for (cx, cy), (sx, sy) in unpack_geometry(out):
        geoms.append(((float(cx), float(cy)),
                      (max(float(sx), MIN_FILTER_SIZE),
                       max(float(sy), MIN_FILTER_SIZE))))
    return tuple(geoms)


def sample_to_json(s: TrainingSample) -> dict:
    return {"input": s.input.values.tolist(), "target": s.target.tolist(),
            "label": s.label}


def sample_from_json(obj: dict) -> TrainingSample:
    return TrainingSample(
        input=ReducedInput(values=np.asarray(obj["input"], dtype=np.float64)),
        target=np.asarray(obj["target"], dtype=np.float64),
        label=obj.get("label", ""))


def save_samples(directory, samples):
    """One JSON file per sample, numbered to keep dataset order."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, s in enumerate(samples):
        path = directory / f"sample_{i:04d}.json"
        path.write_text(json.dumps(sample_to_json(s)), encoding="utf-8")


def load_samples(directory):
    directory = Path(directory)
    return [sample_from_json(json.loads(p.read_text(encoding="utf-8")))
            for p in sorted(directory.glob("*.json"))]


def _as_pairs(samples):
    return [(s.input.values, s.target) for s in samples]


def learning_curve(samples, cfg: TrainConfig, csv_path=None, plot_path=None,
                   hidden=16) -> LearningCurveResult:
    """Train fresh networks on the first 2, 4, 6, 8, 10 samples with the
    last two held out, recording train and validation MSE for each.

    All five networks start from the same seeded initialization, so a
    fixed config reproduces identical CSV bytes.
    """
    if len(samples) < max(CURVE_SIZES) + VALIDATION_COUNT:
        raise InsufficientData(
            f"need >= {max(CURVE_SIZES) + VALIDATION_COUNT} samples, got {len(samples)}")
    validation = _as_pairs(samples[-VALIDATION_COUNT:])
    in_size = samples[0].input.values.size
    out_size = samples[0].target.size

    rows = []
    for n in CURVE_SIZES:
        net = MlpNetwork.random([in_size, hidden, out_size],
                                seed=cfg.init_seed, init_range=cfg.init_range)
        _, report = train(net, _as_pairs(samples[:n]), cfg, validation=validation)
        rows.append((n, report.epoch_mse[-1], report.validation_mse))
    result = LearningCurveResult(rows=rows)

    if csv_path is not None:
        Path(csv_path).write_text(result.to_csv(), encoding="utf-8")
    if plot_path is not None:
        _plot_curve(result, plot_path)
    return result


def _plot_curve(result: LearningCurveResult, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = [r[0] for r in result.rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ns, [r[1] for r in result.rows], "o-", label="training MSE")
    ax.plot(ns, [r[2] for r in result.rows], "s-", label="validation MSE")
    ax.set_xlabel("training samples")
    ax.set_ylabel("MSE")
    ax.set_xticks(ns)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _van_der_corput(i, base=2):
    """Bit-reversed fraction in [0,1): every prefix of the sequence is
    spread evenly, like a user picking representative scans."""
    value, denom = 0.0, 1.0
    while i:
        denom *= base
        i, rem = divmod(i, base)
        value += rem / denom
    return value


def synthetic_heart_dataset(count, seed=0, dims=(32, 32, 32)):
    """Phantom family standing in for clinical heart scans.

    Each sample varies the contrast-filled sphere's attenuation (and,
    weakly, the soft-tissue background) over low-discrepancy sequences,
    plus jitter in radius and position that moves the histogram without
    moving the targets. The targets place one filter on the material
    spot and one on the boundary arch, the way a user would. Few latent
    factors drive both the histogram and the targets, so a handful of
    samples already generalizes.
    """
    rng = np.random.default_rng(seed)
    samples = []
    for i in range(count):
        material = 0.55 + 0.30 * _van_der_corput(i + 1)
        background = 0.16 + 0.04 * _van_der_corput(i + 1, base=3)
        radius = float(rng.uniform(9.0, 11.0))
        center = tuple(d / 2.0 - 0.5 + float(rng.uniform(-1.5, 1.5))
                       for d in dims)
        spec = PhantomSpec(dims=dims, background_value=background,
                           shells=((center, radius, material),))
        volume = make_phantom(spec)
        myocard = FilterSpec(center_x=material, center_y=0.06,
                             size_x=0.18, size_y=0.10)
        boundary = FilterSpec(center_x=(background + material) / 2.0,
                              center_y=0.30, size_x=0.22, size_y=0.30)
        samples.append(build_sample(volume, [myocard, boundary],
                                    label=f"synthetic-heart-{i}"))
    return samples
