"""Joint attenuation/gradient histogram and its network-input reduction.

The histogram is a 256x256 count grid: x-axis = attenuation bin from the
normalized voxel value, y-axis = gradient-magnitude bin. Homogeneous
materials show up as low-gradient spots, material boundaries as arches
between them. The reduction keeps the lower half (gradient bins 0..127),
sums 4x4 blocks into a 32x64 grid, and log-normalizes to [0,1] -- 2048
inputs for the placement network.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimsMismatch
from .volume import GradientVolume, Volume

BINS = 256
REDUCED_ROWS = 32   # gradient axis after lower-half crop and 4x downscale
REDUCED_COLS = 64   # attenuation axis after 4x downscale
REDUCED_SIZE = REDUCED_ROWS * REDUCED_COLS

GRADIENT_PERCENTILE = 99.5


@dataclass(frozen=True)
class JointHistogram:
    """counts[y, x]: y = gradient bin, x = attenuation bin.

    gradient_scale is the magnitude mapped to bin 255; larger
    magnitudes were clamped to it.
    """

    counts: np.ndarray
    gradient_scale: float

    def __post_init__(self):
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        if counts.shape != (BINS, BINS):
            raise ValueError(f"counts must be {BINS}x{BINS}, got {counts.shape}")
        if counts.min() < 0:
            raise ValueError("histogram counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "gradient_scale", float(self.gradient_scale))

    @property
    def total(self):
        return int(self.counts.sum())


@dataclass(frozen=True)
class ReducedInput:
    """2048 values in [0,1]: 32 gradient rows x 64 attenuation columns,
    row-major starting at gradient bin 0."""

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64).ravel()
        if values.size != REDUCED_SIZE:
            raise ValueError(f"reduced input must have {REDUCED_SIZE} values")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise ValueError("reduced values must lie in [0,1]")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def as_grid(self):
        return self.values.reshape(REDUCED_ROWS, REDUCED_COLS)


def default_gradient_scale(g: GradientVolume) -> float:
    """Magnitude mapped to the top gradient bin.

    The 99.5th percentile, so a handful of extreme-gradient voxels
    cannot compress all structure into the bottom rows. Falls back to
    the maximum when the percentile is zero (almost-everywhere-flat
    fixtures), keeping arches visible.
    """
    scale = float(np.percentile(g.magnitudes, GRADIENT_PERCENTILE))
    if scale <= 0.0:
        scale = g.max_magnitude
    return scale


def joint_histogram(v: Volume, g: GradientVolume,
                    gradient_scale: float | None = None) -> JointHistogram:
    """Bin every voxel once by (value, clamped gradient magnitude)."""
    if v.dims != g.dims:
        raise DimsMismatch(f"volume dims {v.dims} != gradient dims {g.dims}")
    if gradient_scale is None:
        gradient_scale = default_gradient_scale(g)
    values = v.data.ravel().astype(np.float64)
    mags = g.magnitudes.ravel().astype(np.float64)

    x = np.clip(np.floor(values * 255.0 + 0.5), 0, 255).astype(np.int64)
    if gradient_scale > 0.0:
        norm = np.minimum(mags, gradient_scale) / gradient_scale
        y = np.clip(np.floor(norm * 255.0 + 0.5), 0, 255).astype(np.int64)
    else:
        y = np.zeros_like(x)

    counts = np.bincount(y * BINS + x, minlength=BINS * BINS)
    return JointHistogram(counts=counts.reshape(BINS, BINS),
                          gradient_scale=gradient_scale)


def lower_half_block_sums(h: JointHistogram) -> np.ndarray:
    """4x4 block sums of gradient bins 0..127: the pre-normalization
    32x64 reduction grid."""
    lower = h.counts[: BINS // 2, :]
    return lower.reshape(REDUCED_ROWS, 4, REDUCED_COLS, 4).sum(axis=(1, 3))


def reduce_histogram(h: JointHistogram) -> ReducedInput:
    """Crop to the lower half, downscale 4x by block sum, then map each
    cell through ln(1+c)/ln(1+cmax) so counts spanning orders of
    magnitude do not saturate the logistic units downstream."""
    blocks = lower_half_block_sums(h).astype(np.float64)
    cmax = blocks.max()
    if cmax <= 0:
        return ReducedInput(values=np.zeros(REDUCED_SIZE))
    values = np.log1p(blocks) / np.log1p(cmax)
    return ReducedInput(values=values.ravel())


def render_histogram_image(h: JointHistogram) -> np.ndarray:
    """Grayscale 256x256 view, log-scaled, gradient bin 0 at the bottom.

    Returns a uint8 array ready for PNG encoding (row 0 = top).
    """
    counts = h.counts.astype(np.float64)
    cmax = counts.max()
    if cmax <= 0:
        img = np.zeros((BINS, BINS))
    else:
        img = 255.0 * np.log1p(counts) / np.log1p(cmax)
    img = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return img[::-1, :].copy()


def histogram_to_json(h: JointHistogram) -> dict:
    return {"counts": h.counts.tolist(), "gradient_scale": h.gradient_scale}


def histogram_from_json(obj: dict) -> JointHistogram:
    return JointHistogram(counts=np.asarray(obj["counts"], dtype=np.int64),
                          gradient_scale=float(obj["gradient_scale"]))


def reduced_to_json(r: ReducedInput) -> list:
    return r.values.tolist()


def reduced_from_json(values) -> ReducedInput:
    return ReducedInput(values=np.asarray(values, dtype=np.float64))
