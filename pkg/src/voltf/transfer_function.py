"""Transfer-function filters and their rasterization into a 256x256 LUT.

A filter is a positioned, sized kernel in histogram space that assigns
color and opacity to the (attenuation, gradient) bins it covers. The
kernels have compact support: the size fields are the full extent of the
filter's rectangular footprint, so a filter visibly ends at its box.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidFilter
from .histogram import BINS

KERNELS = ("gauss", "sine")

# Opacity defaults for the two-filter heart setup: the red boundary
# filter must dominate where both overlap.
HEART_MYOCARD_OPACITY = 0.35
HEART_BOUNDARY_OPACITY = 0.6
YELLOW = (1.0, 1.0, 0.0)
RED = (1.0, 0.0, 0.0)

# Gauss kernel truncated at its support edge: exp(-4.5) ~ 0.011,
# near-continuous against the zero outside.
GAUSS_FALLOFF = 4.5


@dataclass(frozen=True)
class FilterSpec:
    """One transfer-function filter.

    center_* in [0,1] histogram coordinates, size_* full widths in
    (0,1], kernel "gauss" or "sine", color RGB in [0,1]^3, max_opacity
    the peak alpha at the center.
    """

    center_x: float
    center_y: float
    size_x: float
    size_y: float
    kernel: str = "gauss"
    color: tuple = (1.0, 1.0, 1.0)
    max_opacity: float = 1.0

    def __post_init__(self):
        for name in ("center_x", "center_y"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise InvalidFilter(name, f"must be in [0,1], got {val}")
        for name in ("size_x", "size_y"):
            val = getattr(self, name)
            if not 0.0 < val <= 1.0:
                raise InvalidFilter(name, f"must be in (0,1], got {val}")
        if self.kernel not in KERNELS:
            raise InvalidFilter("kernel", f"must be one of {KERNELS}")
        color = tuple(float(c) for c in self.color)
        if len(color) != 3 or any(not 0.0 <= c <= 1.0 for c in color):
            raise InvalidFilter("color", f"must be 3 values in [0,1], got {self.color}")
        if not 0.0 <= self.max_opacity <= 1.0:
            raise InvalidFilter("opacity", f"must be in [0,1], got {self.max_opacity}")
        object.__setattr__(self, "color", color)

    @property
    def center(self):
        return (self.center_x, self.center_y)

    @property
    def size(self):
        return (self.size_x, self.size_y)


@dataclass(frozen=True)
class TransferLut:
    """rgba[y, x, c]: 256x256 cells, every channel in [0,1]."""

    rgba: np.ndarray

    def __post_init__(self):
        rgba = np.ascontiguousarray(self.rgba, dtype=np.float64)
        if rgba.shape != (BINS, BINS, 4):
            raise ValueError(f"LUT must be {BINS}x{BINS}x4, got {rgba.shape}")
        rgba.flags.writeable = False
        object.__setattr__(self, "rgba", rgba)


def kernel_weight(kernel, d):
    """Falloff of a filter at normalized radial distance d >= 0.

    1 at the center, non-increasing, zero outside d > 1. Accepts
    scalars or arrays.
    """
    if kernel not in KERNELS:
        raise InvalidFilter("kernel", f"must be one of {KERNELS}")
    d = np.asarray(d, dtype=np.float64)
    if kernel == "gauss":
        w = np.exp(-GAUSS_FALLOFF * d * d)
    else:
        w = np.cos(np.pi * d / 2.0) ** 2
    w = np.where(d <= 1.0, w, 0.0)
    return float(w) if w.ndim == 0 else w


def rasterize(filters) -> TransferLut:
    """Blend filters into the RGBA lookup table.

    Per cell: alpha combines independently, a = 1 - prod(1 - a_i);
    color is the opacity-weighted average. Symmetric in filter order,
    bounded, and reduces to the single-filter shape on its own.
    """
    u = np.arange(BINS, dtype=np.float64) / (BINS - 1)
    uu, vv = np.meshgrid(u, u)          # vv rows = gradient axis
    one_minus = np.ones((BINS, BINS), dtype=np.float64)
    weighted_color = np.zeros((BINS, BINS, 3), dtype=np.float64)
    alpha_sum = np.zeros((BINS, BINS), dtype=np.float64)

    for f in filters:
        dx = 2.0 * (uu - f.center_x) / f.size_x
        dy = 2.0 * (vv - f.center_y) / f.size_y
        d = np.sqrt(dx * dx + dy * dy)
        a = f.max_opacity * kernel_weight(f.kernel, d)
        one_minus *= 1.0 - a
        alpha_sum += a
        weighted_color += a[:, :, None] * np.asarray(f.color)

    alpha = 1.0 - one_minus
    safe = np.where(alpha_sum > 0.0, alpha_sum, 1.0)
    color = np.where(alpha_sum[:, :, None] > 0.0,
                     weighted_color / safe[:, :, None], 0.0)
    rgba = np.concatenate([color, alpha[:, :, None]], axis=2)
    return TransferLut(rgba=np.clip(rgba, 0.0, 1.0))


def heart_preset(geometries):
    """Color two predicted filter geometries for heart scans: yellow
    gauss on the myocard/contrast materials, red gauss on the
    contrast-agent boundary."""
    (c1, s1), (c2, s2) = geometries
    return [
        FilterSpec(center_x=c1[0], center_y=c1[1], size_x=s1[0], size_y=s1[1],
                   kernel="gauss", color=YELLOW, max_opacity=HEART_MYOCARD_OPACITY),
        FilterSpec(center_x=c2[0], center_y=c2[1], size_x=s2[0], size_y=s2[1],
                   kernel="gauss", color=RED, max_opacity=HEART_BOUNDARY_OPACITY),
    ]


def filter_to_json(f: FilterSpec) -> dict:
    return {"center": [f.center_x, f.center_y], "size": [f.size_x, f.size_y],
            "kernel": f.kernel, "color": list(f.color), "opacity": f.max_opacity}


def filter_from_json(obj: dict) -> FilterSpec:
    if not isinstance(obj, dict):
        raise InvalidFilter("filter", "must be an object")
    for key in ("center", "size", "kernel", "color", "opacity"):
        if key not in obj:
            raise InvalidFilter(key, "missing field")
    try:
        cx, cy = (float(v) for v in obj["center"])
        sx, sy = (float(v) for v in obj["size"])
    except (TypeError, ValueError) as exc:
        raise InvalidFilter("center", f"malformed geometry: {exc}") from exc
    return FilterSpec(center_x=cx, center_y=cy, size_x=sx, size_y=sy,
                      kernel=obj["kernel"], color=tuple(obj["color"]),
                      max_opacity=float(obj["opacity"]))


def filters_to_json(filters) -> list:
    return [filter_to_json(f) for f in filters]


def filters_from_json(items) -> list:
    if not isinstance(items, list):
        raise InvalidFilter("filters", "must be a list")
    out = []
    for i, obj in enumerate(items):
        try:
            out.append(filter_from_json(obj))
        except InvalidFilter as exc:
            raise InvalidFilter(f"filters[{i}].{exc.field}", exc.message) from exc
    return out


def lut_to_image(lut: TransferLut) -> np.ndarray:
    """uint8 RGBA view of the LUT, gradient bin 0 at the bottom."""
    img = np.clip(np.rint(lut.rgba * 255.0), 0, 255).astype(np.uint8)
    return img[::-1, :, :].copy()
