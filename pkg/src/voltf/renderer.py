"""Software raycaster: classify samples through the 2D LUT, composite
front to back.

Rays march through the volume's physical bounding box at a fixed step
(in voxel units, scaled by the smallest spacing), fetch value and
gradient magnitude by trilinear interpolation, look up RGBA in the LUT,
apply step-size opacity correction, and accumulate premultiplied color
until nearly opaque. Per-pixel work is pure, so thread count never
changes the image.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCamera, DimsMismatch, OutOfBounds
from .histogram import default_gradient_scale
from .transfer_function import TransferLut
from .volume import GradientVolume, Volume

OPACITY_REFERENCE_STEP = 1.0   # voxel units; alpha' = 1-(1-a)^(step/ref)


@dataclass(frozen=True)
class Camera:
    """View description in physical (spacing-scaled) coordinates.

    fov is the vertical field of view in degrees for perspective
    projection; half_height is the vertical half-extent for
    orthographic projection.
    """

    eye: tuple
    lookat: tuple
    up: tuple = (0.0, 1.0, 0.0)
    fov: float = 45.0
    half_height: float = 1.0
    projection: str = "perspective"
    width: int = 256
    height: int = 256

    def __post_init__(self):
        eye = tuple(float(v) for v in self.eye)
        lookat = tuple(float(v) for v in self.lookat)
        up = tuple(float(v) for v in self.up)
        if eye == lookat:
            raise DegenerateCamera("eye must differ from lookat")
        if not 0.0 < self.fov < 180.0:
            raise DegenerateCamera(f"fov must be in (0,180), got {self.fov}")
        if self.projection not in ("perspective", "orthographic"):
            raise DegenerateCamera(f"unknown projection {self.projection!r}")
        if self.width < 1 or self.height < 1:
            raise DegenerateCamera("image dims must be >= 1")
        if self.projection == "orthographic" and self.half_height <= 0:
            raise DegenerateCamera("orthographic half_height must be > 0")
        forward = np.subtract(lookat, eye)
        if np.linalg.norm(np.cross(forward, up)) < 1e-12:
            raise DegenerateCamera("up vector is parallel to the view direction")
        object.__setattr__(self, "eye", eye)
        object.__setattr__(self, "lookat", lookat)
        object.__setattr__(self, "up", up)


@dataclass(frozen=True)
class RenderSettings:
    step_size: float = 0.5                    # voxel units
    early_termination_alpha: float = 0.99
    shading: str = "none"                     # none | lambert
    background: tuple = (0.0, 0.0, 0.0, 1.0)  # RGBA
    light: tuple = (0.57735, 0.57735, -0.57735)

    def __post_init__(self):
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if not 0.0 < self.early_termination_alpha <= 1.0:
            raise ValueError("early_termination_alpha must be in (0,1]")
        if self.shading not in ("none", "lambert"):
            raise ValueError(f"unknown shading {self.shading!r}")


def camera_from_json(obj: dict) -> Camera:
    return Camera(eye=tuple(obj["eye"]), lookat=tuple(obj["lookat"]),
                  up=tuple(obj.get("up", (0.0, 1.0, 0.0))),
                  fov=float(obj.get("fov", 45.0)),
                  half_height=float(obj.get("half_height", 1.0)),
                  projection=obj.get("projection", "perspective"),
                  width=int(obj.get("width", 256)),
                  height=int(obj.get("height", 256)))


def settings_from_json(obj: dict) -> RenderSettings:
    return RenderSettings(
        step_size=float(obj.get("step", 0.5)),
        early_termination_alpha=float(obj.get("early_termination", 0.99)),
        shading=obj.get("shading", "none"),
        background=tuple(obj.get("background", (0.0, 0.0, 0.0, 1.0))),
        light=tuple(obj.get("light", (0.57735, 0.57735, -0.57735))))


def _sample_grid(arr: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Trilinear interpolation of arr (shape nz,ny,nx) at pts (N,3) in
    (x,y,z) voxel coordinates. Points must already be inside the grid."""
    nz, ny, nx = arr.shape
    x = np.clip(pts[:, 0], 0.0, nx - 1.0)
    y = np.clip(pts[:, 1], 0.0, ny - 1.0)
    z = np.clip(pts[:, 2], 0.0, nz - 1.0)
    i0 = np.minimum(x.astype(np.int64), nx - 2)
    j0 = np.minimum(y.astype(np.int64), ny - 2)
    k0 = np.minimum(z.astype(np.int64), nz - 2)
    fx = x - i0
    fy = y - j0
    fz = z - k0

    c000 = arr[k0, j0, i0]
    c100 = arr[k0, j0, i0 + 1]
    c010 = arr[k0, j0 + 1, i0]
    c110 = arr[k0, j0 + 1, i0 + 1]
    c001 = arr[k0 + 1, j0, i0]
    c101 = arr[k0 + 1, j0, i0 + 1]
    c011 = arr[k0 + 1, j0 + 1, i0]
    c111 = arr[k0 + 1, j0 + 1, i0 + 1]

    c00 = c000 * (1 - fx) + c100 * fx
    c10 = c010 * (1 - fx) + c110 * fx
    c01 = c001 * (1 - fx) + c101 * fx
    c11 = c011 * (1 - fx) + c111 * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    return c0 * (1 - fz) + c1 * fz


def trilinear_sample(v: Volume, p) -> float:
    """Interpolated scalar at a continuous voxel-space position."""
    p = np.asarray(p, dtype=np.float64)
    nx, ny, nz = v.dims
    if not (0.0 <= p[0] <= nx - 1 and 0.0 <= p[1] <= ny - 1
            and 0.0 <= p[2] <= nz - 1):
        raise OutOfBounds(f"{tuple(p)} outside [0,{nx - 1}]x[0,{ny - 1}]x[0,{nz - 1}]")
    return float(_sample_grid(v.data.astype(np.float64), p[None, :])[0])


def _camera_rays(cam: Camera, row0: int, row1: int):
    """Origins and unit directions for pixel rows [row0, row1)."""
    eye = np.asarray(cam.eye, dtype=np.float64)
    fwd = np.asarray(cam.lookat, dtype=np.float64) - eye
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, np.asarray(cam.up, dtype=np.float64))
    right /= np.linalg.norm(right)
    up = np.cross(right, fwd)

    aspect = cam.width / cam.height
    px = (np.arange(cam.width) + 0.5) / cam.width * 2.0 - 1.0
    py = 1.0 - (np.arange(row0, row1) + 0.5) / cam.height * 2.0
    ndc_x, ndc_y = np.meshgrid(px, py)
    ndc_x = ndc_x.ravel()
    ndc_y = ndc_y.ravel()

    if cam.projection == "perspective":
        half = math.tan(math.radians(cam.fov) / 2.0)
        dirs = (fwd[None, :]
                + ndc_x[:, None] * (half * aspect) * right[None, :]
                + ndc_y[:, None] * half * up[None, :])
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        origins = np.broadcast_to(eye, dirs.shape).copy()
    else:
        origins = (eye[None, :]
                   + ndc_x[:, None] * (cam.half_height * aspect) * right[None, :]
                   + ndc_y[:, None] * cam.half_height * up[None, :])
        dirs = np.broadcast_to(fwd, origins.shape).copy()
    return origins, dirs


def _slab_intersect(origins, dirs, hi):
    """Entry/exit distances against the box [0, hi]. Misses get t0 > t1."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
        ta = (0.0 - origins) * inv
        tb = (hi[None, :] - origins) * inv
    # Axis-parallel rays: +-inf from the division is fine unless the
    # origin sits exactly on a slab plane (0 * inf = nan).
    ta = np.nan_to_num(ta, nan=-np.inf)
    tb = np.nan_to_num(tb, nan=np.inf)
    t0 = np.maximum.reduce(np.minimum(ta, tb), axis=1)
    t1 = np.minimum.reduce(np.maximum(ta, tb), axis=1)
    return t0, t1


def _march_rows(v, g, lut, cam, settings, gradient_scale, row0, row1):
    """Composite every pixel of rows [row0, row1); returns (rows, W, 4)
    premultiplied-color + alpha, before background blending."""
    data = v.data.astype(np.float64)
    mags = g.magnitudes.astype(np.float64)
    spacing = np.asarray(v.spacing, dtype=np.float64)
    hi = (np.asarray(v.dims, dtype=np.float64) - 1.0) * spacing

    origins, dirs = _camera_rays(cam, row0, row1)
    n = origins.shape[0]
    t0, t1 = _slab_intersect(origins, dirs, hi)
    t0 = np.maximum(t0, 0.0)

    dt = settings.step_size * float(spacing.min())
    t = t0 + dt / 2.0
    color = np.zeros((n, 3), dtype=np.float64)
    alpha = np.zeros(n, dtype=np.float64)
    active = (t1 > t0) & (t < t1)

    lut_rgb = lut.rgba[:, :, :3]
    lut_a = lut.rgba[:, :, 3]
    light = np.asarray(settings.light, dtype=np.float64)
    light = light / np.linalg.norm(light)

    while active.any():
        idx = np.nonzero(active)[0]
        pos = origins[idx] + t[idx, None] * dirs[idx]
        pts = pos / spacing[None, :]

        value = _sample_grid(data, pts)
        mag = _sample_grid(mags, pts)
        xi = np.clip(np.floor(value * 255.0 + 0.5), 0, 255).astype(np.int64)
        if gradient_scale > 0.0:
            norm = np.minimum(mag, gradient_scale) / gradient_scale
            yi = np.clip(np.floor(norm * 255.0 + 0.5), 0, 255).astype(np.int64)
        else:
            yi = np.zeros_like(xi)

        a = lut_a[yi, xi]
        rgb = lut_rgb[yi, xi]
        a_corr = 1.0 - (1.0 - a) ** (settings.step_size / OPACITY_REFERENCE_STEP)

        if settings.shading == "lambert":
            grad = np.empty_like(pts)
            for axis in range(3):
                offset = np.zeros(3)
                offset[axis] = 0.5
                hi_pts = np.clip(pts + offset, 0.0, None)
                lo_pts = np.clip(pts - offset, 0.0, None)
                grad[:, axis] = ((_sample_grid(data, hi_pts)
                                  - _sample_grid(data, lo_pts))
                                 / (1.0 * spacing[axis]))
            norms = np.linalg.norm(grad, axis=1)
            lambert = np.where(norms > 1e-12,
                               np.maximum(grad @ light, 0.0) / np.where(norms > 1e-12, norms, 1.0),
                               1.0)
            rgb = rgb * lambert[:, None]

        w = (1.0 - alpha[idx]) * a_corr
        color[idx] += w[:, None] * rgb
        alpha[idx] += w

        t[idx] += dt
        active[idx] = (t[idx] < t1[idx]) & (alpha[idx] < settings.early_termination_alpha)

    rows = row1 - row0
    out = np.concatenate([color, alpha[:, None]], axis=1)
    return out.reshape(rows, cam.width, 4)


def render(v: Volume, g: GradientVolume, lut: TransferLut, cam: Camera,
           settings: RenderSettings | None = None,
           gradient_scale: float | None = None, threads: int = 1) -> np.ndarray:
    """Raycast the classified volume. Returns (height, width, 4) floats
    in [0,1], straight (non-premultiplied) RGBA over the background.

    gradient_scale maps magnitudes onto the LUT's y axis and must match
    the histogram the LUT was designed on; defaults to the same
    99.5th-percentile rule the histogram uses.
    """
    if v.dims != g.dims:
        raise DimsMismatch(f"volume dims {v.dims} != gradient dims {g.dims}")
    settings = settings or RenderSettings()
    if gradient_scale is None:
        gradient_scale = default_gradient_scale(g)

    premul = np.empty((cam.height, cam.width, 4), dtype=np.float64)
    if threads <= 1 or cam.height == 1:
        premul[:] = _march_rows(v, g, lut, cam, settings, gradient_scale,
                                0, cam.height)
    else:
        bounds = np.linspace(0, cam.height, min(threads, cam.height) + 1,
                             dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                (r0, r1, pool.submit(_march_rows, v, g, lut, cam, settings,
                                     gradient_scale, int(r0), int(r1)))
                for r0, r1 in zip(bounds[:-1], bounds[1:]) if r1 > r0]
            for r0, r1, fut in futures:
                premul[r0:r1] = fut.result()

    bg = np.asarray(settings.background, dtype=np.float64)
    alpha = premul[:, :, 3]
    out_a = alpha + (1.0 - alpha) * bg[3]
    out_rgb = premul[:, :, :3] + ((1.0 - alpha) * bg[3])[:, :, None] * bg[:3]
    safe = np.where(out_a > 0.0, out_a, 1.0)
    straight = np.where(out_a[:, :, None] > 0.0, out_rgb / safe[:, :, None], 0.0)
    image = np.concatenate([straight, out_a[:, :, None]], axis=2)
    return np.clip(image, 0.0, 1.0)


def image_to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
