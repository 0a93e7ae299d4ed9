"""Scalar volumes: raw loading, synthetic phantoms, gradient magnitude.

A volume is a 3D grid of scalars normalized to [0,1]. The raw on-disk
form is a header JSON ``{"dims":[nx,ny,nz],"spacing":[sx,sy,sz],
"dtype":"u8"|"u16le"}`` next to a sample file in x-fastest order.
Arrays are stored with shape (nz, ny, nx) so the C memory layout matches
the file layout; index as ``data[z, y, x]``.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadHeader, SizeMismatch

DTYPE_MAX = {"u8": 255, "u16le": 65535}
_NUMPY_DTYPE = {"u8": np.dtype("u1"), "u16le": np.dtype("<u2")}


@dataclass(frozen=True)
class Volume:
    """Immutable 3D scalar grid with values in [0,1].

    dims is (nx, ny, nz); spacing is physical units per voxel along
    (x, y, z); data has shape (nz, ny, nx).
    """

    dims: tuple
    spacing: tuple
    data: np.ndarray
    source_dtype: str = "u8"

    def __post_init__(self):
        nx, ny, nz = self.dims
        if min(nx, ny, nz) < 2:
            raise BadHeader(f"all dims must be >= 2, got {self.dims}")
        if self.source_dtype not in DTYPE_MAX:
            raise BadHeader(f"unknown dtype {self.source_dtype!r}")
        if any(s <= 0 for s in self.spacing):
            raise BadHeader(f"spacing must be positive, got {self.spacing}")
        data = np.ascontiguousarray(self.data, dtype=np.float32)
        if data.shape != (nz, ny, nx):
            if data.size != nx * ny * nz:
                raise SizeMismatch(
                    f"data has {data.size} samples, dims want {nx * ny * nz}")
            data = data.reshape(nz, ny, nx)
        if data.size and (float(data.min()) < 0.0 or float(data.max()) > 1.0):
            raise BadHeader("volume values must lie in [0,1]")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "dims", (int(nx), int(ny), int(nz)))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))

    @property
    def voxel_count(self):
        nx, ny, nz = self.dims
        return nx * ny * nz


@dataclass(frozen=True)
class GradientVolume:
    """Per-voxel gradient magnitude of a Volume, same grid."""

    dims: tuple
    magnitudes: np.ndarray
    max_magnitude: float = 0.0

    def __post_init__(self):
        nx, ny, nz = self.dims
        mags = np.ascontiguousarray(self.magnitudes, dtype=np.float32)
        if mags.shape != (nz, ny, nx):
            mags = mags.reshape(nz, ny, nx)
        mags.flags.writeable = False
        object.__setattr__(self, "magnitudes", mags)
        object.__setattr__(self, "max_magnitude",
                           float(mags.max()) if mags.size else 0.0)


@dataclass(frozen=True)
class PhantomSpec:
    """Synthetic test volume: background plus spheres applied in order.

    Each shell is (center, radius, value) with center in voxel
    coordinates (fractional allowed) and radius in voxels.
    """

    dims: tuple
    background_value: float = 0.0
    shells: tuple = field(default_factory=tuple)
    spacing: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if min(self.dims) < 2:
            raise BadHeader(f"all dims must be >= 2, got {self.dims}")
        if not 0.0 <= self.background_value <= 1.0:
            raise BadHeader("background_value must be in [0,1]")
        shells = []
        for center, radius, value in self.shells:
            if radius <= 0:
                raise BadHeader(f"shell radius must be > 0, got {radius}")
            if not 0.0 <= value <= 1.0:
                raise BadHeader(f"shell value must be in [0,1], got {value}")
            shells.append((tuple(float(c) for c in center),
                           float(radius), float(value)))
        object.__setattr__(self, "shells", tuple(shells))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))


def load_volume(raw: bytes, header: dict) -> Volume:
    """Decode a raw sample stream into a normalized Volume.

    Values are scaled to [0,1] by dividing by the dtype maximum, so all
    downstream binning and LUT math is dtype independent.
    """
    try:
        dims = tuple(int(d) for d in header["dims"])
        dtype = header["dtype"]
        spacing = tuple(float(s) for s in header.get("spacing", (1.0, 1.0, 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise BadHeader(f"malformed header: {exc}") from exc
    if len(dims) != 3 or min(dims) < 2:
        raise BadHeader(f"dims must be three values >= 2, got {dims}")
    if dtype not in _NUMPY_DTYPE:
        raise BadHeader(f"unknown dtype {dtype!r}")
    nx, ny, nz = dims
    expected = nx * ny * nz * _NUMPY_DTYPE[dtype].itemsize
    if len(raw) != expected:
        raise SizeMismatch(f"got {len(raw)} bytes, header wants {expected}")
    samples = np.frombuffer(raw, dtype=_NUMPY_DTYPE[dtype])
    data = samples.astype(np.float32) / DTYPE_MAX[dtype]
    return Volume(dims=dims, spacing=spacing, data=data.reshape(nz, ny, nx),
                  source_dtype=dtype)


def serialize_volume(v: Volume) -> bytes:
    """Inverse of load_volume: re-quantize to the source dtype.

    Round-trips bit-exactly because normalization divided by the dtype
    maximum and rounding recovers the integer sample.
    """
    quantized = np.rint(v.data.astype(np.float64) * DTYPE_MAX[v.source_dtype])
    return quantized.astype(_NUMPY_DTYPE[v.source_dtype]).tobytes()


def volume_header(v: Volume) -> dict:
    return {"dims": list(v.dims), "spacing": list(v.spacing),
            "dtype": v.source_dtype}


def write_volume(prefix, v: Volume):
    """Write the header/raw pair: <prefix>.json and <prefix>.raw."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    prefix.with_suffix(prefix.suffix + ".json").write_text(
        json.dumps(volume_header(v)), encoding="utf-8")
    prefix.with_suffix(prefix.suffix + ".raw").write_bytes(serialize_volume(v))


def read_volume(prefix) -> Volume:
    prefix = Path(prefix)
    header = json.loads(
        prefix.with_suffix(prefix.suffix + ".json").read_text(encoding="utf-8"))
    raw = prefix.with_suffix(prefix.suffix + ".raw").read_bytes()
    return load_volume(raw, header)


def make_phantom(spec: PhantomSpec) -> Volume:
    """Rasterize a PhantomSpec: each voxel takes the value of the last
    shell whose sphere contains its center, else the background."""
    nx, ny, nz = spec.dims
    data = np.full((nz, ny, nx), spec.background_value, dtype=np.float32)
    zz, yy, xx = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx),
                             indexing="ij")
    for (cx, cy, cz), radius, value in spec.shells:
        inside = ((xx - cx) ** 2 + (yy - cy) ** 2 + (zz - cz) ** 2) <= radius ** 2
        data[inside] = value
    return Volume(dims=spec.dims, spacing=spec.spacing, data=data,
                  source_dtype="u8")


def gradient_magnitude(v: Volume) -> GradientVolume:
    """Euclidean norm of the spatial derivative, in physical units.

    Central differences on interior voxels (exact for affine fields),
    one-sided at boundaries; spacing scales each axis so anisotropic
    scans bin consistently.
    """
    sx, sy, sz = v.spacing
    dz, dy, dx = np.gradient(v.data.astype(np.float64), sz, sy, sx,
                             edge_order=1)
    mags = np.sqrt(dx * dx + dy * dy + dz * dz).astype(np.float32)
    return GradientVolume(dims=v.dims, magnitudes=mags)


def phantom_spec_from_json(obj: dict) -> PhantomSpec:
    """Parse the CLI/demo JSON form of a phantom description."""
    try:
        shells = tuple((tuple(s["center"]), s["radius"], s["value"])
                       for s in obj.get("shells", []))
        return PhantomSpec(dims=tuple(obj["dims"]),
                           background_value=obj.get("background", 0.0),
                           shells=shells,
                           spacing=tuple(obj.get("spacing", (1.0, 1.0, 1.0))))
    except (KeyError, TypeError, ValueError) as exc:
        raise BadHeader(f"malformed phantom spec: {exc}") from exc
