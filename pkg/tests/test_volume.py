"""Volume loading, phantoms, and gradient magnitude.

The gradient tests check against an independently coded stencil that
loops voxel by voxel, never reusing the library's vectorized path.
"""

import math
import struct

import numpy as np
import pytest

from voltf import (BadHeader, PhantomSpec, SizeMismatch, Volume,
                   gradient_magnitude, load_volume, make_phantom,
                   read_volume, serialize_volume, volume_header, write_volume)


def header(dims, dtype="u8", spacing=(1.0, 1.0, 1.0)):
    return {"dims": list(dims), "spacing": list(spacing), "dtype": dtype}


class TestLoadVolume:
    def test_zero_stream(self):
        v = load_volume(bytes(8), header((2, 2, 2)))
        assert v.data.shape == (2, 2, 2)
        assert np.all(v.data == 0.0)

    def test_byte_count_mismatch(self):
        with pytest.raises(SizeMismatch):
            load_volume(bytes(9), header((2, 2, 2)))

    def test_dims_below_two(self):
        with pytest.raises(BadHeader):
            load_volume(bytes(4), header((2, 2, 1)))

    def test_unknown_dtype(self):
        with pytest.raises(BadHeader):
            load_volume(bytes(8), header((2, 2, 2), dtype="f32"))

    def test_u16le_decode_against_struct(self):
        # Independent decoder: struct.unpack on the same byte stream.
        n = 64
        rng = np.random.default_rng(5)
        values = rng.integers(0, 65536, n ** 3, dtype=np.uint16)
        values[0] = 0x0080
        raw = values.astype("<u2").tobytes()
        v = load_volume(raw, header((n, n, n), dtype="u16le"))
        assert v.data.ravel()[0] == pytest.approx(128 / 65535, abs=1e-9)
        decoded = struct.unpack(f"<{n ** 3}H", raw)
        flat = v.data.ravel()
        for idx in rng.integers(0, n ** 3, 50):
            assert flat[idx] == pytest.approx(decoded[idx] / 65535, abs=1e-7)

    def test_normalized_range(self):
        raw = bytes([0, 255, 128, 7, 200, 90, 13, 255])
        v = load_volume(raw, header((2, 2, 2)))
        assert v.data.min() >= 0.0 and v.data.max() <= 1.0
        assert v.data.ravel()[1] == pytest.approx(1.0)

    @pytest.mark.parametrize("dtype", ["u8", "u16le"])
    def test_serialize_round_trip_bit_exact(self, dtype):
        rng = np.random.default_rng(11)
        width = 1 if dtype == "u8" else 2
        raw = rng.bytes(4 * 3 * 2 * width)
        v = load_volume(raw, header((4, 3, 2), dtype=dtype))
        assert serialize_volume(v) == raw

    def test_file_round_trip(self, tmp_path):
        rng = np.random.default_rng(3)
        raw = rng.bytes(3 * 4 * 5)
        v = load_volume(raw, header((3, 4, 5), spacing=(0.5, 1.0, 2.0)))
        write_volume(tmp_path / "vol", v)
        back = read_volume(tmp_path / "vol")
        assert back.dims == v.dims
        assert back.spacing == v.spacing
        assert np.array_equal(back.data, v.data)
        assert volume_header(back) == volume_header(v)


class TestMakePhantom:
    def test_no_shells_uniform_background(self):
        v = make_phantom(PhantomSpec(dims=(4, 4, 4), background_value=0.3))
        assert np.allclose(v.data, 0.3)

    def test_center_shell(self):
        spec = PhantomSpec(dims=(5, 5, 5), background_value=0.0,
                           shells=(((2, 2, 2), 1.0, 0.9),))
        v = make_phantom(spec)
        assert v.data[2, 2, 2] == pytest.approx(0.9)
        assert v.data[0, 0, 0] == pytest.approx(0.0)

    def test_concentric_shells_against_bruteforce(self):
        dims = (9, 9, 9)
        center = (4.0, 4.0, 4.0)
        spec = PhantomSpec(dims=dims, background_value=0.1,
                           shells=((center, 3.5, 0.5), (center, 1.5, 0.9)))
        v = make_phantom(spec)
        for z in range(dims[2]):
            for y in range(dims[1]):
                for x in range(dims[0]):
                    dist = math.dist((x, y, z), center)
                    if dist <= 1.5:
                        expected = 0.9
                    elif dist <= 3.5:
                        expected = 0.5
                    else:
                        expected = 0.1
                    assert v.data[z, y, x] == pytest.approx(expected)

    def test_invalid_dims(self):
        with pytest.raises(BadHeader):
            PhantomSpec(dims=(1, 4, 4))

    def test_invalid_shell(self):
        with pytest.raises(BadHeader):
            PhantomSpec(dims=(4, 4, 4), shells=(((1, 1, 1), -2.0, 0.5),))
        with pytest.raises(BadHeader):
            PhantomSpec(dims=(4, 4, 4), shells=(((1, 1, 1), 2.0, 1.5),))


def reference_gradient(data, spacing):
    """Independent stencil: explicit loops, central differences inside,
    one-sided at the boundary."""
    nz, ny, nx = data.shape
    sx, sy, sz = spacing
    out = np.zeros_like(data, dtype=np.float64)
    f = data.astype(np.float64)
    for z in range(nz):
        for y in range(ny):
            for x in range(nx):
                if x == 0:
                    gx = (f[z, y, 1] - f[z, y, 0]) / sx
                elif x == nx - 1:
                    gx = (f[z, y, nx - 1] - f[z, y, nx - 2]) / sx
                else:
                    gx = (f[z, y, x + 1] - f[z, y, x - 1]) / (2 * sx)
                if y == 0:
                    gy = (f[z, 1, x] - f[z, 0, x]) / sy
                elif y == ny - 1:
                    gy = (f[z, ny - 1, x] - f[z, ny - 2, x]) / sy
                else:
                    gy = (f[z, y + 1, x] - f[z, y - 1, x]) / (2 * sy)
                if z == 0:
                    gz = (f[1, y, x] - f[0, y, x]) / sz
                elif z == nz - 1:
                    gz = (f[nz - 1, y, x] - f[nz - 2, y, x]) / sz
                else:
                    gz = (f[z + 1, y, x] - f[z - 1, y, x]) / (2 * sz)
                out[z, y, x] = math.sqrt(gx * gx + gy * gy + gz * gz)
    return out


class TestGradientMagnitude:
    def test_constant_volume_zero(self):
        v = Volume(dims=(4, 4, 4), spacing=(1, 1, 1),
                   data=np.full((4, 4, 4), 0.42))
        g = gradient_magnitude(v)
        assert np.all(g.magnitudes == 0.0)
        assert g.max_magnitude == 0.0

    def test_ramp_interior_exact(self):
        nx = 8
        ramp = np.broadcast_to(np.arange(nx) / (nx - 1), (4, 4, nx)).copy()
        v = Volume(dims=(nx, 4, 4), spacing=(1, 1, 1), data=ramp)
        g = gradient_magnitude(v)
        assert np.allclose(g.magnitudes, 1.0 / (nx - 1), atol=1e-6)

    def test_random_volume_matches_stencil_oracle(self):
        rng = np.random.default_rng(7)
        data = rng.random((4, 4, 4))
        spacing = (0.7, 1.0, 1.3)
        v = Volume(dims=(4, 4, 4), spacing=spacing, data=data)
        g = gradient_magnitude(v)
        expected = reference_gradient(v.data, spacing)
        assert np.allclose(g.magnitudes, expected, atol=1e-6)

    def test_shift_invariance(self):
        rng = np.random.default_rng(13)
        data = rng.random((5, 5, 5)) * 0.5
        v1 = Volume(dims=(5, 5, 5), spacing=(1, 1, 1), data=data)
        v2 = Volume(dims=(5, 5, 5), spacing=(1, 1, 1), data=data + 0.25)
        g1 = gradient_magnitude(v1)
        g2 = gradient_magnitude(v2)
        assert np.allclose(g1.magnitudes, g2.magnitudes, atol=1e-6)

    def test_affine_field_exact_on_interior(self):
        nx, ny, nz = 6, 5, 4
        x = np.arange(nx)[None, None, :]
        y = np.arange(ny)[None, :, None]
        z = np.arange(nz)[:, None, None]
        field = (0.02 * x + 0.03 * y + 0.01 * z) / 1.0
        v = Volume(dims=(nx, ny, nz), spacing=(1, 1, 1),
                   data=np.broadcast_to(field, (nz, ny, nx)).copy())
        g = gradient_magnitude(v)
        expected = math.sqrt(0.02 ** 2 + 0.03 ** 2 + 0.01 ** 2)
        interior = g.magnitudes[1:-1, 1:-1, 1:-1]
        assert np.allclose(interior, expected, atol=1e-6)

    def test_spacing_scales_gradient(self):
        rng = np.random.default_rng(19)
        data = rng.random((4, 4, 4))
        g1 = gradient_magnitude(Volume(dims=(4, 4, 4), spacing=(1, 1, 1), data=data))
        g2 = gradient_magnitude(Volume(dims=(4, 4, 4), spacing=(2, 2, 2), data=data))
        assert np.allclose(g2.magnitudes, g1.magnitudes / 2.0, atol=1e-6)
