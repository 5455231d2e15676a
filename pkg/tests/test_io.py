import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from conftest import random_odd_field
from sqgwave.grid import GridSpec
from sqgwave.io import (BadMagic, DimensionOverflow, TruncatedPayload, UnsupportedVersion, export_csv,
                        export_field, heatmap_bytes, import_csv, import_field, read_pgm, render_heatmap)
from sqgwave.solver import SeedSpec, solve

GRID = GridSpec(6, 4, 1.5, 2.0)


@pytest.fixture
def field(rng):
    return rng.standard_normal(GRID.shape) * 10.0 ** rng.integers(-300, 300, GRID.shape)


@pytest.mark.parametrize("time", [None, 0.625])
def test_field_roundtrip_bitwise(tmp_path, field, time):
    path = tmp_path / "f.sqgf"
    export_field(field, GRID, path, time=time)
    ff = import_field(path)
    assert ff.grid == GRID
    assert ff.values.tobytes() == field.tobytes()
    assert ff.time == time
    expected = 4 + 4 * 3 + 8 * 2 + field.size * 8 + (0 if time is None else 8)
    assert path.stat().st_size == expected


def test_header_layout(tmp_path, field):
    path = tmp_path / "f.sqgf"
    export_field(field, GRID, path)
    data = path.read_bytes()
    assert data[:4] == b"SQGF"
    assert struct.unpack_from("<IIIdd", data, 4) == (1, 6, 4, 1.5, 2.0)
    assert np.frombuffer(data, "<f8", offset=32)[5] == field[1, 1]


def _corrupt(tmp_path, field, mutate):
    path = tmp_path / "f.sqgf"
    export_field(field, GRID, path)
    data = bytearray(path.read_bytes())
    path.write_bytes(bytes(mutate(data)))
    return path


@pytest.mark.parametrize("mutate, err", [
    (lambda d: b"SQGX" + d[4:], BadMagic),
    (lambda d: d[:4] + struct.pack("<I", 2) + d[8:], UnsupportedVersion),
    (lambda d: d[:8] + struct.pack("<II", 1 << 16, 1 << 16) + d[16:], DimensionOverflow),
    (lambda d: d[:8] + struct.pack("<II", 0, 4) + d[16:], DimensionOverflow),
    (lambda d: d[:8] + struct.pack("<II", 7, 4) + d[16:], TruncatedPayload),
    (lambda d: d[:-3], TruncatedPayload),
    (lambda d: d[:20], TruncatedPayload),
])
def test_corrupted_files(tmp_path, field, mutate, err):
    with pytest.raises(err) as exc:
        import_field(_corrupt(tmp_path, field, mutate))
    assert exc.value.code == err.__name__


def test_error_codes_distinct():
    codes = {e.code for e in (BadMagic, UnsupportedVersion, DimensionOverflow, TruncatedPayload)}
    assert len(codes) == 4


def test_shape_mismatch_rejected(tmp_path):
    with pytest.raises(ValueError):
        export_field(np.zeros((4, 6)), GRID, tmp_path / "f.sqgf")


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 5), elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_csv_roundtrip_exact(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "f.csv"
    export_csv(values, path)
    np.testing.assert_array_equal(import_csv(path), values)


def test_heatmap_zero_field():
    img = heatmap_bytes(np.zeros((8, 6)))
    assert img.shape == (6, 8)
    assert np.all(img == 128)


def test_heatmap_orientation():
    v = np.zeros((4, 3))
    v[3, 2] = 1.0  # largest r, largest z
    img = heatmap_bytes(v)
    assert img[0, 3] == 255


def test_heatmap_antisymmetry(ws32, rng):
    v = random_odd_field(ws32, rng)
    # The complement identity needs 128 v / max|v| off the integers except at the extremes.
    scaled = 128 * v / np.max(np.abs(v))
    interior = np.abs(scaled) < 128
    assert np.all(scaled[interior] != np.round(scaled[interior]))
    img = heatmap_bytes(v).astype(int)
    np.testing.assert_array_equal(img + img[:, ::-1], 255)


def test_pgm_file(tmp_path, ws32, rng):
    v = random_odd_field(ws32, rng)
    a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
    render_heatmap(v, a)
    render_heatmap(v.copy(), b)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes().startswith(b"P5\n32 32\n255\n")
    np.testing.assert_array_equal(read_pgm(a), heatmap_bytes(v))


def test_converged_theta_two_mirrored_extrema(ws64, bump, wave):
    rep, _ = solve(ws64, bump, wave, seed=SeedSpec(r0=0.5, sigma=0.3, ladder=1))
    assert rep.converged
    img = heatmap_bytes(rep.theta)
    hi, n_hi = ndimage.label(img == img.max())
    lo, n_lo = ndimage.label(img == img.min())
    assert n_hi == 1 and n_lo == 1
    assert img.max() == 255 and img.min() == 0
    np.testing.assert_array_equal(hi > 0, (lo > 0)[:, ::-1])
