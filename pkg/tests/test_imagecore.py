import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simshot import (
    FormatError,
    Image2D,
    InvalidInputError,
    NumericConsistencyError,
    Spectrum2D,
    apodize_edges,
    export_pgm16,
    fft2,
    ifft2,
    read_img1,
    upsample_fourier,
    write_img1,
)
from simshot.imagecore import frequency_grid


def test_image_invariants():
    with pytest.raises(InvalidInputError):
        Image2D(np.zeros((0, 4)), 219.5)
    with pytest.raises(InvalidInputError):
        Image2D(np.full((4, 4), np.nan), 219.5)
    with pytest.raises(InvalidInputError):
        Image2D(np.zeros((4, 4)), 0.0)


def test_fft_constant_dc():
    c = 2.5
    spec = fft2(Image2D(np.full((8, 8), c), 100.0))
    center = spec.data[4, 4]
    assert center == pytest.approx(8 * c)
    rest = spec.data.copy()
    rest[4, 4] = 0
    assert np.abs(rest).max() < 1e-12


def test_fft_delta_flat_magnitude():
    img = np.zeros((4, 4))
    img[0, 0] = 1.0
    spec = fft2(Image2D(img, 100.0))
    assert np.allclose(np.abs(spec.data), 0.25, atol=1e-14)


@given(st.integers(2, 40), st.integers(2, 40), st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_fft_roundtrip_and_parseval(h, w, seed):
    rng = np.random.default_rng(seed)
    img = Image2D(rng.normal(size=(h, w)), 219.5)
    spec = fft2(img)
    back = ifft2(spec)
    assert np.linalg.norm(back.data - img.data) < 1e-12 * max(np.linalg.norm(img.data), 1e-30)
    energy_img = np.sum(img.data**2)
    energy_spec = np.sum(np.abs(spec.data) ** 2)
    assert energy_spec == pytest.approx(energy_img, rel=1e-9)


def test_parseval_large():
    rng = np.random.default_rng(0)
    img = Image2D(rng.normal(size=(512, 512)), 219.5)
    spec = fft2(img)
    assert np.sum(np.abs(spec.data) ** 2) == pytest.approx(np.sum(img.data**2), rel=1e-9)


def test_ifft_center_bin_gives_constant():
    c = 0.7
    spec = np.zeros((8, 8), dtype=complex)
    spec[4, 4] = 8 * c
    img = ifft2(Spectrum2D(spec, 100.0))
    assert np.allclose(img.data, c, atol=1e-14)


def test_ifft_rejects_asymmetric_spectrum():
    rng = np.random.default_rng(1)
    spec = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    with pytest.raises(NumericConsistencyError):
        ifft2(Spectrum2D(spec, 100.0))


def test_apodize_identity_and_edges():
    rng = np.random.default_rng(2)
    img = Image2D(rng.normal(size=(33, 47)), 219.5)
    same = apodize_edges(img, 0.0)
    assert np.array_equal(same.data, img.data)
    tapered = apodize_edges(img, 0.1)
    assert tapered.data[16, 23] == img.data[16, 23]  # center untouched
    assert tapered.data[0, 0] == 0.0
    assert tapered.data[-1, -1] == 0.0


@given(st.integers(3, 30), st.integers(3, 30), st.floats(0.01, 0.5), st.integers(0, 10**6))
@settings(max_examples=25, deadline=None)
def test_apodize_never_increases_magnitude(h, w, bf, seed):
    rng = np.random.default_rng(seed)
    img = Image2D(rng.normal(size=(h, w)), 50.0)
    out = apodize_edges(img, bf)
    assert np.all(np.abs(out.data) <= np.abs(img.data) + 1e-15)


def test_apodize_rejects_bad_fraction():
    img = Image2D(np.ones((4, 4)), 100.0)
    for bf in (-0.1, 0.6):
        with pytest.raises(InvalidInputError):
            apodize_edges(img, bf)


def test_upsample_identity_and_mean():
    rng = np.random.default_rng(3)
    img = Image2D(rng.random((24, 20)), 219.5)
    assert np.array_equal(upsample_fourier(img, 1).data, img.data)
    up = upsample_fourier(img, 2)
    assert up.pixel_size_nm == pytest.approx(219.5 / 2)
    assert up.data.mean() == pytest.approx(img.data.mean(), rel=1e-9)
    up3 = upsample_fourier(img, 3)
    assert up3.data.mean() == pytest.approx(img.data.mean(), rel=1e-9)


def test_upsample_band_limited_resample():
    # image whose spectrum occupies less than half of Nyquist
    rng = np.random.default_rng(4)
    n = 32
    fy, fx = frequency_grid(n, n, 1.0)
    keep = np.hypot(fy, fx) < 0.2
    # band-limit a random image by zeroing the high bins of its own spectrum
    raw = Image2D(rng.normal(size=(n, n)), 219.5)
    s = fft2(raw).data
    s[~keep] = 0.0
    img = ifft2(Spectrum2D(s, 219.5))
    up = upsample_fourier(img, 2)
    resampled = up.data[0::2, 0::2]
    assert np.allclose(resampled, img.data, atol=1e-6 * np.abs(img.data).max())


def test_upsample_rejects_bad_factor():
    img = Image2D(np.ones((4, 4)), 100.0)
    with pytest.raises(InvalidInputError):
        upsample_fourier(img, 0)


def test_img1_f32_roundtrip_bit_exact(tmp_path):
    rng = np.random.default_rng(5)
    data = rng.normal(size=(13, 9)).astype(np.float32).astype(np.float64)
    img = Image2D(data, 219.5)
    path = tmp_path / "a.img1"
    write_img1(img, path)
    back = read_img1(path)
    assert np.array_equal(back.data, img.data)
    assert back.pixel_size_nm == img.pixel_size_nm
    # writing the re-read image reproduces the file byte for byte
    path2 = tmp_path / "b.img1"
    write_img1(back, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_img1_file_length(tmp_path):
    img = Image2D(np.array([[1.0, 2.0]]), 219.5)
    path = tmp_path / "two.img1"
    write_img1(img, path)
    assert path.stat().st_size == 24 + 8


def test_img1_bad_magic(tmp_path):
    img = Image2D(np.ones((2, 2)), 100.0)
    path = tmp_path / "x.img1"
    write_img1(img, path)
    raw = bytearray(path.read_bytes())
    raw[0:4] = b"XIMG"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError) as err:
        read_img1(path)
    assert err.value.offset == 0


def test_img1_bad_version_dtype_pad(tmp_path):
    img = Image2D(np.ones((2, 2)), 100.0)
    path = tmp_path / "x.img1"
    for offset, value, expected_offset in ((4, 9, 4), (6, 7, 6), (7, 1, 7)):
        write_img1(img, path)
        raw = bytearray(path.read_bytes())
        raw[offset] = value
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError) as err:
            read_img1(path)
        assert err.value.offset == expected_offset


def test_img1_truncated_payload(tmp_path):
    img = Image2D(np.ones((4, 4)), 100.0)
    path = tmp_path / "x.img1"
    write_img1(img, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(FormatError):
        read_img1(path)


def test_img1_u16_export(tmp_path):
    img = Image2D(np.array([[0.0, 1.0], [2.0, 3.0]]), 100.0)
    path = tmp_path / "u.img1"
    write_img1(img, path, dtype="u16")
    back = read_img1(path)
    assert np.allclose(back.data, [[0, 21845 / 65535], [43690 / 65535, 1.0]])
    write_img1(Image2D(np.full((3, 3), 5.0), 100.0), path, dtype="u16")
    assert np.allclose(read_img1(path).data, 32768 / 65535)


def test_pgm16_export(tmp_path):
    img = Image2D(np.array([[0.0, 1.0], [2.0, 3.0]]), 100.0)
    path = tmp_path / "x.pgm"
    export_pgm16(img, path)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n2 2\n65535\n")
    samples = np.frombuffer(raw[len(b"P5\n2 2\n65535\n"):], dtype=">u2")
    assert samples.tolist() == [0, 21845, 43690, 65535]
    export_pgm16(Image2D(np.full((2, 2), 7.0), 100.0), path)
    samples = np.frombuffer(path.read_bytes()[len(b"P5\n2 2\n65535\n"):], dtype=">u2")
    assert samples.tolist() == [32768] * 4
