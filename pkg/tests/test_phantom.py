import numpy as np
import pytest
from scipy import ndimage

from simshot import GeometryError, InvalidInputError, PhantomSpec, generate_phantom
from simshot.errors import SamplingError


def test_determinism_bit_identical():
    spec = PhantomSpec(rows=6, cols=6, occupancy=0.7, jitter_nm=30.0, seed=42)
    a = generate_phantom(spec, 256, 256, 50.0)
    b = generate_phantom(spec, 256, 256, 50.0)
    assert np.array_equal(a.data, b.data)


def test_different_seeds_differ():
    a = generate_phantom(PhantomSpec(rows=6, cols=6, occupancy=0.7, seed=1), 256, 256, 50.0)
    b = generate_phantom(PhantomSpec(rows=6, cols=6, occupancy=0.7, seed=2), 256, 256, 50.0)
    assert not np.array_equal(a.data, b.data)


def test_full_occupancy_component_count():
    spec = PhantomSpec(
        rows=8, cols=8, occupancy=1.0, intensity_min=1.0, intensity_max=1.0, seed=0
    )
    img = generate_phantom(spec, 256, 256, 50.0)
    labels, count = ndimage.label(img.data > 0.5 * img.data.max())
    assert count == 64


def test_background_exactly_zero_and_nonnegative():
    img = generate_phantom(PhantomSpec(rows=4, cols=4, seed=7), 256, 256, 50.0)
    assert img.data.min() == 0.0
    assert img.data[0, 0] == 0.0
    assert np.all(img.data >= 0.0)


def test_autocorrelation_pitch():
    g = 54.875
    spec = PhantomSpec(rows=16, cols=16, occupancy=1.0, intensity_min=1.0,
                       intensity_max=1.0, seed=0)
    n = 192
    img = generate_phantom(spec, n, n, g)
    f = np.fft.fft2(img.data)
    acorr = np.fft.fftshift(np.fft.ifft2(np.abs(f) ** 2).real)
    row = acorr[n // 2, :]
    # first off-center peak along the lattice axis
    center = n // 2
    segment = row[center + 4 : center + 16]
    peak_offset = 4 + int(np.argmax(segment))
    assert abs(peak_offset * g - 480.0) <= g / 2


def test_occupancy_within_binomial_bounds():
    rows = cols = 24
    occupancy = 0.7
    n = rows * cols
    sigma = np.sqrt(n * occupancy * (1 - occupancy))
    for seed in range(5):
        spec = PhantomSpec(
            rows=rows, cols=cols, occupancy=occupancy,
            intensity_min=1.0, intensity_max=1.0, seed=seed,
        )
        img = generate_phantom(spec, 768, 768, 55.0)
        _, count = ndimage.label(img.data > 0.5 * img.data.max())
        assert abs(count - n * occupancy) <= 4 * sigma


def test_grid_too_coarse():
    with pytest.raises(SamplingError):
        generate_phantom(PhantomSpec(rows=2, cols=2, seed=0), 64, 64, 60.0)


def test_lattice_exceeding_field():
    with pytest.raises(GeometryError):
        generate_phantom(PhantomSpec(rows=40, cols=40, seed=0), 64, 64, 50.0)


def test_spec_invariants():
    with pytest.raises(InvalidInputError):
        PhantomSpec(dnb_diameter_nm=480.0, pitch_nm=480.0)
    with pytest.raises(InvalidInputError):
        PhantomSpec(occupancy=0.0)
    with pytest.raises(InvalidInputError):
        PhantomSpec(intensity_min=0.9, intensity_max=0.5)
