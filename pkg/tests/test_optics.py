import numpy as np
import pytest

from simshot import InvalidInputError, OpticalConfig, abbe_cutoff, psf, rayleigh_resolution
from simshot.errors import SamplingError
from simshot.metrology import fwhm
from simshot.optics import otf, otf_radial


def test_abbe_cutoff_defaults():
    assert abbe_cutoff(OpticalConfig()) == pytest.approx(2 * 0.8 / 550, rel=1e-12)
    assert abbe_cutoff(OpticalConfig()) == pytest.approx(2.909e-3, abs=1e-6)


def test_abbe_cutoff_halves_with_wavelength():
    a = abbe_cutoff(OpticalConfig(wavelength_nm=550))
    b = abbe_cutoff(OpticalConfig(wavelength_nm=1100))
    assert b == pytest.approx(a / 2)


def test_config_rejects_zero_na():
    with pytest.raises(InvalidInputError):
        OpticalConfig(na=0.0)


def test_rayleigh_matches_paper():
    r = rayleigh_resolution(OpticalConfig())
    assert r == pytest.approx(419.375)
    assert abs(r - 419.4) < 0.05
    assert round(r / 10) * 10 == 420  # the paper's rounded figure


def test_rayleigh_cancellation_and_linearity():
    assert rayleigh_resolution(OpticalConfig(na=0.61)) == pytest.approx(550.0)
    assert rayleigh_resolution(OpticalConfig(wavelength_nm=1100)) == pytest.approx(838.75)


def test_otf_radial_values():
    cfg = OpticalConfig()
    kc = abbe_cutoff(cfg)
    assert otf_radial(cfg, 0.0) == pytest.approx(1.0)
    assert otf_radial(cfg, kc) == pytest.approx(0.0, abs=1e-12)
    assert otf_radial(cfg, 1.5 * kc) == 0.0
    assert otf_radial(cfg, 0.5 * kc) == pytest.approx(0.3910, abs=5e-4)


def test_otf_grid_properties():
    cfg = OpticalConfig()
    grid = otf(cfg, 64, 64, 50.0)
    vals = grid.data.real
    assert vals[32, 32] == pytest.approx(1.0)
    assert np.all(vals >= 0) and np.all(vals <= 1)
    # radially non-increasing along the positive x axis
    profile = vals[32, 32:]
    assert np.all(np.diff(profile) <= 1e-12)


def test_otf_rejects_undersampled_grid():
    cfg = OpticalConfig()
    with pytest.raises(SamplingError) as err:
        otf(cfg, 64, 64, cfg.pixel_size_nm)  # 219.5 nm undersamples kc
    assert "171.9" in str(err.value)  # names the required grid pixel


def test_psf_contracts():
    cfg = OpticalConfig()
    p = psf(cfg, 128, 128, 54.875)
    assert p.data.sum() == pytest.approx(1.0, abs=1e-9)
    assert p.data.min() >= 0.0
    assert np.unravel_index(np.argmax(p.data), p.data.shape) == (64, 64)
    # even symmetry about the center
    flipped = p.data[1:, 1:][::-1, ::-1]
    assert np.allclose(p.data[1:, 1:], flipped, atol=1e-9 * p.data.max())


def test_psf_fwhm_near_theory():
    cfg = OpticalConfig()
    n, g = 256, 54.875 / 2
    p = psf(cfg, n, n, g)
    c = n * g / 2
    r = fwhm(p, (c - 1200, c), (c + 1200, c), n_samples=1201)
    theory = 0.514 * cfg.wavelength_nm / cfg.na  # ~353 nm
    assert r.fwhm_nm == pytest.approx(theory, rel=0.02)
