import numpy as np
import pytest

from simshot import (
    NoiseModel,
    OpticalConfig,
    PhantomSpec,
    acquire_stack,
    generate_phantom,
)
from simshot.forward import NOISELESS
from simshot.illumination import default_protocol


FINE_DIVISOR = 4


@pytest.fixture(scope="session")
def cfg():
    return OpticalConfig()


@pytest.fixture(scope="session")
def fine_pixel(cfg):
    return cfg.pixel_size_nm / FINE_DIVISOR


@pytest.fixture(scope="session")
def default_truth(cfg, fine_pixel):
    """48x48-site lattice rendered for a 128x128 camera frame."""
    n = 128 * FINE_DIVISOR
    return generate_phantom(PhantomSpec(rows=48, cols=48, seed=3), n, n, fine_pixel)


@pytest.fixture(scope="session")
def default_protocol_six(cfg):
    return default_protocol(cfg)


@pytest.fixture(scope="session")
def noiseless_stack(default_truth, cfg, default_protocol_six):
    return acquire_stack(default_truth, cfg, default_protocol_six, NOISELESS)


@pytest.fixture(scope="session")
def noisy_stack(default_truth, cfg, default_protocol_six):
    return acquire_stack(default_truth, cfg, default_protocol_six, NoiseModel(seed=11))


def random_image(rng, h, w):
    return rng.normal(size=(h, w))
