"""Synthetic ground truth: regular fluorescent-spot lattices on a dark field.

Each occupied lattice site is a raised-cosine disc (smooth falloff, first
zero at the nominal spot diameter) so the profile stays band-limited on the
simulation grid.  All randomness (occupancy, per-spot amplitude, positional
jitter) comes from a counter-based generator keyed by the spec seed, so the
same spec always renders a bit-identical image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InvalidInputError, SamplingError
from .imagecore import Image2D


@dataclass(frozen=True)
class PhantomSpec:
    """Lattice geometry and brightness statistics of a synthetic spot array."""

    rows: int = 16
    cols: int = 16
    pitch_nm: float = 480.0
    dnb_diameter_nm: float = 220.0
    occupancy: float = 0.9
    intensity_min: float = 0.5
    intensity_max: float = 1.0
    jitter_nm: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise InvalidInputError(f"rows/cols must be >= 1, got {self.rows}x{self.cols}")
        if not self.pitch_nm > 0:
            raise InvalidInputError(f"pitch_nm must be > 0, got {self.pitch_nm}")
        if not 0 < self.dnb_diameter_nm < self.pitch_nm:
            raise InvalidInputError(
                f"dnb_diameter_nm must lie in (0, pitch_nm), got {self.dnb_diameter_nm}"
            )
        if not 0 < self.occupancy <= 1:
            raise InvalidInputError(f"occupancy must lie in (0, 1], got {self.occupancy}")
        if not 0 <= self.intensity_min <= self.intensity_max:
            raise InvalidInputError(
                f"need 0 <= intensity_min <= intensity_max, got "
                f"[{self.intensity_min}, {self.intensity_max}]"
            )
        if self.jitter_nm < 0:
            raise InvalidInputError(f"jitter_nm must be >= 0, got {self.jitter_nm}")


def _site_draws(spec: PhantomSpec):
    """Per-site random draws in fixed order: occupancy, amplitude, jitter x/y.

    Sites are enumerated row-major.  Philox is counter-based, so the draws
    are a pure function of the seed.
    """
    n = spec.rows * spec.cols
    rng = np.random.Generator(np.random.Philox(key=spec.seed % 2**64))
    occupied = rng.random(n) < spec.occupancy
    amplitude = spec.intensity_min + (spec.intensity_max - spec.intensity_min) * rng.random(n)
    jitter_x = (2.0 * rng.random(n) - 1.0) * spec.jitter_nm
    jitter_y = (2.0 * rng.random(n) - 1.0) * spec.jitter_nm
    return occupied, amplitude, jitter_x, jitter_y


def generate_phantom(
    spec: PhantomSpec, width: int, height: int, grid_pixel_nm: float
) -> Image2D:
    """Render the lattice, centered in the field, onto a fine grid.

    Pixel ``(i, j)`` is centered at ``((j + width/2 offset) ...)`` — concretely
    at ``((j + 0.5) * grid_pixel_nm, (i + 0.5) * grid_pixel_nm)``; background
    is exactly zero.
    """
    if width < 1 or height < 1:
        raise InvalidInputError(f"field dimensions must be >= 1, got {width}x{height}")
    if not grid_pixel_nm > 0:
        raise InvalidInputError(f"grid_pixel_nm must be > 0, got {grid_pixel_nm}")
    if grid_pixel_nm > spec.dnb_diameter_nm / 4.0:
        raise SamplingError(
            f"grid pixel {grid_pixel_nm} nm too coarse for {spec.dnb_diameter_nm} nm "
            f"spots; need <= {spec.dnb_diameter_nm / 4.0} nm"
        )
    radius = spec.dnb_diameter_nm / 2.0
    half_x = (spec.cols - 1) / 2.0 * spec.pitch_nm + radius + spec.jitter_nm
    half_y = (spec.rows - 1) / 2.0 * spec.pitch_nm + radius + spec.jitter_nm
    field_x = width * grid_pixel_nm
    field_y = height * grid_pixel_nm
    if 2.0 * half_x > field_x or 2.0 * half_y > field_y:
        raise GeometryError(
            f"lattice extent {2 * half_x:.1f} x {2 * half_y:.1f} nm exceeds "
            f"field {field_x:.1f} x {field_y:.1f} nm"
        )

    occupied, amplitude, jitter_x, jitter_y = _site_draws(spec)
    out = np.zeros((height, width), dtype=np.float64)
    cx, cy = field_x / 2.0, field_y / 2.0
    halo = int(np.ceil(radius / grid_pixel_nm)) + 1
    for idx in np.flatnonzero(occupied):
        r, c = divmod(int(idx), spec.cols)
        x = cx + (c - (spec.cols - 1) / 2.0) * spec.pitch_nm + jitter_x[idx]
        y = cy + (r - (spec.rows - 1) / 2.0) * spec.pitch_nm + jitter_y[idx]
        jc = int(np.floor(x / grid_pixel_nm - 0.5))
        ic = int(np.floor(y / grid_pixel_nm - 0.5))
        j0, j1 = max(jc - halo, 0), min(jc + halo + 2, width)
        i0, i1 = max(ic - halo, 0), min(ic + halo + 2, height)
        px = (np.arange(j0, j1) + 0.5) * grid_pixel_nm - x
        py = (np.arange(i0, i1) + 0.5) * grid_pixel_nm - y
        rho = np.hypot(py[:, None], px[None, :])
        patch = np.where(
            rho < radius,
            amplitude[idx] * 0.5 * (1.0 + np.cos(np.pi * rho / radius)),
            0.0,
        )
        out[i0:i1, j0:j1] += patch
    return Image2D(out, grid_pixel_nm)
