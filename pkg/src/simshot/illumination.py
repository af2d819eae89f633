"""Sinusoidal structured-illumination patterns: two orientations, three phases.

A pattern is ``1 + m * cos(2 pi f x + phi)`` along its orientation axis
(``X`` varies along image columns, ``Y`` along rows).  The standard
acquisition protocol is six frames: phases 0, 2pi/3, 4pi/3 in each of the
two perpendicular orientations, sharing one frequency and modulation depth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .imagecore import Image2D
from .optics import OpticalConfig, abbe_cutoff

ORIENTATIONS = ("X", "Y")
PROTOCOL_PHASES = (0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0)


@dataclass(frozen=True)
class IlluminationPattern:
    """One sinusoidal pattern: orientation, frequency, phase, modulation."""

    orientation: str
    freq_cyc_per_nm: float
    phase_rad: float
    modulation: float

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise InvalidInputError(
                f"orientation must be one of {ORIENTATIONS}, got {self.orientation!r}"
            )
        if not self.freq_cyc_per_nm > 0:
            raise InvalidInputError(
                f"freq_cyc_per_nm must be > 0, got {self.freq_cyc_per_nm}"
            )
        if not 0 < self.modulation <= 1:
            raise InvalidInputError(f"modulation must lie in (0, 1], got {self.modulation}")


@dataclass(frozen=True)
class AcquisitionProtocol:
    """Ordered six-pattern protocol: (X, 0), (X, 2pi/3), (X, 4pi/3), then Y."""

    patterns: tuple

    def __post_init__(self):
        pats = tuple(self.patterns)
        if len(pats) != 6:
            raise InvalidInputError(f"protocol must hold exactly 6 patterns, got {len(pats)}")
        expected = [("X", p) for p in PROTOCOL_PHASES] + [("Y", p) for p in PROTOCOL_PHASES]
        for pat, (orient, phase) in zip(pats, expected):
            if pat.orientation != orient or abs(pat.phase_rad - phase) > 1e-9:
                raise InvalidInputError(
                    f"protocol slice mismatch: got ({pat.orientation}, {pat.phase_rad}), "
                    f"expected ({orient}, {phase:.9f})"
                )
        freqs = {p.freq_cyc_per_nm for p in pats}
        mods = {p.modulation for p in pats}
        if len(freqs) != 1 or len(mods) != 1:
            raise InvalidInputError("protocol patterns must share frequency and modulation")
        object.__setattr__(self, "patterns", pats)

    @property
    def freq_cyc_per_nm(self) -> float:
        return self.patterns[0].freq_cyc_per_nm

    @property
    def modulation(self) -> float:
        return self.patterns[0].modulation


def pattern_image(
    p: IlluminationPattern, width: int, height: int, grid_pixel_nm: float
) -> Image2D:
    """Render the pattern on a grid; values lie in [1 - m, 1 + m].

    Pixel centers sit at ``(index + 0.5) * grid_pixel_nm`` along each axis,
    matching the phantom's coordinate convention; the phase reference is the
    field origin (x = 0).
    """
    if width < 1 or height < 1:
        raise InvalidInputError(f"grid dimensions must be >= 1, got {width}x{height}")
    if not grid_pixel_nm > 0:
        raise InvalidInputError(f"grid_pixel_nm must be > 0, got {grid_pixel_nm}")
    if p.orientation == "X":
        coords = (np.arange(width) + 0.5) * grid_pixel_nm
        line = 1.0 + p.modulation * np.cos(
            2.0 * np.pi * p.freq_cyc_per_nm * coords + p.phase_rad
        )
        data = np.broadcast_to(line[None, :], (height, width)).copy()
    else:
        coords = (np.arange(height) + 0.5) * grid_pixel_nm
        line = 1.0 + p.modulation * np.cos(
            2.0 * np.pi * p.freq_cyc_per_nm * coords + p.phase_rad
        )
        data = np.broadcast_to(line[:, None], (height, width)).copy()
    return Image2D(data, grid_pixel_nm)


def default_protocol(
    cfg: OpticalConfig, freq_fraction: float = 0.8, modulation: float = 0.9
) -> AcquisitionProtocol:
    """Six-frame protocol at ``freq_fraction`` of the incoherent cutoff."""
    if not 0 < freq_fraction <= 1:
        raise InvalidInputError(f"freq_fraction must lie in (0, 1], got {freq_fraction}")
    freq = freq_fraction * abbe_cutoff(cfg)
    patterns = tuple(
        IlluminationPattern(orient, freq, phase, modulation)
        for orient in ORIENTATIONS
        for phase in PROTOCOL_PHASES
    )
    return AcquisitionProtocol(patterns)
