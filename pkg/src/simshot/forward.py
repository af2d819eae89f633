"""Image formation: fine-grid blur, camera binning, shot/read noise, stacks.

A camera frame is formed by multiplying the fine-grid ground truth with the
illumination pattern, low-pass filtering with the optics OTF (circular
convolution in Fourier space), block-averaging down to the camera grid, and
applying Poisson shot noise plus Gaussian read noise in photon units.

Stacks persist as a directory of six IMG1 slices plus a plain-text manifest
``stack.txt`` with lines ``slice=<i> orientation=<X|Y> phase=<rad> file=<name>``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FormatError,
    GeometryError,
    InvalidInputError,
    ValidationError,
)
from .illumination import (
    PROTOCOL_PHASES,
    AcquisitionProtocol,
    IlluminationPattern,
    pattern_image,
)
from .imagecore import Image2D, read_img1, write_img1
from .optics import OpticalConfig, otf_grid

MANIFEST_NAME = "stack.txt"


@dataclass(frozen=True)
class NoiseModel:
    """Camera noise: Poisson shot noise plus Gaussian read noise.

    ``photons_at_unit_intensity`` scales truth value 1.0 to an expected
    photon count (0 disables shot noise); ``read_noise_sd`` is in photon
    units (0 disables).  Outputs are deterministic given ``seed``; each
    stack slice consumes an independent stream keyed by (seed, slice index).
    """

    photons_at_unit_intensity: float = 10000.0
    read_noise_sd: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.photons_at_unit_intensity < 0:
            raise InvalidInputError(
                f"photons_at_unit_intensity must be >= 0, got {self.photons_at_unit_intensity}"
            )
        if self.read_noise_sd < 0:
            raise InvalidInputError(f"read_noise_sd must be >= 0, got {self.read_noise_sd}")


NOISELESS = NoiseModel(photons_at_unit_intensity=0.0, read_noise_sd=0.0, seed=0)


@dataclass(frozen=True)
class SimStack:
    """Six camera frames tagged (orientation, phase), one acquisition group."""

    slices: tuple
    tags: tuple
    truth: Image2D | None = field(default=None, compare=False)

    def __post_init__(self):
        slices = tuple(self.slices)
        tags = tuple((str(o), float(p)) for o, p in self.tags)
        if len(slices) != 6 or len(tags) != 6:
            raise ValidationError(
                f"stack must hold exactly 6 slices, got {len(slices)} slices / {len(tags)} tags"
            )
        shape = (slices[0].height, slices[0].width)
        pixel = slices[0].pixel_size_nm
        for i, s in enumerate(slices):
            if (s.height, s.width) != shape or s.pixel_size_nm != pixel:
                raise ValidationError(f"slice {i} geometry differs from slice 0")
        for orient in ("X", "Y"):
            phases = sorted(p for o, p in tags if o == orient)
            if len(phases) != 3 or any(
                abs(a - b) > 1e-6 for a, b in zip(phases, PROTOCOL_PHASES)
            ):
                raise ValidationError(
                    f"orientation {orient} phases {phases} do not form "
                    f"the protocol multiset {tuple(round(p, 7) for p in PROTOCOL_PHASES)}"
                )
        object.__setattr__(self, "slices", slices)
        object.__setattr__(self, "tags", tags)

    @property
    def pixel_size_nm(self) -> float:
        return self.slices[0].pixel_size_nm


def _noise_rng(noise: NoiseModel, stream: int):
    key = np.array([noise.seed % 2**64, stream % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def apply_noise(img: Image2D, noise: NoiseModel, stream: int = 0) -> Image2D:
    """Apply the camera noise model; output is in photon units when shot
    noise is enabled, otherwise in the input units."""
    data = img.data
    if noise.photons_at_unit_intensity == 0 and noise.read_noise_sd == 0:
        return img
    rng = _noise_rng(noise, stream)
    if noise.photons_at_unit_intensity > 0:
        lam = np.clip(data * noise.photons_at_unit_intensity, 0.0, None)
        data = rng.poisson(lam).astype(np.float64)
    else:
        data = data.copy()
    if noise.read_noise_sd > 0:
        data = data + rng.normal(0.0, noise.read_noise_sd, size=data.shape)
    return Image2D(data, img.pixel_size_nm)


def pixel_binning_transfer(freq_cyc_per_nm, pixel_size_nm: float, factor: int):
    """One-axis transfer function of the block-mean camera binning.

    The mean of ``factor`` fine samples centered on the camera pixel has the
    Dirichlet-kernel response sin(pi k pix) / (factor sin(pi k pix / factor));
    it is 1 at DC and real everywhere (the block is centered).
    """
    if factor == 1:
        return np.ones_like(np.asarray(freq_cyc_per_nm, dtype=np.float64))
    arg = np.pi * np.asarray(freq_cyc_per_nm, dtype=np.float64) * pixel_size_nm
    denom = factor * np.sin(arg / factor)
    small = np.abs(denom) < 1e-12
    out = np.where(small, 1.0, np.sin(arg) / np.where(small, 1.0, denom))
    return out


def blur_and_bin(fine: np.ndarray, fine_pixel_nm: float, cfg: OpticalConfig) -> np.ndarray:
    """OTF low-pass on the fine grid, then integer block-mean to camera pixels.

    Accepts real or complex data (complex is used by separation oracles);
    the fine grid must resolve the OTF support and divide the camera pixel
    evenly.
    """
    h, w = fine.shape
    ratio = cfg.pixel_size_nm / fine_pixel_nm
    factor = int(round(ratio))
    if factor < 1 or abs(ratio - factor) > 1e-9 * max(ratio, 1.0):
        raise GeometryError(
            f"fine grid pixel {fine_pixel_nm} nm does not divide camera pixel "
            f"{cfg.pixel_size_nm} nm evenly (ratio {ratio})"
        )
    if h % factor or w % factor:
        raise GeometryError(
            f"fine grid {w}x{h} not divisible by binning factor {factor}"
        )
    weights = otf_grid(cfg, w, h, fine_pixel_nm).data.real
    spec = np.fft.fftshift(np.fft.fft2(fine)) * weights
    blurred = np.fft.ifft2(np.fft.ifftshift(spec))
    if not np.iscomplexobj(fine):
        blurred = blurred.real
    if factor == 1:
        return blurred
    return blurred.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))


def widefield(truth: Image2D, cfg: OpticalConfig, noise: NoiseModel = NOISELESS,
              stream: int = 0) -> Image2D:
    """Unpatterned camera frame: blur + bin + noise."""
    camera = blur_and_bin(truth.data, truth.pixel_size_nm, cfg)
    return apply_noise(Image2D(camera, cfg.pixel_size_nm), noise, stream)


def sim_raw(truth: Image2D, pattern: IlluminationPattern, cfg: OpticalConfig,
            noise: NoiseModel = NOISELESS, stream: int = 0) -> Image2D:
    """Structured-illumination camera frame for one pattern.

    The pattern must be realizable through the excitation path, i.e. its
    frequency cannot exceed the incoherent cutoff.
    """
    from .optics import abbe_cutoff

    if pattern.freq_cyc_per_nm > abbe_cutoff(cfg):
        raise InvalidInputError(
            f"pattern frequency {pattern.freq_cyc_per_nm:.4e} exceeds the "
            f"excitation cutoff {abbe_cutoff(cfg):.4e} cycles/nm"
        )
    pat = pattern_image(pattern, truth.width, truth.height, truth.pixel_size_nm)
    camera = blur_and_bin(truth.data * pat.data, truth.pixel_size_nm, cfg)
    return apply_noise(Image2D(camera, cfg.pixel_size_nm), noise, stream)


def acquire_stack(truth: Image2D, cfg: OpticalConfig, protocol: AcquisitionProtocol,
                  noise: NoiseModel = NOISELESS) -> SimStack:
    """Acquire the six protocol frames with independent per-slice noise."""
    slices = []
    tags = []
    for i, pattern in enumerate(protocol.patterns):
        slices.append(sim_raw(truth, pattern, cfg, noise, stream=i))
        tags.append((pattern.orientation, pattern.phase_rad))
    return SimStack(tuple(slices), tuple(tags), truth)


def save_stack(stack: SimStack, directory) -> None:
    """Write six IMG1 slices plus the manifest (atomically: temp + rename)."""
    os.makedirs(directory, exist_ok=True)
    lines = []
    for i, (img, (orient, phase)) in enumerate(zip(stack.slices, stack.tags)):
        name = f"slice_{i}.img1"
        _atomic_write_img1(img, os.path.join(directory, name))
        lines.append(f"slice={i} orientation={orient} phase={phase:.9g} file={name}")
    tmp = os.path.join(directory, MANIFEST_NAME + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, os.path.join(directory, MANIFEST_NAME))


def _atomic_write_img1(img: Image2D, path) -> None:
    tmp = path + ".tmp"
    write_img1(img, tmp)
    os.replace(tmp, path)


def load_stack(directory) -> SimStack:
    """Load a stack directory written by :func:`save_stack` (or any producer
    honoring the manifest format)."""
    manifest = os.path.join(directory, MANIFEST_NAME)
    if not os.path.isfile(manifest):
        raise ValidationError(f"no {MANIFEST_NAME} manifest in {directory}")
    entries = {}
    with open(manifest, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = {}
            for token in line.split():
                if "=" not in token:
                    raise FormatError(
                        f"{MANIFEST_NAME}:{lineno}: malformed token {token!r}"
                    )
                key, value = token.split("=", 1)
                fields[key] = value
            missing = {"slice", "orientation", "phase", "file"} - set(fields)
            if missing:
                raise FormatError(
                    f"{MANIFEST_NAME}:{lineno}: missing keys {sorted(missing)}"
                )
            entries[int(fields["slice"])] = fields
    if sorted(entries) != list(range(6)):
        raise ValidationError(
            f"manifest must list slices 0..5, got {sorted(entries)}"
        )
    slices, tags = [], []
    for i in range(6):
        fields = entries[i]
        path = os.path.join(directory, fields["file"])
        if not os.path.isfile(path):
            raise ValidationError(
                f"missing slice {i}: file {fields['file']!r} not found in {directory}"
            )
        slices.append(read_img1(path))
        tags.append((fields["orientation"], float(fields["phase"])))
    return SimStack(tuple(slices), tuple(tags))
