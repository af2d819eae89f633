"""Image and spectrum containers, FFT conventions, apodization, and file I/O.

Conventions used throughout the engine:

* images are real-valued 2D arrays of shape ``(height, width)`` with a
  physical pixel size in nanometers;
* spectra are complex 2D arrays of the same shape with the DC component at
  pixel ``(height // 2, width // 2)``;
* transforms are unitary (1/sqrt(N) on both directions), so Parseval holds
  without bookkeeping factors;
* all computation is float64/complex128; files store 32-bit floats.

The IMG1 binary format: 24-byte header ``magic "SIMG" | u16 version=1 |
u8 dtype (1=f32 LE, 2=u16 LE) | u8 pad=0 | u32 width | u32 height |
f64 pixel_size_nm``, followed by the row-major payload.  u16 payloads are
export-only (linear min-max scaled, scaling not stored) and read back as
float64 counts / 65535.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.signal.windows import tukey

from .errors import (
    FormatError,
    InvalidInputError,
    NumericConsistencyError,
)

_IMG1_MAGIC = b"SIMG"
_IMG1_VERSION = 1
_IMG1_HEADER = struct.Struct("<4sHBBIId")
_DTYPE_F32 = 1
_DTYPE_U16 = 2


@dataclass(frozen=True)
class Image2D:
    """Real-valued raster with a physical pixel size.

    ``data`` has shape ``(height, width)``; samples must be finite.
    """

    data: np.ndarray
    pixel_size_nm: float

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError(
                f"image must be 2D with positive dimensions, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("image contains non-finite samples")
        if not self.pixel_size_nm > 0:
            raise InvalidInputError(
                f"pixel_size_nm must be > 0, got {self.pixel_size_nm}"
            )
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "pixel_size_nm", float(self.pixel_size_nm))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Spectrum2D:
    """Complex DC-centered Fourier representation of an :class:`Image2D`.

    The DC bin sits at ``(height // 2, width // 2)``; ``pixel_size_nm`` is
    the pixel size of the originating image.
    """

    data: np.ndarray
    pixel_size_nm: float

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError(
                f"spectrum must be 2D with positive dimensions, got shape {arr.shape}"
            )
        if not self.pixel_size_nm > 0:
            raise InvalidInputError(
                f"pixel_size_nm must be > 0, got {self.pixel_size_nm}"
            )
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "pixel_size_nm", float(self.pixel_size_nm))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def frequency_grid(height, width, pixel_size_nm):
    """Return DC-centered spatial-frequency coordinate arrays (fy, fx).

    Units are cycles/nm, matching the spectrum layout of :func:`fft2`:
    bin ``(i, j)`` maps to ``fy[i], fx[j]``.
    """
    fy = np.fft.fftshift(np.fft.fftfreq(height, d=pixel_size_nm))
    fx = np.fft.fftshift(np.fft.fftfreq(width, d=pixel_size_nm))
    return fy[:, None], fx[None, :]


def fft2(img: Image2D) -> Spectrum2D:
    """Unitary forward transform with the DC bin shifted to the center."""
    spec = np.fft.fftshift(np.fft.fft2(img.data, norm="ortho"))
    return Spectrum2D(spec, img.pixel_size_nm)


def _real_from_complex(arr, context):
    re_max = float(np.max(np.abs(arr.real)))
    im_max = float(np.max(np.abs(arr.imag)))
    if im_max > 1e-9 * re_max:
        raise NumericConsistencyError(
            f"{context}: non-negligible imaginary residue "
            f"(max |imag| = {im_max:.3e}, max |real| = {re_max:.3e})"
        )
    return np.ascontiguousarray(arr.real)


def ifft2(spec: Spectrum2D) -> Image2D:
    """Unitary inverse of :func:`fft2`.

    The spectrum must be conjugate-symmetric up to rounding; the imaginary
    residue is checked against 1e-9 of the real peak before being discarded.
    """
    arr = np.fft.ifft2(np.fft.ifftshift(spec.data), norm="ortho")
    return Image2D(_real_from_complex(arr, "ifft2"), spec.pixel_size_nm)


def apodize_edges(img: Image2D, border_fraction: float = 0.1) -> Image2D:
    """Taper image edges with a separable raised-cosine window.

    The window is 1 in the interior and falls smoothly to 0 at the outermost
    pixel over ``border_fraction`` of each dimension.  ``border_fraction = 0``
    is the identity.
    """
    if not 0.0 <= border_fraction <= 0.5:
        raise InvalidInputError(
            f"border_fraction must lie in [0, 0.5], got {border_fraction}"
        )
    if border_fraction == 0.0:
        return img
    wy = tukey(img.height, alpha=2.0 * border_fraction)
    wx = tukey(img.width, alpha=2.0 * border_fraction)
    return Image2D(img.data * wy[:, None] * wx[None, :], img.pixel_size_nm)


def pad_spectrum_centered(data: np.ndarray, factor: int) -> np.ndarray:
    """Zero-pad a DC-centered spectrum symmetrically to ``factor`` times its size.

    For even input dimensions the single Nyquist row/column is split between
    its two representable positions so that spectra of real images stay
    exactly conjugate-symmetric.
    """
    h, w = data.shape
    if factor == 1:
        return data.copy()
    fh, fw = factor * h, factor * w
    out = np.zeros((fh, fw), dtype=data.dtype)
    oy, ox = fh // 2 - h // 2, fw // 2 - w // 2
    out[oy : oy + h, ox : ox + w] = data
    if h % 2 == 0:
        out[oy + h, :] = 0.5 * out[oy, :]
        out[oy, :] *= 0.5
    if w % 2 == 0:
        out[:, ox + w] = 0.5 * out[:, ox]
        out[:, ox] *= 0.5
    return out


def upsample_fourier(img: Image2D, factor: int) -> Image2D:
    """Upsample by zero-padding the spectrum; preserves the image mean.

    Output pixel size is ``pixel_size_nm / factor``.
    """
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise InvalidInputError(f"upsample factor must be an integer >= 1, got {factor}")
    if factor == 1:
        return Image2D(img.data.copy(), img.pixel_size_nm)
    padded = pad_spectrum_centered(fft2(img).data, factor)
    arr = np.fft.ifft2(np.fft.ifftshift(padded), norm="ortho")
    # unitary norm shrinks the mean by `factor`; undo it
    arr = _real_from_complex(arr, "upsample_fourier") * factor
    return Image2D(arr, img.pixel_size_nm / factor)


def write_img1(img: Image2D, path, dtype: str = "f32") -> None:
    """Write an image in the IMG1 binary format.

    ``dtype="f32"`` stores samples directly (bit-exact round trip for
    f32-representable data); ``dtype="u16"`` applies linear min-max scaling
    (constant images map to mid-scale 32768) and is export-only.
    """
    if dtype == "f32":
        code = _DTYPE_F32
        payload = np.ascontiguousarray(img.data, dtype="<f4").tobytes()
    elif dtype == "u16":
        code = _DTYPE_U16
        payload = _scale_u16(img.data).astype("<u2").tobytes()
    else:
        raise InvalidInputError(f"unknown IMG1 dtype {dtype!r}")
    header = _IMG1_HEADER.pack(
        _IMG1_MAGIC, _IMG1_VERSION, code, 0, img.width, img.height, img.pixel_size_nm
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_img1(path) -> Image2D:
    """Read an IMG1 file, validating the header field by field."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _IMG1_HEADER.size:
        raise FormatError("truncated IMG1 header", offset=len(raw))
    magic, version, code, pad, width, height, pixel = _IMG1_HEADER.unpack_from(raw)
    if magic != _IMG1_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {_IMG1_MAGIC!r}", offset=0)
    if version != _IMG1_VERSION:
        raise FormatError(f"unsupported IMG1 version {version}", offset=4)
    if code not in (_DTYPE_F32, _DTYPE_U16):
        raise FormatError(f"unknown IMG1 dtype code {code}", offset=6)
    if pad != 0:
        raise FormatError(f"nonzero pad byte {pad}", offset=7)
    if width < 1:
        raise FormatError("width must be >= 1", offset=8)
    if height < 1:
        raise FormatError("height must be >= 1", offset=12)
    sample_size = 4 if code == _DTYPE_F32 else 2
    expected = width * height * sample_size
    payload = raw[_IMG1_HEADER.size :]
    if len(payload) != expected:
        raise FormatError(
            f"payload length {len(payload)} != expected {expected}",
            offset=_IMG1_HEADER.size + min(len(payload), expected),
        )
    if code == _DTYPE_F32:
        data = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        data = np.frombuffer(payload, dtype="<u2").astype(np.float64) / 65535.0
    return Image2D(data.reshape(height, width), pixel)


def _scale_u16(data):
    lo, hi = float(data.min()), float(data.max())
    if hi == lo:
        return np.full(data.shape, 32768, dtype=np.uint32)
    scaled = np.rint((data - lo) / (hi - lo) * 65535.0)
    return scaled.astype(np.uint32)


def export_pgm16(img: Image2D, path) -> None:
    """Export as a binary 16-bit portable graymap (big-endian samples).

    Linear min-max scaling; constant images map to mid-scale 32768.
    """
    samples = _scale_u16(img.data).astype(">u2")
    header = f"P5\n{img.width} {img.height}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(samples.tobytes())
