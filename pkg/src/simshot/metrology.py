"""Image-quality metrology: decorrelation resolution estimation and FWHM.

The decorrelation estimator cross-correlates an image spectrum with its
unit-magnitude (phase-only) normalization inside binary circular masks of
growing radius,

    d(r) = sum_{|k|<=r} Re{I(k) conj(In(k))}
           / sqrt( sum_k |I(k)|^2 * sum_{|k|<=r} |In(k)|^2 ),

repeats the sweep after Gaussian high-pass pre-filtering, and takes the
highest-frequency qualifying local maximum across all curves.  Radii are
normalized so 1.0 equals the Nyquist frequency of the reference camera grid
(219.5 nm pixels by default); a 2x-upsampled grid therefore spans radii up
to 2.  The final conversion is ``resolution = 2 * reference_pixel / kcmax``.

The DC bin is excluded from every sum so constant offsets cannot dominate
the correlation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates
from scipy.signal import find_peaks

from .errors import (
    InvalidInputError,
    ProfileDegenerateError,
    ResolutionIndeterminateError,
)
from .imagecore import Image2D, Spectrum2D, apodize_edges, fft2, frequency_grid

DEFAULT_REFERENCE_PIXEL_NM = 219.5


@dataclass(frozen=True)
class DecorrelationResult:
    """Curves, qualifying maxima, and the derived resolution."""

    radii: np.ndarray
    d0: np.ndarray
    filtered_curves: list
    maxima: list
    kcmax: float
    resolution_nm: float
    reference_pixel_nm: float


@dataclass(frozen=True)
class FwhmResult:
    """Line profile and its full width at half maximum."""

    distances_nm: np.ndarray
    profile: np.ndarray
    peak_position_nm: float
    fwhm_nm: float
    left_crossing_nm: float
    right_crossing_nm: float


def normalize_spectrum(spec: Spectrum2D, eps: float = 0.0) -> Spectrum2D:
    """Unit-magnitude copy of the spectrum; bins below ``eps`` become 0."""
    mag = np.abs(spec.data)
    keep = (mag >= eps) & (mag > 0)
    out = np.zeros_like(spec.data)
    np.divide(spec.data, mag, out=out, where=keep)
    return Spectrum2D(out, spec.pixel_size_nm)


def _normalized_radius(height, width, pixel_size_nm, reference_pixel_nm):
    fy, fx = frequency_grid(height, width, pixel_size_nm)
    return np.hypot(fy, fx) * (2.0 * reference_pixel_nm)


def decorrelation_value(
    spec: Spectrum2D,
    nspec: Spectrum2D,
    r: float,
    reference_pixel_nm: float = DEFAULT_REFERENCE_PIXEL_NM,
) -> float:
    """Masked Fourier correlation between a spectrum and its normalization.

    Returns 0 when the mask is empty or a denominator vanishes.
    """
    if spec.data.shape != nspec.data.shape:
        raise InvalidInputError("spectrum and normalized spectrum shapes differ")
    if r < 0:
        raise InvalidInputError(f"radius must be >= 0, got {r}")
    h, w = spec.data.shape
    rnorm = _normalized_radius(h, w, spec.pixel_size_nm, reference_pixel_nm)
    mask = rnorm <= r
    mask[h // 2, w // 2] = False
    num = float(np.sum(np.real(spec.data * np.conj(nspec.data))[mask]))
    den_all = float(np.sum(np.abs(spec.data) ** 2)) - abs(spec.data[h // 2, w // 2]) ** 2
    den_mask = float(np.sum(np.abs(nspec.data[mask]) ** 2))
    if den_all <= 0 or den_mask <= 0:
        return 0.0
    return num / np.sqrt(den_all * den_mask)


class _CurveEngine:
    """Shared machinery: one sort of the bins, cumulative masked sums."""

    def __init__(self, img: Image2D, reference_pixel_nm, border_fraction, eps_rel):
        # a constant image has a pure-DC spectrum by contract; the edge taper
        # would otherwise inject window structure into the empty mask region
        self.degenerate = float(img.data.max()) == float(img.data.min())
        spec = fft2(apodize_edges(img, border_fraction))
        h, w = spec.data.shape
        mag = np.abs(spec.data)
        eps = eps_rel * mag.max() if mag.max() > 0 else 0.0
        nspec = normalize_spectrum(spec, eps)
        rnorm = _normalized_radius(h, w, img.pixel_size_nm, reference_pixel_nm)
        rnorm[h // 2, w // 2] = np.inf  # DC never enters any mask
        order = np.argsort(rnorm, axis=None)
        self.r_sorted = rnorm.ravel()[order]
        self.corr_sorted = np.real(spec.data * np.conj(nspec.data)).ravel()[order]
        self.power_sorted = (mag**2).ravel()[order]
        self.norm_sorted = (np.abs(nspec.data) ** 2).ravel()[order]
        self.r_max = min(reference_pixel_nm / img.pixel_size_nm, 2.0)

    def curve(self, radii, highpass_sigma=None):
        if self.degenerate:
            return np.zeros(len(radii))
        if highpass_sigma is None:
            weights = np.ones_like(self.r_sorted)
        else:
            weights = 1.0 - np.exp(-self.r_sorted**2 / (2.0 * highpass_sigma**2))
            weights[~np.isfinite(self.r_sorted)] = 0.0
        num_cum = np.cumsum(weights * self.corr_sorted)
        den_mask_cum = np.cumsum(self.norm_sorted)
        den_all = float(np.sum((weights**2 * self.power_sorted)[np.isfinite(self.r_sorted)]))
        idx = np.searchsorted(self.r_sorted, radii, side="right") - 1
        values = np.zeros(len(radii))
        ok = idx >= 0
        if den_all > 0:
            num = np.where(ok, num_cum[np.maximum(idx, 0)], 0.0)
            den_mask = np.where(ok, den_mask_cum[np.maximum(idx, 0)], 0.0)
            good = ok & (den_mask > 0)
            values[good] = num[good] / np.sqrt(den_all * den_mask[good])
        return values


def decorrelation_curve(
    img: Image2D,
    reference_pixel_nm: float = DEFAULT_REFERENCE_PIXEL_NM,
    n_radii: int = 64,
    border_fraction: float = 0.1,
    eps_rel: float = 1e-12,
):
    """Base decorrelation curve d(r) on ``n_radii`` radii spanning (0, r_max].

    Returns ``(radii, values)``.  ``r_max`` is 1 on the reference camera
    grid and 2 on the 2x-upsampled grid.
    """
    if n_radii < 1:
        raise InvalidInputError(f"n_radii must be >= 1, got {n_radii}")
    engine = _CurveEngine(img, reference_pixel_nm, border_fraction, eps_rel)
    radii = engine.r_max * np.arange(1, n_radii + 1) / n_radii
    return radii, engine.curve(radii)


def analyze_resolution(
    img: Image2D,
    reference_pixel_nm: float = DEFAULT_REFERENCE_PIXEL_NM,
    n_filters: int = 10,
    n_radii: int = 64,
    sigma_min: float = 0.05,
    sigma_max: float = 1.0,
    min_prominence: float = 0.01,
    min_level: float = 0.05,
    border_fraction: float = 0.1,
    eps_rel: float = 1e-12,
) -> DecorrelationResult:
    """Full sweep: base curve + Gaussian high-pass curves, maxima, resolution.

    Raises :class:`ResolutionIndeterminateError` when no curve has a strict
    local maximum with the required prominence and level.
    """
    engine = _CurveEngine(img, reference_pixel_nm, border_fraction, eps_rel)
    radii = engine.r_max * np.arange(1, n_radii + 1) / n_radii
    d0 = engine.curve(radii)
    sigmas = np.geomspace(sigma_min, sigma_max, n_filters) if n_filters > 0 else []
    filtered = [engine.curve(radii, highpass_sigma=s) for s in sigmas]

    maxima = []
    for values in [d0, *filtered]:
        peaks, _ = find_peaks(values, height=min_level, prominence=min_prominence)
        maxima.extend((float(radii[i]), float(values[i])) for i in peaks)
    if not maxima:
        raise ResolutionIndeterminateError(
            "no qualifying local maxima in any decorrelation curve; "
            "resolution is indeterminate"
        )
    maxima.sort()
    kcmax = maxima[-1][0]
    return DecorrelationResult(
        radii=radii,
        d0=d0,
        filtered_curves=filtered,
        maxima=maxima,
        kcmax=kcmax,
        resolution_nm=resolution_from_kcmax(kcmax, reference_pixel_nm),
        reference_pixel_nm=reference_pixel_nm,
    )


def resolution_from_kcmax(
    kcmax: float, reference_pixel_nm: float = DEFAULT_REFERENCE_PIXEL_NM
) -> float:
    """Resolution in nm from a normalized cutoff: 2 * pixel / kcmax."""
    if not 0 < kcmax <= 2:
        raise InvalidInputError(f"kcmax must lie in (0, 2], got {kcmax}")
    return 2.0 * reference_pixel_nm / kcmax


def fwhm(img: Image2D, p0, p1, n_samples: int = 256) -> FwhmResult:
    """FWHM of the bilinear line profile from ``p0`` to ``p1`` (nm points).

    Points are ``(x_nm, y_nm)`` in the field coordinate system where pixel
    ``(i, j)`` is centered at ``((j + 0.5) * pixel, (i + 0.5) * pixel)``.
    Background is the profile minimum; crossings are linearly interpolated.
    """
    if n_samples < 8:
        raise InvalidInputError(f"n_samples must be >= 8, got {n_samples}")
    pix = img.pixel_size_nm
    cols = np.array([p0[0], p1[0]]) / pix - 0.5
    rows = np.array([p0[1], p1[1]]) / pix - 0.5
    if (
        cols.min() < 0
        or rows.min() < 0
        or cols.max() > img.width - 1
        or rows.max() > img.height - 1
    ):
        raise InvalidInputError("profile segment extends outside the image")
    t = np.linspace(0.0, 1.0, n_samples)
    sample_cols = cols[0] + t * (cols[1] - cols[0])
    sample_rows = rows[0] + t * (rows[1] - rows[0])
    profile = map_coordinates(img.data, [sample_rows, sample_cols], order=1)
    length = float(np.hypot(p1[0] - p0[0], p1[1] - p0[1]))
    distances = t * length

    background = float(profile.min())
    peak_idx = int(np.argmax(profile))
    peak = float(profile[peak_idx])
    if peak <= background:
        raise ProfileDegenerateError("profile is flat; no peak to measure")
    half = background + 0.5 * (peak - background)

    left = _crossing(distances, profile, peak_idx, half, direction=-1)
    right = _crossing(distances, profile, peak_idx, half, direction=+1)
    return FwhmResult(
        distances_nm=distances,
        profile=profile,
        peak_position_nm=float(distances[peak_idx]),
        fwhm_nm=right - left,
        left_crossing_nm=left,
        right_crossing_nm=right,
    )


def _crossing(distances, profile, peak_idx, half, direction):
    i = peak_idx
    while 0 <= i + direction < len(profile):
        j = i + direction
        if profile[j] < half:
            frac = (half - profile[i]) / (profile[j] - profile[i])
            return float(distances[i] + frac * (distances[j] - distances[i]))
        i = j
    side = "left" if direction < 0 else "right"
    raise ProfileDegenerateError(
        f"profile never falls below half maximum on the {side} side of the peak"
    )
