"""Frequency-domain SIM reconstruction from a six-frame stack.

Pipeline: edge-apodize the raw frames, unmix each orientation's three
phase-shifted spectra into the 0th and +/-1st information bands (per-bin
3x3 linear solve), measure the illumination frequency/phase/modulation from
the band overlap, then recombine the five distinct bands at their true
positions on a 2x zero-padded grid with a generalized Wiener filter

    S(k) = sum_c H_c(k) * C_c(k) / ( sum_c H_c(k)^2 + w^2 ),

followed by a cosine apodization out to the extended cutoff.

Sign conventions: a frame spectrum obeys
``D_m(k) = H(k) [ S(k) + (m/2) e^{+i phi_m} S(k-p) + (m/2) e^{-i phi_m} S(k+p) ]``
so the unmixed "+" band holds ``S(k-p)`` and is translated by ``-p`` (sampled
at ``k+p``) to sit at its true position, weighted by ``H(|k+p|)``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
from scipy.ndimage import map_coordinates

from .errors import (
    DegeneratePhasesError,
    GeometryError,
    InvalidInputError,
    PatternNotFoundError,
)
from .forward import SimStack, pixel_binning_transfer
from .imagecore import (
    Image2D,
    Spectrum2D,
    _real_from_complex,
    apodize_edges,
    fft2,
    frequency_grid,
    pad_spectrum_centered,
)
from .optics import OpticalConfig, abbe_cutoff, otf_grid, otf_radial


@dataclass(frozen=True)
class SeparatedComponents:
    """Unmixed 0th and +/-1st bands of one orientation (camera coordinates).

    ``modulation`` records the depth assumed in the unmix so downstream
    estimation can report absolute modulation.
    """

    c0: Spectrum2D
    cplus: Spectrum2D
    cminus: Spectrum2D
    orientation: str
    modulation: float


@dataclass(frozen=True)
class PatternEstimate:
    """Measured illumination parameters for one orientation.

    ``freq_px`` is the (row, col) frequency in spectrum-bin units; it may
    exceed the principal range when an alias was resolved against a nominal
    frequency hint.
    """

    freq_px: tuple
    phase_rad: float
    modulation_est: float
    correlation_peak: float

    def __post_init__(self):
        if np.hypot(*self.freq_px) <= 0:
            raise InvalidInputError("pattern frequency must be nonzero")
        if not np.isfinite(self.correlation_peak) or self.correlation_peak < 0:
            raise InvalidInputError("correlation_peak must be finite and >= 0")


@dataclass(frozen=True)
class ReconParams:
    """Tunables of the reconstruction; defaults suit the engine defaults.

    ``nominal_freq_fraction`` (fraction of the incoherent cutoff) seeds the
    pattern search window and resolves grid aliases; None disables the hint
    and the search starts from the brightest off-DC sideband peak.
    """

    wiener_w: float = 0.05
    apod_cutoff_fraction: float = 1.0
    notch_suppress_dc: bool = True
    search_halfwidth_px: int = 3
    nominal_freq_fraction: float | None = 0.8
    edge_apod_fraction: float = 0.1
    overlap_threshold: float = 0.15
    binning_subsamples: int = 4

    def __post_init__(self):
        if not self.wiener_w > 0:
            raise InvalidInputError(f"wiener_w must be > 0, got {self.wiener_w}")
        if not 0 < self.apod_cutoff_fraction <= 1:
            raise InvalidInputError(
                f"apod_cutoff_fraction must lie in (0, 1], got {self.apod_cutoff_fraction}"
            )
        if self.search_halfwidth_px < 1:
            raise InvalidInputError(
                f"search_halfwidth_px must be >= 1, got {self.search_halfwidth_px}"
            )


@dataclass(frozen=True)
class ReconReport:
    """Per-stage diagnostics emitted alongside the SR image."""

    estimates: dict
    mixing_condition: dict
    timings_s: dict = field(default_factory=dict)

    def lines(self):
        out = []
        for orient, est in sorted(self.estimates.items()):
            out.append(f"freq_py_{orient}={est.freq_px[0]:.6f}")
            out.append(f"freq_px_{orient}={est.freq_px[1]:.6f}")
            out.append(f"phase_rad_{orient}={est.phase_rad:.6f}")
            out.append(f"modulation_{orient}={est.modulation_est:.6f}")
            out.append(f"correlation_peak_{orient}={est.correlation_peak:.6f}")
        for orient, cond in sorted(self.mixing_condition.items()):
            out.append(f"mixing_condition_{orient}={cond:.6e}")
        for stage, dt in self.timings_s.items():
            out.append(f"time_{stage}_s={dt:.4f}")
        return out


def mixing_matrix(phases, modulation: float) -> np.ndarray:
    """3x3 matrix mapping (0th, +1st, -1st) bands to the three frame spectra."""
    phases = np.asarray(phases, dtype=np.float64)
    if phases.shape != (3,):
        raise InvalidInputError(f"need exactly 3 phases, got {phases.shape}")
    half = 0.5 * modulation
    return np.stack(
        [
            np.ones(3, dtype=np.complex128),
            half * np.exp(1j * phases),
            half * np.exp(-1j * phases),
        ],
        axis=1,
    )


def separate_components(
    frames, phases, modulation: float, orientation: str = "X"
) -> SeparatedComponents:
    """Per-bin unmix of three same-orientation frames into information bands.

    Exact for noiseless data when ``modulation`` matches the acquisition;
    with any other assumed depth the +/-1 bands pick up a constant complex
    factor that the pattern estimate later measures and removes.
    """
    frames = list(frames)
    if len(frames) != 3:
        raise InvalidInputError(f"need exactly 3 frames, got {len(frames)}")
    shape = (frames[0].height, frames[0].width)
    pixel = frames[0].pixel_size_nm
    for f in frames[1:]:
        if (f.height, f.width) != shape or f.pixel_size_nm != pixel:
            raise GeometryError("frames must share dimensions and pixel size")
    matrix = mixing_matrix(phases, modulation)
    cond = np.linalg.cond(matrix)
    if not np.isfinite(cond) or cond > 1e8:
        raise DegeneratePhasesError(
            f"phase set {np.asarray(phases).tolist()} gives mixing condition {cond:.3e}"
        )
    inv = np.linalg.inv(matrix)
    raw = np.stack([f.data for f in frames])
    spectra = np.fft.fftshift(
        scipy.fft.fft2(raw, norm="ortho", workers=-1), axes=(-2, -1)
    )
    bands = np.einsum("ab,bij->aij", inv, spectra)
    return SeparatedComponents(
        c0=Spectrum2D(bands[0], pixel),
        cplus=Spectrum2D(bands[1], pixel),
        cminus=Spectrum2D(bands[2], pixel),
        orientation=orientation,
        modulation=modulation,
    )


def _shift_real_space(a: np.ndarray, shift_bins) -> np.ndarray:
    """Spectrum (DC-centered) of a real-space array translated in frequency."""
    ny, nx = a.shape
    sy, sx = shift_bins
    ramp_y = np.exp(2j * np.pi * sy * np.arange(ny) / ny)
    ramp_x = np.exp(2j * np.pi * sx * np.arange(nx) / nx)
    return np.fft.fftshift(scipy.fft.fft2(a * ramp_y[:, None] * ramp_x[None, :], workers=-1))


def _shift_spectrum(data: np.ndarray, shift_bins) -> np.ndarray:
    """Translate a DC-centered spectrum: result(k) = data(k - shift).

    Fractional shifts sample the trigonometric interpolant (real-space
    phase ramp); integer shifts reduce to a circular roll.
    """
    a = scipy.fft.ifft2(np.fft.ifftshift(data), workers=-1)
    return _shift_real_space(a, shift_bins)


def _shifted_grid_lookup(grid: np.ndarray, shift_bins) -> np.ndarray:
    """Sample ``grid`` at ``index - shift`` by bilinear interpolation.

    Points falling outside the grid read as 0 (the value is unknown beyond
    the sampled band, and callers mask such bins out anyway).
    """
    iy, ix = np.indices(grid.shape, dtype=np.float64)
    return map_coordinates(
        grid, [iy - shift_bins[0], ix - shift_bins[1]], order=1, mode="constant", cval=0.0
    )


def _zoomed_correlation(prod: np.ndarray, center, span: float, steps: int):
    """Evaluate the circular cross-correlation on a fine shift grid.

    ``prod`` is the pointwise real-space product conj(band0) * band1 in
    natural (unshifted) order; the correlation at shift q is its DFT sampled
    at arbitrary real q via matrix-multiply exponentials.
    """
    ny, nx = prod.shape
    qy = center[0] + np.linspace(-span, span, steps)
    qx = center[1] + np.linspace(-span, span, steps)
    ey = np.exp(-2j * np.pi * np.outer(qy, np.arange(ny)) / ny)
    ex = np.exp(-2j * np.pi * np.outer(np.arange(nx), qx) / nx)
    return qy, qx, np.abs(ey @ prod @ ex)


def estimate_pattern(
    comp: SeparatedComponents,
    otf: Spectrum2D,
    params: ReconParams,
    nominal_freq_px=None,
) -> PatternEstimate:
    """Measure the pattern frequency (sub-pixel), global phase, and depth.

    The integer frequency comes from the circular cross-correlation of the
    0th band with the +1st band, searched in a window of
    ``search_halfwidth_px`` around the initial guess (the nominal hint, or
    the brightest off-DC peak of the +1st band), then refined on zoomed
    correlation grids.  Phase and depth come from the least-squares complex
    factor between the translated 0th band and the +1st band, fitted under
    two band models (per-bin OTF-weighted overlap for structured fields,
    scalar carrier transfer for structureless ones); the better-correlating
    model wins.
    """
    c0 = comp.c0.data
    cp = comp.cplus.data
    h, w = c0.shape
    if otf.data.shape != (h, w):
        raise GeometryError("OTF grid does not match component geometry")
    cy, cx = h // 2, w // 2

    mag = np.abs(cp)
    iy, ix = np.indices((h, w))
    dist = np.hypot(iy - cy, ix - cx)
    off_dc = dist > 2.0 if params.notch_suppress_dc else dist > 0.0
    peak = float(mag[off_dc].max(initial=0.0))
    floor = float(np.median(mag[off_dc])) if np.any(off_dc) else 0.0
    if peak <= 1e-9 * float(np.abs(c0).max()) or peak < 3.0 * floor:
        raise PatternNotFoundError(
            f"no sideband above noise floor (peak {peak:.3e}, floor {floor:.3e})"
        )

    if nominal_freq_px is None:
        flat = np.where(off_dc, mag, 0.0)
        gy, gx = np.unravel_index(int(np.argmax(flat)), mag.shape)
        guess = (gy - cy, gx - cx)
    else:
        guess = (int(round(nominal_freq_px[0])), int(round(nominal_freq_px[1])))

    c0r = scipy.fft.ifft2(np.fft.ifftshift(c0), workers=-1)
    cpr = scipy.fft.ifft2(np.fft.ifftshift(cp), workers=-1)
    prod = np.conj(c0r) * cpr
    corr = np.abs(np.fft.fftshift(scipy.fft.fft2(prod, workers=-1)))

    hw = params.search_halfwidth_px
    qy = guess[0] + np.arange(-hw, hw + 1)
    qx = guess[1] + np.arange(-hw, hw + 1)
    window = corr[np.ix_((cy + qy) % h, (cx + qx) % w)]
    wy, wx = np.unravel_index(int(np.argmax(window)), window.shape)
    q_int = (int(qy[wy]), int(qx[wx]))

    # sub-pixel init: zoom the raw correlation once to a 0.1-bin grid; the
    # model-consistent ramp fit below does the fine refinement
    freq = (float(q_int[0]), float(q_int[1]))
    zy, zx, zoomed = _zoomed_correlation(prod, freq, 1.0, 21)
    by, bx = np.unravel_index(int(np.argmax(zoomed)), zoomed.shape)
    step = zy[1] - zy[0]
    offy = _parabolic_offset(zoomed[by - 1, bx], zoomed[by, bx], zoomed[by + 1, bx]) if 0 < by < 20 else 0.0
    offx = _parabolic_offset(zoomed[by, bx - 1], zoomed[by, bx], zoomed[by, bx + 1]) if 0 < bx < 20 else 0.0
    freq = (float(zy[by] + offy * step), float(zx[bx] + offx * step))

    pixel = comp.c0.pixel_size_nm
    h_grid = otf.data.real
    # the shifted-OTF weights are insensitive to the sub-0.5-bin refinement
    # below, so evaluate them once at the initial frequency
    h_shifted = _shifted_grid_lookup(h_grid, freq)
    overlap = (h_grid > params.overlap_threshold) & (h_shifted > params.overlap_threshold)
    if not np.any(overlap):
        raise PatternNotFoundError("OTF overlap region is empty at the measured frequency")

    def fit(basis, data):
        denom = float(np.sum(np.abs(basis) ** 2))
        energy = float(np.sum(np.abs(data) ** 2))
        if denom == 0 or energy == 0:
            return 0.0 + 0.0j, 0.0
        inner = complex(np.sum(np.conj(basis) * data))
        return inner / denom, abs(inner) / np.sqrt(denom * energy)

    # model A — structured field: per-bin relation data = alpha * basis on
    # the OTF-weighted overlap, with ramp-fit frequency refinement (the
    # conj(basis)*data product is a non-negatively weighted phase ramp whose
    # zoomed DFT peaks exactly at the residual frequency error)
    freq_a = freq
    alpha_a = 0.0 + 0.0j
    quality_a = 0.0
    for _ in range(3):
        c0_shifted = _shift_real_space(c0r, freq_a)
        basis = np.where(overlap, c0_shifted * h_grid, 0.0)
        data = np.where(overlap, cp * h_shifted, 0.0)
        alpha_a, quality_a = fit(basis, data)
        ramp = np.conj(
            scipy.fft.ifft2(np.fft.ifftshift(basis), workers=-1)
        ) * scipy.fft.ifft2(np.fft.ifftshift(data), workers=-1)
        zy, zx, zoomed = _zoomed_correlation(ramp, (0.0, 0.0), 0.2, 21)
        if zoomed.max() == 0.0:
            break
        by, bx = np.unravel_index(int(np.argmax(zoomed)), zoomed.shape)
        step = zy[1] - zy[0]
        offy = _parabolic_offset(zoomed[by - 1, bx], zoomed[by, bx], zoomed[by + 1, bx]) if 0 < by < 20 else 0.0
        offx = _parabolic_offset(zoomed[by, bx - 1], zoomed[by, bx], zoomed[by, bx + 1]) if 0 < bx < 20 else 0.0
        delta = (zy[by] + offy * step, zx[bx] + offx * step)
        freq_a = (float(freq_a[0] + delta[0]), float(freq_a[1] + delta[1]))
        if np.hypot(*delta) < 1e-3:
            # basis/data differ from the converged freq by < 1e-3 bins;
            # the alpha fit is insensitive at that scale, reuse it
            break

    # model B — structureless field: the sideband is the 0th band's own
    # (window) kernel translated to the carrier and scaled by the scalar
    # transfer there; no per-bin OTF weighting applies
    h_at_p = float(
        map_coordinates(
            h_grid,
            [[cy + ((freq[0] + h / 2) % h - h / 2)], [cx + ((freq[1] + w / 2) % w - w / 2)]],
            order=1, mode="nearest",
        )[0]
    )
    alpha_b = 0.0 + 0.0j
    quality_b = 0.0
    if h_at_p > 1e-6:
        raw_b, quality_b = fit(_shift_real_space(c0r, freq) * h_at_p, cp)
        alpha_b = raw_b

    if quality_a >= quality_b:
        freq, alpha, quality = freq_a, alpha_a, quality_a
    else:
        freq, alpha, quality = freq, alpha_b, quality_b
    if quality == 0.0:
        raise PatternNotFoundError("no band model fits the measured sideband")
    p_cyc = (freq[0] / (h * pixel), freq[1] / (w * pixel))
    # report the phase at the field origin; samples sit at half-pixel centers
    phase = np.angle(alpha) - np.pi * pixel * (p_cyc[0] + p_cyc[1])
    phase = float((phase + np.pi) % (2.0 * np.pi) - np.pi)
    modulation_est = float(np.clip(abs(alpha) * comp.modulation, 1e-12, 1.5))
    return PatternEstimate(
        freq_px=(float(freq[0]), float(freq[1])),
        phase_rad=phase,
        modulation_est=modulation_est,
        correlation_peak=float(quality),
    )


def _parabolic_offset(left, center, right):
    denom = left - 2.0 * center + right
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -1.0, 1.0))


def _mirror(arr: np.ndarray) -> np.ndarray:
    """Map bin k to bin -k (circular, DC-centered storage)."""
    return np.roll(arr[::-1, ::-1], (1, 1), axis=(0, 1))


def _conj_mirror(arr: np.ndarray) -> np.ndarray:
    return np.conj(_mirror(arr))


def _sample_phase(est: PatternEstimate, height, width, pixel) -> float:
    """Pattern phase in the DFT sample frame (undo the field-origin offset)."""
    p_cyc = est.freq_px[0] / (height * pixel) + est.freq_px[1] / (width * pixel)
    return est.phase_rad + np.pi * pixel * p_cyc


def assemble(
    comp_x: SeparatedComponents,
    comp_y: SeparatedComponents,
    est_x: PatternEstimate,
    est_y: PatternEstimate,
    otf: Spectrum2D,
    cfg: OpticalConfig,
    params: ReconParams,
) -> Image2D:
    """Generalized Wiener recombination of the five distinct bands on a
    2x zero-padded grid, cosine-apodized to the extended cutoff."""
    h, w = comp_x.c0.data.shape
    pixel = comp_x.c0.pixel_size_nm
    if comp_y.c0.data.shape != (h, w) or comp_y.c0.pixel_size_nm != pixel:
        raise GeometryError("orientation components disagree in geometry")
    if otf.data.shape != (h, w):
        raise GeometryError("OTF grid does not match component geometry")
    for est in (est_x, est_y):
        if (
            abs(est.freq_px[0]) > h * cfg.upsample_factor / 2
            or abs(est.freq_px[1]) > w * cfg.upsample_factor / 2
        ):
            raise GeometryError(
                f"pattern frequency {est.freq_px} exceeds the padded-grid Nyquist"
            )

    pad = cfg.upsample_factor
    hh, ww = pad * h, pad * w
    fine_pixel = pixel / pad
    fy, fx = frequency_grid(hh, ww, fine_pixel)
    radius = np.hypot(fy, fx)

    def camera_weight(dy_cyc, dx_cyc):
        # pupil OTF times the (separable) pixel-binning transfer, both
        # evaluated at the band's original camera-space frequency
        pupil = otf_radial(cfg, np.hypot(fy + dy_cyc, fx + dx_cyc))
        by = pixel_binning_transfer(fy + dy_cyc, pixel, params.binning_subsamples)
        bx = pixel_binning_transfer(fx + dx_cyc, pixel, params.binning_subsamples)
        return pupil * by * bx

    num = np.zeros((hh, ww), dtype=np.complex128)
    den = np.full((hh, ww), params.wiener_w**2, dtype=np.float64)

    h0 = camera_weight(0.0, 0.0)
    c0_avg = 0.5 * (comp_x.c0.data + comp_y.c0.data)
    num += h0 * pad_spectrum_centered(c0_avg, pad)
    den += h0 * h0

    for comp, est in ((comp_x, est_x), (comp_y, est_y)):
        alpha = (est.modulation_est / comp.modulation) * np.exp(
            1j * _sample_phase(est, h, w, pixel)
        )
        p_cyc = (
            est.freq_px[0] / (h * pixel),
            est.freq_px[1] / (w * pixel),
        )
        padded = pad_spectrum_centered(comp.cplus.data / alpha, pad)
        shifted = _shift_spectrum(padded, (-est.freq_px[0], -est.freq_px[1]))
        h_band = camera_weight(p_cyc[0], p_cyc[1])
        contribution = h_band * shifted
        num += contribution
        den += h_band * h_band
        # the -1 band of real frames is the exact conjugate mirror of the
        # +1 band, so its weighted contribution is the conjugate mirror too
        num += _conj_mirror(contribution)
        den += _mirror(h_band * h_band)

    spectrum = num / den
    # the unpaired Nyquist row/col of an even grid has no mirror partner, so
    # shifted-band weights there cannot stay conjugate-consistent; drop it
    if hh % 2 == 0:
        spectrum[0, :] = 0.0
    if ww % 2 == 0:
        spectrum[:, 0] = 0.0

    kc = abbe_cutoff(cfg)
    p_mag = 0.5 * (np.hypot(*est_x.freq_px) / (h * pixel) + np.hypot(*est_y.freq_px) / (w * pixel))
    k_apo = params.apod_cutoff_fraction * (kc + p_mag)
    apod = np.where(radius <= k_apo, np.cos(0.5 * np.pi * radius / k_apo), 0.0)
    spectrum *= apod

    # zero-padding leaves samples at the camera positions (s/pad + 0.5)*pixel;
    # recenter by (pad-1)/2 output pixels so pixel (i, j) is centered at
    # ((j + 0.5) * fine_pixel, (i + 0.5) * fine_pixel) like every other image
    if pad > 1:
        ky = np.arange(hh) - hh // 2
        kx = np.arange(ww) - ww // 2
        shift = (pad - 1) / 2.0
        spectrum *= np.exp(-2j * np.pi * shift * ky / hh)[:, None]
        spectrum *= np.exp(-2j * np.pi * shift * kx / ww)[None, :]
        if hh % 2 == 0:
            spectrum[0, :] = 0.0
        if ww % 2 == 0:
            spectrum[:, 0] = 0.0

    sr = scipy.fft.ifft2(np.fft.ifftshift(spectrum), norm="ortho", workers=-1) * pad
    return Image2D(_real_from_complex(sr, "assemble"), fine_pixel)


def reconstruct6(stack: SimStack, cfg: OpticalConfig, params: ReconParams | None = None):
    """Full reconstruction of a six-frame stack.

    Returns ``(sr_image, report)``; the SR image sits on the half-pixel grid
    (2x the camera sampling).  Stage failures propagate with the stage name
    prefixed to the message.
    """
    if params is None:
        params = ReconParams()
    report_est = {}
    report_cond = {}
    timings = {}

    def run(stage, fn):
        t0 = time.perf_counter()
        try:
            result = fn()
        except Exception as exc:
            exc.args = (f"{stage}: {exc}",) + exc.args[1:]
            raise
        timings[stage] = time.perf_counter() - t0
        return result

    frames = run(
        "apodize",
        lambda: [apodize_edges(s, params.edge_apod_fraction) for s in stack.slices],
    )

    def separate_all():
        comps = {}
        for orient in ("X", "Y"):
            members = sorted(
                (i for i, (o, _) in enumerate(stack.tags) if o == orient),
                key=lambda i: stack.tags[i][1],
            )
            phases = [stack.tags[i][1] for i in members]
            comps[orient] = separate_components(
                [frames[i] for i in members], phases, modulation=1.0, orientation=orient
            )
            report_cond[orient] = float(np.linalg.cond(mixing_matrix(phases, 1.0)))
        return comps

    comps = run("separate", separate_all)

    camera = stack.slices[0]
    pupil = otf_grid(
        cfg, camera.width, camera.height, camera.pixel_size_nm, allow_truncation=True
    )
    fy, fx = frequency_grid(camera.height, camera.width, camera.pixel_size_nm)
    binning = pixel_binning_transfer(
        fy, camera.pixel_size_nm, params.binning_subsamples
    ) * pixel_binning_transfer(fx, camera.pixel_size_nm, params.binning_subsamples)
    otf_cam = Spectrum2D(pupil.data.real * binning, camera.pixel_size_nm)

    def estimate_all():
        ests = {}
        kc = abbe_cutoff(cfg)
        for orient in ("X", "Y"):
            nominal = None
            if params.nominal_freq_fraction is not None:
                f_nom = params.nominal_freq_fraction * kc
                if orient == "X":
                    nominal = (0.0, f_nom * camera.width * camera.pixel_size_nm)
                else:
                    nominal = (f_nom * camera.height * camera.pixel_size_nm, 0.0)
            ests[orient] = estimate_pattern(comps[orient], otf_cam, params, nominal)
        return ests

    ests = run("estimate", estimate_all)
    report_est.update(ests)

    sr = run(
        "assemble",
        lambda: assemble(comps["X"], comps["Y"], ests["X"], ests["Y"], otf_cam, cfg, params),
    )
    report = ReconReport(estimates=report_est, mixing_condition=report_cond, timings_s=timings)
    return sr, report
