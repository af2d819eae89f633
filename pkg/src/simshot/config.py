"""Flat key=value run configuration with a typed key registry.

A config file holds one ``key = value`` assignment per line (``#`` comments
and blank lines allowed).  Unknown keys are errors.  ``render`` writes every
key in registry order, so parse -> render -> parse is a fixed point.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .forward import NoiseModel
from .optics import OpticalConfig
from .phantom import PhantomSpec
from .simrecon import ReconParams


def _parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_opt_float(text):
    if text.strip().lower() in ("none", "off"):
        return None
    return float(text)


def _render_value(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class _Key:
    name: str
    parse: callable
    default: object
    doc: str


_REGISTRY = [
    _Key("optics.wavelength_nm", float, 550.0, "fluorescence central wavelength"),
    _Key("optics.na", float, 0.8, "objective numerical aperture"),
    _Key("optics.pixel_size_nm", float, 219.5, "camera pixel size at the sample"),
    _Key("optics.upsample_factor", int, 2, "SR zero-padding factor of the reconstruction"),
    _Key("sim.fine_divisor", int, 4, "simulation fine-grid pixels per camera pixel"),
    _Key("phantom.rows", int, 48, "lattice rows"),
    _Key("phantom.cols", int, 48, "lattice columns"),
    _Key("phantom.pitch_nm", float, 480.0, "lattice pitch"),
    _Key("phantom.dnb_diameter_nm", float, 220.0, "spot diameter (profile first zero)"),
    _Key("phantom.occupancy", float, 0.9, "probability a lattice site is occupied"),
    _Key("phantom.intensity_min", float, 0.5, "lower bound of per-spot amplitude"),
    _Key("phantom.intensity_max", float, 1.0, "upper bound of per-spot amplitude"),
    _Key("phantom.jitter_nm", float, 0.0, "uniform per-site positional jitter half-range"),
    _Key("protocol.freq_fraction", float, 0.8, "pattern frequency / incoherent cutoff"),
    _Key("protocol.modulation", float, 0.9, "pattern modulation depth"),
    _Key("noise.photons_at_unit_intensity", float, 10000.0, "expected photons at truth 1.0 (0 = off)"),
    _Key("noise.read_noise_sd", float, 10.0, "Gaussian read noise SD in photons (0 = off)"),
    _Key("recon.wiener_w", float, 0.05, "Wiener regularizer"),
    _Key("recon.apod_cutoff_fraction", float, 1.0, "final apodization cutoff / extended cutoff"),
    _Key("recon.notch_suppress_dc", _parse_bool, True, "suppress DC during pattern search"),
    _Key("recon.search_halfwidth_px", int, 3, "pattern search window half-width (bins)"),
    _Key("recon.nominal_freq_fraction", _parse_opt_float, 0.8, "nominal pattern frequency hint (fraction of cutoff; none = off)"),
    _Key("recon.edge_apod_fraction", float, 0.1, "raw-frame edge apodization border fraction"),
    _Key("recon.overlap_threshold", float, 0.15, "OTF level bounding the band-overlap fit region"),
    _Key("recon.binning_subsamples", int, 4, "camera pixel-transfer model: subsamples per pixel"),
    _Key("metrology.reference_pixel_nm", float, 219.5, "reference camera pixel for normalized radii"),
    _Key("metrology.n_radii", int, 64, "radii per decorrelation curve"),
    _Key("metrology.n_filters", int, 10, "number of Gaussian high-pass curves"),
    _Key("metrology.sigma_min", float, 0.05, "smallest high-pass sigma (normalized)"),
    _Key("metrology.sigma_max", float, 1.0, "largest high-pass sigma (normalized)"),
    _Key("metrology.min_prominence", float, 0.01, "minimum prominence of a qualifying maximum"),
    _Key("metrology.min_level", float, 0.05, "minimum value of a qualifying maximum"),
    _Key("metrology.border_fraction", float, 0.1, "edge apodization before decorrelation"),
    _Key("image.width", int, 128, "camera frame width in pixels"),
    _Key("image.height", int, 128, "camera frame height in pixels"),
    _Key("dataset.n_groups", int, 200, "number of acquisition groups to generate"),
    _Key("dataset.split_fraction", float, 0.8, "fraction of groups assigned to train"),
    _Key("output.dir", str, "out", "output directory (CLI --out overrides)"),
]

_BY_NAME = {key.name: key for key in _REGISTRY}


class RunConfig:
    """Typed view over the flat key=value configuration."""

    def __init__(self, values=None):
        self._values = {key.name: key.default for key in _REGISTRY}
        if values:
            for name, value in values.items():
                self.set(name, value)

    def __getitem__(self, name):
        try:
            return self._values[name]
        except KeyError:
            raise ConfigError(f"unknown config key {name!r}") from None

    def set(self, name, text_or_value):
        key = _BY_NAME.get(name)
        if key is None:
            raise ConfigError(f"unknown config key {name!r}")
        if isinstance(text_or_value, str):
            try:
                value = key.parse(text_or_value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {name!r}: {exc}") from None
        else:
            value = text_or_value
        self._values[name] = value

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cfg = cls()
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
            name, value = (part.strip() for part in stripped.split("=", 1))
            cfg.set(name, value)
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def render(self) -> str:
        return "\n".join(
            f"{key.name} = {_render_value(self._values[key.name])}" for key in _REGISTRY
        ) + "\n"

    @staticmethod
    def describe_keys() -> str:
        return "\n".join(
            f"  {key.name:38s} (default {_render_value(key.default)}) {key.doc}"
            for key in _REGISTRY
        )

    # typed sub-configs ------------------------------------------------

    def optical(self) -> OpticalConfig:
        return OpticalConfig(
            wavelength_nm=self["optics.wavelength_nm"],
            na=self["optics.na"],
            pixel_size_nm=self["optics.pixel_size_nm"],
            upsample_factor=self["optics.upsample_factor"],
        )

    def phantom(self, seed: int) -> PhantomSpec:
        return PhantomSpec(
            rows=self["phantom.rows"],
            cols=self["phantom.cols"],
            pitch_nm=self["phantom.pitch_nm"],
            dnb_diameter_nm=self["phantom.dnb_diameter_nm"],
            occupancy=self["phantom.occupancy"],
            intensity_min=self["phantom.intensity_min"],
            intensity_max=self["phantom.intensity_max"],
            jitter_nm=self["phantom.jitter_nm"],
            seed=seed,
        )

    def noise(self, seed: int) -> NoiseModel:
        return NoiseModel(
            photons_at_unit_intensity=self["noise.photons_at_unit_intensity"],
            read_noise_sd=self["noise.read_noise_sd"],
            seed=seed,
        )

    def recon(self) -> ReconParams:
        return ReconParams(
            wiener_w=self["recon.wiener_w"],
            apod_cutoff_fraction=self["recon.apod_cutoff_fraction"],
            notch_suppress_dc=self["recon.notch_suppress_dc"],
            search_halfwidth_px=self["recon.search_halfwidth_px"],
            nominal_freq_fraction=self["recon.nominal_freq_fraction"],
            edge_apod_fraction=self["recon.edge_apod_fraction"],
            overlap_threshold=self["recon.overlap_threshold"],
            binning_subsamples=self["recon.binning_subsamples"],
        )

    def metrology_kwargs(self) -> dict:
        return dict(
            reference_pixel_nm=self["metrology.reference_pixel_nm"],
            n_radii=self["metrology.n_radii"],
            n_filters=self["metrology.n_filters"],
            sigma_min=self["metrology.sigma_min"],
            sigma_max=self["metrology.sigma_max"],
            min_prominence=self["metrology.min_prominence"],
            min_level=self["metrology.min_level"],
            border_fraction=self["metrology.border_fraction"],
        )
