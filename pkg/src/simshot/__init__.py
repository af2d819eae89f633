"""simshot: structured-illumination imaging simulator, reconstructor, metrology."""

from .errors import (
    ConfigError,
    DegeneratePhasesError,
    FormatError,
    GeometryError,
    InvalidInputError,
    NumericConsistencyError,
    PatternNotFoundError,
    ProfileDegenerateError,
    ResolutionIndeterminateError,
    SamplingError,
    SimshotError,
    ValidationError,
)
from .imagecore import (
    Image2D,
    Spectrum2D,
    apodize_edges,
    export_pgm16,
    fft2,
    ifft2,
    read_img1,
    upsample_fourier,
    write_img1,
)
from .optics import OpticalConfig, abbe_cutoff, otf, psf, rayleigh_resolution
from .phantom import PhantomSpec, generate_phantom
from .illumination import (
    AcquisitionProtocol,
    IlluminationPattern,
    default_protocol,
    pattern_image,
)
from .forward import (
    NoiseModel,
    SimStack,
    acquire_stack,
    load_stack,
    save_stack,
    sim_raw,
    widefield,
)
from .simrecon import (
    PatternEstimate,
    ReconParams,
    SeparatedComponents,
    assemble,
    estimate_pattern,
    reconstruct6,
    separate_components,
)
from .metrology import (
    DecorrelationResult,
    FwhmResult,
    analyze_resolution,
    decorrelation_curve,
    decorrelation_value,
    fwhm,
    normalize_spectrum,
    resolution_from_kcmax,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
