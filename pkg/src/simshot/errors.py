"""Exception taxonomy shared by all engine modules.

Every error carries an ``exit_code`` used by the CLI: 2 for configuration
problems, 3 for data/file problems, 4 for numeric or analysis failures.
"""


class SimshotError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class InvalidInputError(SimshotError):
    """An argument violates a documented precondition."""

    exit_code = 2


class ConfigError(SimshotError):
    """Configuration file or key/value override is invalid."""

    exit_code = 2


class SamplingError(SimshotError):
    """A grid is too coarse to represent the requested optics or phantom."""

    exit_code = 2


class FormatError(SimshotError):
    """A file does not conform to its binary format.

    ``offset`` is the byte offset at which the problem was detected.
    """

    exit_code = 3

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class GeometryError(SimshotError):
    """Image/grid geometries are inconsistent (dimensions, binning, lattice)."""

    exit_code = 3


class ValidationError(SimshotError):
    """A composite object (stack, dataset, role map) violates its invariants."""

    exit_code = 3


class NumericConsistencyError(SimshotError):
    """A numeric self-check failed (e.g. non-negligible imaginary residue)."""

    exit_code = 4


class DegeneratePhasesError(SimshotError):
    """Phase set makes the band mixing matrix numerically singular."""

    exit_code = 4


class PatternNotFoundError(SimshotError):
    """No illumination sideband rises above the noise floor."""

    exit_code = 4


class ResolutionIndeterminateError(SimshotError):
    """Decorrelation analysis found no qualifying local maxima."""

    exit_code = 4


class ProfileDegenerateError(SimshotError):
    """A line profile has no peak or no half-maximum crossings."""

    exit_code = 4
