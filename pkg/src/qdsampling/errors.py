"""Exception hierarchy shared across the package."""


class QDSamplingError(Exception):
    """Base class for all package errors."""


class ConfigError(QDSamplingError, ValueError):
    """An invalid parameter or configuration value.

    ``key`` names the offending field (dotted path for config files).
    """

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class IntegrationError(QDSamplingError, RuntimeError):
    """The Bloch integrator could not reach the requested tolerance."""

    def __init__(self, message, last_time=None):
        self.last_time = last_time
        super().__init__(message)


class FitError(QDSamplingError, RuntimeError):
    """A fit could not be carried out."""


class NoPeakError(FitError):
    """The scan has no resolvable resonance peak."""


class RankDeficiencyError(FitError):
    """The Jacobian at the optimum is singular; parameters are not identifiable."""


class EmptyReconstructionError(QDSamplingError, ValueError):
    """No usable fit remained to build a sampled waveform from."""
