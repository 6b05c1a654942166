"""Exception hierarchy shared by the package."""


class DelayCertError(Exception):
    """Base class for every error raised by delaycert."""


class DomainError(DelayCertError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class DimensionError(DelayCertError, ValueError):
    """Matrix or sample shapes are inconsistent."""


class ConfigurationError(DelayCertError, ValueError):
    """A grid, horizon or scenario is set up inconsistently."""


class NumericalError(DelayCertError, ArithmeticError):
    """A linear solve or factorization broke down."""


class CertificationError(DelayCertError):
    """The robustness certificate cannot be formed (e.g. non-Hurwitz loop)."""


class DivergenceError(DelayCertError):
    """A simulation left the finite range of the state."""

    def __init__(self, time, norm):
        self.time = float(time)
        self.norm = float(norm)
        super().__init__(f"state diverged at t={self.time:.6g} (|x|={self.norm:.3g})")
