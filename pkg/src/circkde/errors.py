"""Exception types shared across the package."""


class ToleranceError(RuntimeError):
    """A numerical routine could not meet its requested tolerance.

    The best available estimate is attached as ``estimate`` and the
    estimated error (when known) as ``error``.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class BracketingError(ValueError):
    """A root finder was called without a sign change over the bracket."""

    def __init__(self, message, g_lo=None, g_hi=None):
        super().__init__(message)
        self.g_lo = g_lo
        self.g_hi = g_hi


class UnsupportedKernelError(ValueError):
    """The requested quantity is not defined for this kernel family."""


class FitError(RuntimeError):
    """Mixture fitting failed on every restart."""
