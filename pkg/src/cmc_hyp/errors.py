"""Exception types shared across the package."""


class NumericsError(RuntimeError):
    """A computed quantity left its analytically guaranteed domain by more
    than roundoff, or an algorithm failed to reach its tolerance."""


class AmbiguousKernelError(NumericsError):
    """Singular values show no clean gap; the numerical kernel is undecidable."""

    def __init__(self, sigma_low, sigma_high, gap_factor):
        self.sigma_low = sigma_low
        self.sigma_high = sigma_high
        self.gap_factor = gap_factor
        super().__init__(
            f"no spectral gap >= {gap_factor:g}: straddling singular values "
            f"{sigma_low:.3e} and {sigma_high:.3e}"
        )


class ConvergenceError(NumericsError):
    """An iterative solver stopped without meeting its residual target."""


class NoCriticalPointError(RuntimeError):
    """No critical point of the reduced function was found in the search box."""
