"""Exception and warning types shared across the package."""


class SkewSwitchError(Exception):
    """Base class for all errors raised by this package."""


class NonStochasticRowError(SkewSwitchError, ValueError):
    """A transition-matrix row does not sum to 1 within tolerance."""

    def __init__(self, row: int, row_sum: float):
        self.row = row
        self.row_sum = row_sum
        super().__init__(f"row {row} sums to {row_sum!r}, expected 1 within 1e-12")


class NegativeEntryError(SkewSwitchError, ValueError):
    """A transition-matrix entry is negative."""

    def __init__(self, i: int, j: int, value: float):
        self.i = i
        self.j = j
        self.value = value
        super().__init__(f"entry ({i}, {j}) is negative: {value!r}")


class ReducibleChainError(SkewSwitchError):
    """Operation requires an irreducible chain."""


class PeriodicChainError(SkewSwitchError):
    """Operation requires an aperiodic chain."""

    def __init__(self, period: int):
        self.period = period
        super().__init__(f"chain is periodic with period {period}")


class InvalidInitError(SkewSwitchError, ValueError):
    """Initial regime index outside {1..K}."""


class RegimeOutOfRangeError(SkewSwitchError, ValueError):
    """Regime index outside {1..K}."""


class FourthMomentUndefinedError(SkewSwitchError):
    """The innovation family has no finite fourth moment."""


class ZeroXError(SkewSwitchError, ValueError):
    """Drift ratio is undefined at x = 0."""


class GridTooSmallError(SkewSwitchError, ValueError):
    """Magnitude grid too coarse or too narrow for a tail estimate."""


class NonFiniteValueError(SkewSwitchError, ArithmeticError):
    """A simulated value overflowed to inf or nan."""


class QuadratureNonConvergenceError(SkewSwitchError):
    """Adaptive quadrature failed to meet the requested tolerance."""

    def __init__(self, estimate: float, error_bound: float, message: str = ""):
        self.estimate = estimate
        self.error_bound = error_bound
        detail = f" ({message})" if message else ""
        super().__init__(
            f"quadrature did not converge: estimate={estimate!r}, "
            f"error bound={error_bound!r}{detail}"
        )


class NoDriftRegionError(SkewSwitchError):
    """No grid radius beyond which the drift inequality holds."""


class InsufficientReplicationsError(SkewSwitchError):
    """Monte Carlo noise floor swamps every usable lag."""


class DegeneratePathError(SkewSwitchError, ValueError):
    """Path has (near-)zero sample variance."""


class TooFewBatchesError(SkewSwitchError, ValueError):
    """Batch-means estimate needs at least 20 batches of length >= 1."""


class ConfigError(SkewSwitchError, ValueError):
    """Run configuration failed to parse or validate; carries field location."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class DegenerateTargetWarning(UserWarning):
    """Target interval has zero length; hitting probability is trivially 0."""
