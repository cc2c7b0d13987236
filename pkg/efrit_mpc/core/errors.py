"""Exception types shared by the efrit-mpc modules."""


class EfritMpcError(RuntimeError):
    """Base class for all toolkit errors."""


class ConfigError(EfritMpcError, ValueError):
    """A configuration file or override is missing a key or holds a bad value."""


class NumericError(EfritMpcError):
    """Base class for numerical failures (CLI exit code 3)."""


class ZeroLeadingDenominator(NumericError, ValueError):
    """A rational filter has a zero constant denominator term."""


class NonFinite(NumericError):
    """A signal contains NaN or infinite samples."""


class DenominatorZero(NumericError):
    """A frequency response was evaluated on a pole."""


class LengthMismatch(NumericError, ValueError):
    """Two signals combined together differ in length or sampling time."""


class NonInvertibleController(NumericError):
    """The PID controller has a zero leading numerator coefficient."""


class NonPositiveTimeConstant(NumericError, ValueError):
    """A pseudo-linearization model was requested with tc <= 0."""


class NonConvex(NumericError):
    """A condensed QP Hessian is not positive definite."""


class InfeasibleConstraints(NumericError):
    """The input box cannot be met for the current estimator state."""


class Divergence(NumericError):
    """A plant simulation left its admissible range."""


class NoConvergence(NumericError):
    """A frequency-response measurement found no output at the drive frequency."""
