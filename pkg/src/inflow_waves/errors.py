"""Exception types shared across the package.

Every failure mode that a caller is expected to branch on gets its own
class.  The CLI maps these onto exit codes: configuration problems exit
with 2, numerical failures with 3.
"""


class InflowWavesError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(InflowWavesError):
    """A scenario file is malformed, has unknown keys, or fails validation."""


class TransitionalState(InflowWavesError):
    """The state sits exactly on a sonic boundary, where no boundary-condition
    case is defined."""


class OutOfDomain(InflowWavesError):
    """An argument lies outside the domain of the layer ODE coefficients."""


class NoBracket(InflowWavesError):
    """Bisection was requested on an interval where the target function does
    not change sign.  Signals a misclassified regime upstream."""


class InadmissibleBoundaryValue(InflowWavesError):
    """The boundary temperature ratio falls outside the admissible window of
    the layer existence analysis."""


class Divergence(InflowWavesError):
    """The layer ODE moved away from its far-field fixed point instead of
    converging, which marks the boundary value as inadmissible."""


class StepUnderflow(InflowWavesError):
    """Adaptive stepping shrank the step below a usable size."""


class InsufficientTail(InflowWavesError):
    """Too few profile samples remain in the decaying tail to fit a rate."""


class InvalidWaveOrdering(InflowWavesError):
    """The requested intermediate volume does not sit on the expanding side
    of the fan curve, so the connected state would violate the ordering of a
    genuine expansion wave."""


class EnvelopeViolated(InflowWavesError):
    """A measured norm exceeded its fitted decay envelope by a wide margin."""


class CompatibilityViolated(InflowWavesError):
    """The initial perturbation does not vanish at the boundary node or is
    not compactly supported inside the left half of the domain."""


class PositivityViolated(InflowWavesError):
    """Specific volume or temperature lost positivity and step rejection
    could not recover it."""


class NonFinite(InflowWavesError):
    """NaN or infinity appeared in the discrete solution."""
