"""Exception hierarchy shared by all engine modules."""


class EngineError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(EngineError):
    """Matrix or vector shapes are unusable (non-square, mismatched)."""


class ConfigurationError(EngineError):
    """Invalid construction parameters (grid sizes, unknown tags, bad specs)."""


class CoverageError(EngineError):
    """A loop segment leaves the chart it was assigned to."""


class DomainError(EngineError):
    """A base point lies outside the requested chart."""


class IncompatibilityError(EngineError):
    """Two objects live over different bases or have mismatched structure."""


class GaugeError(EngineError):
    """A gauge transformation is singular where it must be invertible."""


class DegreeError(EngineError):
    """A form evaluator was queried at a degree it does not carry."""


class CapabilityError(EngineError):
    """The request exceeds what the engine supports (e.g. too many insertion channels)."""


class ModeError(EngineError):
    """Exact and float spectral data were mixed in one operation."""


class SingularHolonomyError(EngineError):
    """Holonomy is too close to singular for logarithms to be taken."""


class ScenarioLookupError(EngineError):
    """Requested scenario name is not in the registry."""


class ExpressionParseError(EngineError):
    """A CLI class-arithmetic expression could not be parsed."""


class NumericalError(EngineError):
    """An iterative kernel failed to converge."""
