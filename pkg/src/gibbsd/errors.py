"""Exception types shared across the package."""


class GibbsdError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateInput(GibbsdError):
    """Point cloud has no full-dimensional simplex in extensive space."""


class DimensionTooHigh(GibbsdError):
    """Number of work dimensions exceeds the configured cap."""


class TooLargeForOracle(GibbsdError):
    """Input exceeds the exhaustive oracle's point budget."""


class SingularSimplex(GibbsdError):
    """Simplex vertices are affinely dependent in extensive space."""


class OutsideAffineSpan(GibbsdError):
    """Target point does not lie in the simplex's affine span."""


class OutsideSimplex(GibbsdError):
    """Target point lies outside the coexistence simplex."""


class UnknownPhase(GibbsdError):
    """Phase label not present in the model."""


class UnknownDemo(GibbsdError):
    """No built-in model with the requested name."""


class EmptyGrid(GibbsdError):
    """Grid specification produces no usable sample nodes."""


class ExceedsMaxCoexistence(GibbsdError):
    """More coexisting phases than work dimensions allow (P > W + 1)."""


class AxisUnknown(GibbsdError):
    """Diagram axis does not match any hull variable."""


class NonConvexTransform(GibbsdError):
    """Legendre infimum is not attained at a unique interior point."""


class EmptySlice(GibbsdError):
    """Isopleth constraint leaves too few points for a sub-hull."""


class InconsistentConstraint(GibbsdError):
    """Isopleth constraint rows are linearly dependent or contradictory."""


class SchemaVersionMismatch(GibbsdError):
    """Serialized document carries an unsupported schema version."""


class ValidationError(GibbsdError):
    """Document fails schema validation.

    ``path`` is a JSON-pointer string locating the offending element.
    """

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class MissingElementalReference(GibbsdError):
    """A chemical system lacks an elemental reference entry."""


class IOFailure(GibbsdError):
    """Filesystem operation failed while exporting."""


class UnsupportedAxisCount(GibbsdError):
    """Requested render format cannot represent this axis count."""
