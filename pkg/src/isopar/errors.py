"""Exception types shared across the package."""


class IsoparError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(IsoparError):
    """Invalid geometric configuration (degenerate Jacobian, point outside element)."""


class MeshQualityError(IsoparError):
    """Generated mesh violates a quality bound; carries the worst triangle id."""

    def __init__(self, message, triangle=None):
        super().__init__(message)
        self.triangle = triangle


class MeshParseError(IsoparError):
    """Malformed mesh file; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class ElevationError(IsoparError):
    """Curved-element construction produced a non-positive Jacobian."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class InversionError(IsoparError):
    """Newton inversion of an element map failed to converge."""

    def __init__(self, message, element=None, point=None):
        super().__init__(message)
        self.element = element
        self.point = point


class AssemblyError(IsoparError):
    """Element integration failed; carries the element id."""

    def __init__(self, message, element=None):
        super().__init__(message)
        self.element = element


class SolverError(IsoparError):
    """Iterative solve did not reach the requested residual within the cap."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class ContractError(IsoparError):
    """A caller violated an API contract (e.g. value for a non-boundary dof)."""


class FieldConstructionError(IsoparError):
    """The outward vector field cannot satisfy its boundary conditions."""
