"""Exception hierarchy shared across the package."""


class LocalCausalError(Exception):
    """Base class for all package-specific errors."""


class GraphError(LocalCausalError):
    """Structural validation failed (bad index, cycle, duplicate edge)."""


class InconsistencyError(LocalCausalError):
    """Knowledge or orientation conflicts with the graph or with itself."""


class ResourceCapError(LocalCausalError):
    """An enumeration exceeded its configured cap."""


class ParseError(LocalCausalError):
    """A file or serialized payload could not be parsed."""


class NumericalError(LocalCausalError):
    """A numerical routine failed (singular matrix, bad conditioning)."""
