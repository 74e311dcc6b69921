"""Exception types shared across the package."""


class DecflError(Exception):
    """Base class for all package-specific errors."""


class InfeasibleParameters(DecflError, ValueError):
    """Generator parameters cannot produce a valid graph (e.g. odd n*k)."""


class TargetUnreachable(DecflError, RuntimeError):
    """Rewiring budget exhausted before reaching the target assortativity."""

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = achieved


class ParseError(DecflError, ValueError):
    """Malformed edge-list line; carries the 1-based line number."""

    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SelfLoopError(ParseError):
    pass


class DuplicateEdgeError(ParseError):
    pass


class EmptySample(DecflError, ValueError):
    pass


class UnknownFamily(DecflError, ValueError):
    pass


class DegenerateInput(DecflError, ValueError):
    pass


class NotConverged(DecflError, RuntimeError):
    """Iteration hit max_iter; carries the best iterate and its residual."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class DisconnectedGraph(DecflError, ValueError):
    pass


class DimensionMismatch(DecflError, ValueError):
    pass


class DegenerateDimension(DecflError, ValueError):
    pass


class UnknownActivation(DecflError, ValueError):
    pass


class ShapeMismatch(DecflError, ValueError):
    pass


class Exhausted(DecflError, RuntimeError):
    """Partition could not satisfy exact class quotas; a fallback was applied."""


class NoInformation(DecflError, ValueError):
    """Gain pipeline invoked with no usable network information."""


class ConfigError(DecflError, ValueError):
    """Invalid experiment configuration; carries the offending field."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
