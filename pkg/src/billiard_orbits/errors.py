"""Exception types shared across the package."""


class BilliardError(Exception):
    """Base class for all package errors."""


class InvalidBody(BilliardError, ValueError):
    """Body parameters violate positivity or strict convexity."""


class DegeneratePoint(BilliardError):
    """The defining function has a vanishing gradient at the query point."""


class NoConvergence(BilliardError):
    """An inner root-find or projection did not converge."""


class GrazingImpact(BilliardError):
    """A ray meets the boundary (almost) tangentially."""


class DegenerateEdge(BilliardError):
    """Two cyclically consecutive vertices coincide."""


class InvalidParams(BilliardError, ValueError):
    """Parameters outside the supported range of an algebraic construction."""


class ConfigError(BilliardError, ValueError):
    """Malformed experiment configuration."""
