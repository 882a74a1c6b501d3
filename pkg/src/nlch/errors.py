"""Exception hierarchy shared by every module of the package."""


class NLCHError(Exception):
    """Base class for all package errors."""


class InvalidArgument(NLCHError, ValueError):
    pass


class DomainError(NLCHError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class GeometryError(NLCHError):
    """Degenerate element geometry while partitioning the punctured box."""

    def __init__(self, message, x=None, eps=None):
        if x is not None:
            message = f"{message} (x={tuple(float(v) for v in x)}, eps={eps})"
        super().__init__(message)
        self.x = x
        self.eps = eps


class ResourceError(NLCHError):
    """A memory guard was exceeded."""


class IntegrationFailure(NLCHError):
    """Time integration could not proceed; carries the last good state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class InitializationError(NLCHError):
    """Consistent initialization did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigError(NLCHError, ValueError):
    pass
