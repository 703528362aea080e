"""Exception hierarchy shared by all modules."""


class RnssError(Exception):
    """Base class for every error raised by this package."""


class DegenerateNodes(RnssError, ValueError):
    """Interpolation nodes are not pairwise distinct."""


class InsufficientShares(RnssError, ValueError):
    """Fewer than t+1 shares were supplied for reconstruction."""


class DomainMismatch(RnssError, ValueError):
    """Operands were shared over different evaluation domains or point sets."""


class TripleReused(RnssError, RuntimeError):
    """A Beaver triple was consumed more than once."""


class SingularMask(RnssError, ArithmeticError):
    """The opened masked product is too small or ill-conditioned to invert.

    Either the secret is (close to) zero or the random mask was unlucky. The
    caller may retry with fresh randomness.
    """


class SingularInnovation(RnssError, ArithmeticError):
    """The innovation covariance of a plain Kalman update is singular."""


class ProtocolAbort(RnssError, RuntimeError):
    """A party failed to deliver a message in a synchronous round."""

    def __init__(self, message, round=None, missing=()):
        super().__init__(message)
        self.round = round
        self.missing = tuple(missing)


class ConfigMismatch(RnssError, RuntimeError):
    """Two parties were started with different configurations."""


class ConfigError(RnssError, ValueError):
    """A configuration file or command line value is invalid."""
