"""Exception types shared across the package."""


class SidebandError(Exception):
    """Base class for errors raised by sidebandtomo."""


class NonPhysicalStateError(SidebandError, ValueError):
    """A covariance matrix violates the uncertainty principle."""


class CarrierExtinguishedError(SidebandError, ValueError):
    """The reflected carrier vanishes, so its phase reference is undefined."""


class RankDeficiencyError(SidebandError, ValueError):
    """A least-squares design does not determine all requested parameters."""

    def __init__(self, message, null_directions=None):
        super().__init__(message)
        self.null_directions = null_directions


class IllConditionedWarning(UserWarning):
    """A fit is formally full-rank but numerically fragile."""


class ParseError(SidebandError, ValueError):
    """An input file does not follow its documented schema."""
