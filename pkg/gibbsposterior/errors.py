"""
Exception hierarchy for gibbsposterior
Every failure raised by the library derives from GibbsPosteriorError
"""

from typing import Optional


class GibbsPosteriorError(Exception):
    """Base class for all library errors"""


class EmptyShift(GibbsPosteriorError):
    """Pruning removed every block: the forbidden words admit no bi-infinite point"""


class NotMixing(GibbsPosteriorError):
    """The block transition matrix has no entrywise positive power"""


class ResourceLimit(GibbsPosteriorError):
    """A word enumeration would exceed the configured candidate cap"""


class NoConvergence(GibbsPosteriorError):
    """Power iteration did not reach the requested tolerance"""

    def __init__(self, message: str, residual: float) -> None:
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual


class KindMismatch(GibbsPosteriorError):
    """Observation type or loss kind does not fit the requested operation"""


class LengthMismatch(GibbsPosteriorError):
    """Symbol and observation sequences have different lengths"""


class DomainError(GibbsPosteriorError):
    """A parameter lies outside its admissible range"""


class ShapeMismatch(GibbsPosteriorError):
    """Tables or arrays disagree in shift, range or shape"""


class NonFinite(GibbsPosteriorError):
    """A loss or potential value is NaN or infinite"""


class InadmissibleObservation(GibbsPosteriorError):
    """Every model assigns probability zero to the observed word"""


class UnknownGenerator(GibbsPosteriorError):
    """No observation generator is registered under the requested name"""


class ConfigError(GibbsPosteriorError):
    """Scenario configuration is invalid; `field` names the offending entry"""

    def __init__(self, message: str, field: Optional[str] = None) -> None:
        if field and field not in message:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
