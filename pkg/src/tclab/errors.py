"""Exception types raised by the laboratory."""


class TclabError(Exception):
    """Base class for all errors raised by tclab."""


class PrecisionExhausted(TclabError):
    """Continued-fraction quotients can no longer be trusted."""

    def __init__(self, depth_reached, quotients):
        self.depth_reached = depth_reached
        self.quotients = list(quotients)
        super().__init__(
            f"partial quotients unreliable beyond depth {depth_reached}"
        )


class DegenerateOrbit(TclabError):
    """Too many Lyapunov terms hit the critical point and were dropped."""


class NotConverged(TclabError):
    """Pullback residual is above the requested tolerance."""

    def __init__(self, message, data=None):
        self.data = data
        super().__init__(message)


class NoSignChange(TclabError):
    """The chain defect never changes sign over the scanned alpha window."""


class ChainBroken(TclabError):
    """The certified critical chain 1/2 -> 1 -> 0 failed a tolerance."""


class InsufficientWindow(TclabError):
    """Fewer sweep records than a fit needs."""


class VacuousScales(TclabError):
    """Scale constants degenerate at this lambda (K0 < 10)."""


class NonePass(TclabError):
    """No lambda candidate passed every lemma check."""


class ConfigError(TclabError):
    """Invalid or missing configuration field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
