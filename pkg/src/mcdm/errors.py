"""Exception hierarchy shared by the modem stages."""


class MCDMError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MCDMError, ValueError):
    pass


class FramingError(MCDMError, ValueError):
    """Bit count does not fit the symbol or subcarrier layout."""


class CapacityError(MCDMError, ValueError):
    pass


class PrecisionError(MCDMError, ValueError):
    """Input sampled too coarsely for the requested quadrature."""


class SearchError(MCDMError, ValueError):
    pass


class AlignmentError(MCDMError, ValueError):
    pass


class SingularityError(MCDMError, ZeroDivisionError):
    pass


class PacketLost(MCDMError):
    """Synchronization peak too weak to trust the packet."""

    def __init__(self, peak, mean, ratio):
        super().__init__(f"sync peak {peak:.3g} below {ratio:g} x mean metric {mean:.3g}")
        self.peak = peak
        self.mean = mean
        self.ratio = ratio


class ConfigError(MCDMError, ValueError):
    """Malformed or inconsistent configuration; ``key`` names the culprit."""

    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class IncompleteProbeError(MCDMError, ValueError):
    pass
