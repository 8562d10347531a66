"""Exception hierarchy shared by all gatecast modules."""


class GatecastError(Exception):
    """Base class for every error raised by this package."""


# graph errors


class CycleDetected(GatecastError, ValueError):
    pass


class UnknownVertex(GatecastError, KeyError):
    pass


class MissingSinkDim(GatecastError, ValueError):
    pass


class InvalidNetwork(GatecastError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid network")


# register errors


class DimensionMismatch(GatecastError, ValueError):
    pass


class ZeroVector(GatecastError, ValueError):
    pass


class InvalidSite(GatecastError, KeyError):
    pass


class SameSite(GatecastError, ValueError):
    pass


class ControlInWord(GatecastError, ValueError):
    pass


class ZeroProbabilityBranchRequested(GatecastError, ValueError):
    pass


class LayoutMismatch(GatecastError, ValueError):
    pass


# protocol errors


class PhaseMissing(GatecastError, KeyError):
    pass


class BranchExplosion(GatecastError, RuntimeError):
    pass


class AncillaAlreadyMeasured(GatecastError, ValueError):
    pass


class DimensionTooLarge(GatecastError, ValueError):
    pass


# input errors


class ParseError(GatecastError, ValueError):
    pass


class ValidationError(GatecastError, ValueError):
    pass
