"""Exception types shared across the package."""


class ChiralDimersError(Exception):
    pass


# reservoir
class PhaseConditionViolated(ChiralDimersError):
    pass


class NoPositiveRoot(ChiralDimersError):
    pass


class DiagonalizationFailure(ChiralDimersError):
    pass


class NotInChiralWindow(ChiralDimersError):
    pass


class IntegrandSingular(ChiralDimersError):
    pass


class ConfinementResonanceWarning(UserWarning):
    pass


# chain
class OddChain(ChiralDimersError):
    pass


class ZeroAsymmetry(ChiralDimersError):
    pass


class DimensionOverflow(ChiralDimersError):
    pass


class ToleranceFailure(ChiralDimersError):
    pass


class SolverDivergence(ChiralDimersError):
    pass


class DegenerateNullspace(ChiralDimersError):
    pass


class IndexOutOfRange(ChiralDimersError, IndexError):
    pass


class InvalidState(ChiralDimersError, ValueError):
    pass


# trajectories
class EquivalenceCheckFailed(ChiralDimersError):
    def __init__(self, residual, msg=None):
        self.residual = residual
        super().__init__(msg or f"generator mismatch, max-norm residual {residual:.3e}")


class NormUnderflow(ChiralDimersError):
    pass


class TrajectoryFailure(ChiralDimersError):
    def __init__(self, stream_index, cause):
        self.stream_index = stream_index
        self.cause = cause
        super().__init__(f"trajectory {stream_index} failed: {cause!r}")


# lab harness
class ConfigError(ChiralDimersError, ValueError):
    def __init__(self, msg, key=None):
        self.key = key
        super().__init__(msg)


class RuntimeFailure(ChiralDimersError):
    pass


class UnknownFigure(ChiralDimersError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown figure"
