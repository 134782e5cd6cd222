"""Exception hierarchy shared by every module of the package."""


class MorphoError(Exception):
    """Base class for all errors raised by morphobohm."""


class RankDeficient(MorphoError, ValueError):
    """Jacobian is not of full column rank (or has more columns than rows)."""


class DimensionMismatch(MorphoError, ValueError):
    pass


class FDStepInvalid(MorphoError, ValueError):
    pass


class NonPositiveMicrostates(MorphoError, ValueError):
    pass


class QuadratureNotConverged(MorphoError, RuntimeError):
    pass


class SingularFisher(MorphoError, ValueError):
    pass


class NonPositiveField(MorphoError, ValueError):
    pass


class NotNormalized(MorphoError, ValueError):
    pass


class GridMismatch(MorphoError, ValueError):
    pass


class StepInvalid(MorphoError, ValueError):
    pass


class EmptyEnsemble(MorphoError, ValueError):
    pass


class QuantumMassOverflow(MorphoError, OverflowError):
    """exp(Q) would overflow a double."""


class DegenerateMetric(MorphoError, ValueError):
    pass


class ConfigError(MorphoError, ValueError):
    exit_code = 2


class CheckFailed(MorphoError, RuntimeError):
    exit_code = 1
