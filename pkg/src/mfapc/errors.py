"""Exception and warning types shared across the package."""


class MFAPCError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MFAPCError, ValueError):
    """Array shapes or sizes do not agree."""


class HorizonError(MFAPCError, ValueError):
    """Prediction/control horizons are inconsistent (need 1 <= Nu <= N)."""


class InvalidInputError(MFAPCError, ValueError):
    """An argument has the right shape but an unusable value."""


class InvalidParameterError(MFAPCError, ValueError):
    """A model parameter (e.g. an RBF radius) is out of its admissible range."""


class EvaluationError(MFAPCError):
    """A plant evaluator returned a non-finite value."""

    def __init__(self, message, lag=None):
        super().__init__(message)
        self.lag = lag


class SingularSystemError(MFAPCError, ArithmeticError):
    """The normal matrix of the control law cannot be factorized."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class StaleCacheError(MFAPCError):
    """A Jacobian was requested at a regressor the network has not been evaluated at."""


class NonConvergenceError(MFAPCError):
    """Offline training hit its epoch cap before reaching the error threshold."""

    def __init__(self, message, epochs, final_error, net=None):
        super().__init__(message)
        self.epochs = epochs
        self.final_error = final_error
        self.net = net


class DivergenceError(MFAPCError):
    """An adaptive quantity became non-finite."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegenerateSystemError(MFAPCError):
    """The characteristic determinant is identically zero."""


class MarginalSystemError(MFAPCError):
    """The characteristic matrix is singular at z = 1."""


class RankConditionWarning(UserWarning):
    """rank(phi(1)) < M_y: the closed loop cannot steer every output independently."""
