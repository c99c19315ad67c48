"""Model-free adaptive predictive control with neural pseudo-Jacobian estimation."""
from .controller import (
    ControllerConfig,
    ControllerState,
    mfapc_control,
    mfapc_control_iterative,
    mfapc_control_pid,
    solve_normal_equations,
)
from .edlm import (
    MatrixPolynomial,
    PseudoJacobianMatrix,
    edlm_residual,
    edlm_step,
    increment_stack,
    make_shift_operators,
    pjm_finite_difference,
    pjm_from_linear_plant,
    shift_increments,
)
from .errors import *  # noqa: F401,F403
from .predictor import (
    PredictionOperators,
    build_prediction_operators,
    build_prediction_operators_tv,
    predict_horizon,
)
from .stability import (
    CharacteristicMatrix,
    RootReport,
    StaticErrorReport,
    characteristic_matrix,
    closed_loop_poles,
    stability_margin,
    static_error_check,
)

__version__ = "0.1.0"
