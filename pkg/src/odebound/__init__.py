"""A-posteriori error bounds for approximate solutions of first-order ODEs."""

from .approx import (
    BoundCurve,
    NonConvergenceError,
    ToleranceConfig,
    approximate_bound_pipeline,
    check_convergence,
    loose_bound,
    select_order,
    tight_bound,
)
from .grid import GridMismatchError, NonFiniteError, SampledFn, TimeGrid
from .models import (
    OdeModel,
    RiccatiModel,
    custom_riccati,
    get_model,
    linear_model,
    loss,
    preset_cosmology,
    preset_population,
    residual,
)
from .oracle import OracleFailure, OracleSolution, solve
from .riccati import (
    BoundInapplicableError,
    ExactBoundConstants,
    exact_bound,
    exact_constants,
    select_J_for_tolerance,
)
from .series import EtaSeries
from .surrogates import Surrogate, loss_ladder, perturbed_oracle

__version__ = "0.1.0"
