"""Hybrid-function operational matrices and a nonlinear fractional ODE solver."""
from .basis import (
    Grid,
    GridMismatchError,
    HFSeries,
    hf_add,
    hf_eval,
    hf_from_function,
    hf_inner_products,
    hf_multiply,
    hf_power,
    hf_scale,
    sample_to_hf,
)
from .expr import ExprSyntaxError, UnboundVariableError, compile_rhs, parse
from .models import get_model, list_models
from .opmatrix import (
    OpMatrixSet,
    UpperToeplitz,
    build_first_order,
    build_generalized,
    frac_integrate,
    gamma_fn,
)
from .oracles import OracleError, exact_solutions, pece_solve, rk4_solve
from .solver import (
    FractionalSystem,
    ModelError,
    SolveConfig,
    SolverError,
    SolveResult,
    contraction_bound,
    convergence_study,
    solve_hf,
)

__version__ = "0.1.0"
