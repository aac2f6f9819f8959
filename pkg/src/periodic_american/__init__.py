"""Perpetual American options with Poissonian exercise opportunities."""

from .levy_model import (
    JumpSide,
    LevyModel,
    ParameterError,
    RootBracketError,
    calibrate_drift,
    check_call_assumption,
    model_from_config,
    phi,
    psi,
    psi_prime,
)
from .mc_oracle import (
    MCConfig,
    MCEstimate,
    default_horizon,
    empirical_barrier_search,
    simulate_crossing_transform,
    simulate_strategy_value,
)
from .periodic_pricer import (
    AssumptionError,
    BarrierSolution,
    ConsistencyError,
    OptionKind,
    OptionSpec,
    ValueCurve,
    classical_barrier,
    classical_curve,
    classical_value,
    default_grid,
    down_crossing_transform,
    f_equation,
    figure_grid,
    g_equation,
    solve_barrier,
    up_crossing_transform,
    value,
    value_at_optimum,
    value_curve,
)
from .scale_functions import (
    MultipleRootError,
    ScaleBasis,
    W,
    W_bar,
    Z,
    build_scale_basis,
    int_exp_W,
)

__version__ = "0.1.0"
