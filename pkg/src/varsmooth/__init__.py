"""Variable-smoothing proximal gradient methods with a PSK MIMO benchmark."""

from .prox import (
    ProxFriendlyConvexFn,
    WeaklyConvexFn,
    box_indicator,
    l1_norm,
    mcp_penalty,
    moreau_grad,
    moreau_value,
    project_regular_polygon,
    project_unit_modulus,
    prox_box,
    prox_l1,
    prox_mcp,
    prox_scad,
    prox_soav,
    scad_penalty,
    soav_penalty,
    zero_fn,
    zero_penalty,
)
from .problem import (
    CompositeProblem,
    SmoothFn,
    SmoothMap,
    finite_difference_grad,
    grad_lipschitz,
    identity_map,
    prox_grad_step,
    stationarity_measure,
    surrogate_grad,
    surrogate_value,
    true_value,
)
from .solver import (
    DivergenceError,
    IterationRecord,
    SmoothingSchedule,
    SolverConfig,
    StepsizeError,
    Trajectory,
    armijo_holds,
    backtrack_stepsize,
    fixed_stepsize,
    mu_at,
    run,
)
from .baselines import (
    BaselineResult,
    PrimalDualConfig,
    lmmse_detect,
    modulus_pgd,
    prox_subgradient,
    soav_primal_dual,
)
from .mimo import (
    MimoInstance,
    bit_error_rate,
    build_polar_problem,
    channel_correlation,
    complexify_vector,
    constellation_points,
    generate_instance,
    load_instance,
    polar_from_lifted,
    polar_map,
    psk_demodulate,
    realify_matrix,
    realify_vector,
    regularizer_value,
    save_instance,
    soav_shifts,
    split_polar,
)

__version__ = "0.1.0"
