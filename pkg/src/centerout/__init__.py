"""Center-outward distribution and quantile functions for d-dimensional
samples via optimal assignment to a ball grid, with cyclical-monotonicity
certification and Moreau-envelope smoothing."""

__version__ = "0.1.0"

from .assignment import (
    Assignment,
    Sample,
    brute_force_assignment,
    cost_matrix,
    empirical_F,
    solve_auction,
    solve_hungarian,
)
from .certificate import (
    Potential,
    admissible_epsilon,
    check_cyclical_monotonicity,
    epsilon0,
    karp_min_mean_cycle,
    optimal_weights,
    pairing_costs,
    weights_with_repetitions,
)
from .contours import (
    ContourSet,
    RankSignTable,
    SignCurve,
    contour,
    region_probability,
    sign_curves,
    table,
)
from .grid import BallGrid, GridSpec, break_ties, build_grid, factorize, unit_directions
from .pipeline import Fit, fit_sample, grid_for_sample
from .reference import (
    EllipticalModel,
    MixtureModel,
    chi_radial_cdf,
    elliptical_F_hat,
    oneD_center_outward,
    sample_model,
    spherical_F,
)
from .smoothing import (
    NotInterpolableError,
    SmoothMap,
    T_eps,
    fit_smooth_F,
    fit_smooth_Q,
    phi,
    phi_eps,
    prox,
    step_F,
)
