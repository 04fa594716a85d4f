"""Radial variational solver for -Delta_H u = lambda alpha f(u) on the Poincare ball."""

from hypsolve.geometry import (
    BallPoint,
    GeodesicPolar,
    Rotation,
    apply_rotation,
    euclidean_radius_of_geodesic_ball,
    geodesic_distance,
    geodesic_distance_origin,
    montecarlo_integral_dmu,
    random_rotation,
    sphere_area,
    volume_density,
)
from hypsolve.radial import (
    RadialFunction,
    RadialGrid,
    assemble_operators,
    dirichlet_energy,
    inner_product,
    lebesgue_norm,
    radial_integral,
)
from hypsolve.functional import (
    J_lambda,
    Nonlinearity,
    Phi,
    Psi,
    RadialWeight,
    compute_alpha_f,
    weak_residual,
)
from hypsolve.problem import Problem, example5_declaration, load_problem
from hypsolve.threshold import (
    ThresholdReport,
    compute_threshold,
    estimate_sobolev_constant,
    h_of_omega,
    lambda_star,
    lambda_star_at,
    maximize_h,
    theta_majorant,
    theta_sample,
)
from hypsolve.testfn import (
    Annulus,
    PlateauFunction,
    annulus_membership,
    build_plateau,
    negativity_diagnostic,
    ratio_blowup_diagnostic,
)
from hypsolve.solver import (
    SolveConfig,
    SolveReport,
    lambda_sweep,
    minimize_sublevel,
    verify_weak_solution,
)

__version__ = "0.1.0"
