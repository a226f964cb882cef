"""Numerical laboratory for a 1-D run-and-tumble kinetic equation with
unbounded velocities: splitting solver, steady states by two routes, and
quantitative checks of drift, minorisation, tail, moment, Poincare, and
entropy-decay estimates."""

from .grid import ABSORBING, PERIODIC, Field, MomentSet, PhaseGrid, \
    WeightedNorm, moments, norm, project_pi
from .model import ModelParams, SignPsi, TablePsi, TanhPsi, jbracket, \
    maxwellian, moment_constant, psi_product, tumbling_rate, velocity_cut, \
    zeta_lower_bound
from .reports import CheckReport
from .solver import NumericalFailure, SolverConfig, Trajectory, b0_semigroup, \
    collision_step, run, step, transport_step
from .steady import SteadyResult, convolution_sandwich_check, load_steady, \
    positivity_check, save_steady, steady_by_evolution, steady_by_fixed_point, \
    tail_bounds_check
from .lyapunov import ConstantWeight, DriftReport, ExponentialWeight, \
    MinorisationReport, PolynomialWeight, RateFitReport, drift_check, \
    dual_generator_apply, exp_B_formula, minorisation_estimate, poly_B_min, \
    rate_fit, weight_eval
from .hypo import EllipticConfig, EntropyRecord, contraction_checks, \
    default_elliptic_config, default_test_family, dissipation_check, \
    elliptic_solve_B, entropy, entropy_equivalence_check, entropy_trajectory, \
    micro_coercivity_check, moment_asymptotics_check, poincare_estimate, \
    select_eps, vg_equivalence_check
from .asymptotics import FitReport, LaplaceSpec, laplace_integral, \
    phi_asymptotic, phi_quadrature, subexp_convolution_check, tail_fit, \
    watson_partial_sum

__version__ = "0.1.0"
