"""Scale functions and local-time fluctuation laws for spectrally negative
Levy processes.

The package evaluates the two-sided exit theory of a spectrally negative
Levy process with unbounded variation: classical and generalized scale
functions, weighted-occupation (Volterra) scale functions, Laplace
transforms of local times at passage times, exponential times and inverse
local times, potential/permanental determinant identities, and an
independent Monte Carlo path oracle for cross-validation.

The hot kernels run through a compiled extension when available; set
SNLEVY_BACKEND=python to force the numpy fallback (see snlevy._backend).
"""

from ._backend import BACKEND
from .errors import (
    ComparabilityError,
    ConventionWarning,
    DegenerateIntervalError,
    DiscretizationWarning,
    DomainError,
    EstimationError,
    NumericError,
    PermanentalExistenceError,
    SnlevyError,
    SolverError,
)
from .genscale import (
    LevelWeights,
    gen_w,
    gen_w_det,
    gen_w_linear_system,
    gen_w_log,
    gen_w_recursive,
    gen_z,
    gen_z_det,
    gen_z_log,
    gen_z_recursive,
)
from .laws import (
    AtomExpLaw,
    Corridor,
    JointExpLaw,
    exp_density_prefactor,
    hitting_transform,
    inv_lt_joint_transform,
    inv_lt_rate,
    inv_lt_survival,
    joint_lt_exit_down,
    joint_lt_exit_up,
    joint_lt_resolvent,
    lt_atom_exp,
    lt_exit_down,
    lt_exit_up,
    lt_exp_joint,
    lt_exp_killed_transform,
    lt_limit_down,
    lt_limit_exp,
    lt_limit_up,
    lt_limits,
    lt_resolvent,
    occu_inv_lt_transform,
)
from .mc import (
    McConfig,
    McEnsemble,
    TransformSpec,
    empirical_transform,
    richardson_epsilon,
    simulate_corridor,
)
from .model import CompoundPoissonExp, LevyModel, PhiSolve, laplace_exponent, phi_inverse
from .omega import (
    OmegaGrid,
    WeightFunction,
    omega_exit_laws,
    omega_resolvent,
    solve_omega,
    solve_w_omega,
    solve_z_omega,
)
from .permanental import (
    PotentialKernel,
    isomorphism_check,
    logderiv_identity_check,
    loop_soup_functional,
    loop_soup_routes,
    permanental_laplace,
    potential_density,
    tilted_lt_transform,
)
from .scale import InversionConfig, ScaleContext, w_scale, w_scale_dq, z_scale

__version__ = "0.1.0"
