"""Feedback particle filtering with a Hermite decomposition gain solver.

The gain of the feedback particle filter solves a probability-weighted
Poisson equation.  This package splits that equation per mixture component
into a Galerkin-solvable polynomial part (a backward recursion over
tensor-product Hermite coefficients) and a weighted-radial part with an
incomplete-gamma closed form, assembles the resulting gain field, and
benchmarks the filter against EKF, bootstrap PF, and constant/kernel gain
baselines on the stock scenarios.
"""

from ._compat import NUMBA_ENABLED
from .baselines import KernelGainConfig, constant_gain, kernel_gain, median_bandwidth
from .filters import (
    ConstantGain,
    DecompositionGain,
    Ensemble,
    FilterRunConfig,
    IntegrationDiverged,
    KernelGain,
    SdeModel,
    control_u,
    ekf_step,
    euler_step,
    fpf_step,
    make_rng,
    pf_step,
    run_filter,
    simulate_truth,
)
from .gain import (
    BlockSystem,
    GainCoefficients,
    GainField,
    SingularBlock,
    assemble_gain,
    backward_recursion,
    build_blocks,
    invertibility_probe,
    radial_term,
    scalar_gain_closed_form,
    scalar_recursion,
)
from .hermite import (
    HermiteExpansion,
    IndexSet,
    enumerate_indices,
    expansion_eval,
    expansion_grad,
    expansion_laplacian,
    hermite_eval,
    monomial_to_hermite,
    tensor_eval,
)
from .metrics import RunRecord, armse, armse_per_component, gain_l2_error, mre, scaling_fit
from .mixture import (
    GaussianComponent,
    Mixture,
    component_density,
    empirical_obs_mean,
    mixture_density,
    weighted_radial,
)
from .scenarios import (
    ScenarioSpec,
    build_cubic_sensor,
    build_lorenz,
    build_scenario,
    build_ship_polar,
    build_static_gain_mixture,
    scenario_defaults,
)
from .special import erf, lower_incomplete_gamma, radial_kernel

__version__ = "0.1.0"
