"""Linear system identification lab.

Simulation and least-squares identification of discrete-time linear systems,
controllability analysis (index, Gramian, staircase form, distance to
uncontrollability), closed-form hardness bounds with trajectory KL
divergence, and a reproducible Monte Carlo sample-complexity harness.
"""

from .errors import (
    ConfigError,
    DimensionError,
    ExplosiveSpectralRadiusError,
    InputMapRankError,
    KlFactorizationError,
    ModelFormatError,
    NoiseMapRankError,
    RankDeficientRegressionError,
    SysidlabError,
)
from .lti import (
    LtiSystem,
    NoiseSpec,
    Trajectory,
    jordan,
    make_system,
    simulate,
    simulate_batch,
    zoo_hard_chain,
    zoo_jordan_actuated,
    zoo_kl_pair,
    zoo_padded_chain,
    zoo_perturbed_integrator,
    zoo_scaled_jordan,
)
from .ctrb import (
    DistanceEstimate,
    StaircaseForm,
    controllability_index,
    controllability_matrix,
    distance_to_uncontrollability,
    gramian,
    staircase,
    toeplitz_sigma_min,
)
from .bounds import (
    BoundCertificate,
    KlResult,
    exp_hard_lower_bound,
    gramian22_decay_bound,
    gramian_upper_bound,
    integrator_distance_closed_form,
    kl_trajectory,
    minimax_required_samples,
    powers_bound,
    sigma_min_certificate,
)
from .fileio import (
    read_model,
    read_trajectory,
    write_model,
    write_trajectory,
)
from .ident import Estimate, estimation_error, least_squares
from .mc import (
    ExperimentConfig,
    ComplexityCurve,
    MinSamplesResult,
    default_config,
    load_config,
    mean_error,
    min_samples,
    parse_config,
    run_experiment,
    trial_seed,
)

__version__ = "0.1.0"
