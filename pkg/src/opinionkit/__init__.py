"""Opinion-dynamics simulation and influence-network identification.

The package splits into network construction (netgraph), agent-ranking
measures (centrality), forward dynamics (dynamics), partial-observation
models (observe), estimators that reconstruct the influence matrix from
opinion data (identify), shared numerical kernels (numkit), and a
pipeline-oriented command line (cli).
"""

from ._version import __version__
from .errors import (
    CapacityError,
    ConfigError,
    EstimationError,
    IdentifiabilityError,
    InfeasibleError,
    NumericalError,
    OpinionKitError,
    ParameterError,
    StabilityError,
    StructuralError,
    TransformError,
)
from .netgraph import (
    DegreeProfile,
    DensityReport,
    GENERATOR_MODELS,
    GeneratorConfig,
    InfluenceNetwork,
    MULTIPLEX_MODELS,
    MultiplexConfig,
    MultiplexNetwork,
    PowerLawFit,
    ValidationReport,
    build_multiplex,
    degree_profile,
    fit_power_law,
    generate_network,
    laplacian,
    laplacian_quadratic,
    load_multiplex,
    load_network,
    network_density,
    pair_d_correlation,
    save_multiplex,
    save_network,
    validate_network,
)
from .centrality import (
    CentralityVector,
    betweenness_centrality,
    closeness_centrality,
    degree_centrality,
    eigenvector_centrality,
    friedkin_centrality,
    pagerank,
)
from .dynamics import (
    AppraisalPath,
    ModelDescriptor,
    OpinionTrajectory,
    StabilityReport,
    cesaro_average,
    cross_correlation_recursion,
    expected_gossip_dynamics,
    fj_equilibrium,
    is_schur_stable,
    load_trajectory,
    save_trajectory,
    simulate_belief_system,
    simulate_fj,
    simulate_gossip_fj,
    simulate_multiplex_fj,
    simulate_reflected_appraisal,
)
from .observe import (
    ObservationMoments,
    ObservationStream,
    SAMPLING_KINDS,
    SamplingModel,
    load_stream,
    observation_moments,
    sample_observations,
    save_stream,
)
from .identify import (
    BayesShrinkage,
    EstimationReport,
    EvalMetrics,
    HyperFit,
    MomentEstimates,
    MultiplexEstimate,
    ambiguity_transform,
    bayesian_covariance,
    check_lambda_identifiability,
    estimate_cross_correlations,
    estimate_gamma,
    estimate_state_mean,
    evaluate_estimate,
    fit_hyperparameters,
    identify_finite_horizon,
    identify_infinite_horizon,
    identify_multiplex,
    identify_unknown_lambda,
    load_report,
    recover_topology_and_w,
    save_report,
)
from .numkit import (
    L1Problem,
    RecoveryDiagnostics,
    SolveResult,
    check_recovery_conditions,
    philox_stream,
    pseudoinverse,
    solve_l1,
    spark,
    spectral_radius,
)
from .cli import run_pipeline, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
