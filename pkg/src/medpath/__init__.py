"""Copula structural equation models for mediation pathway analysis.

Covariance algebra for the mediation DAG, Gaussian copula SEMs with mixed
marginals, D-vine copula regression with pathway independence tests, and
Sobel / classical / adaptive bootstrap mediation tests with a replication
engine for calibration and power studies.
"""
from .abtest import (
    AbConfig,
    BootstrapDraw,
    MediationReport,
    TestStatistics,
    ab_indicators,
    ab_statistic,
    ab_test,
    classical_bootstrap_test,
    estimate_paths,
    sobel_mediation_test,
    sobel_test,
)
from .dag import (
    DagCoefficients,
    DagCovariance,
    ErrorScales,
    correlation_entries,
    dag_covariance,
    theta_matrix,
)
from .data import Dataset
from .errors import (
    DomainError,
    EstimationError,
    InputError,
    InsufficientDataError,
    MedpathError,
    NonConvergenceError,
    SingularDesignError,
    UnsupportedModelError,
)
from .gcopula import (
    FittedSem,
    LatentSample,
    MarginalSpec,
    SemSpec,
    SemTemplate,
    discrete_interval,
    fit_full_mle,
    fit_ifm,
    loglik,
    loglik_gradient,
    marginal_cdf,
    marginal_quantile,
    simulate_dataset,
    simulate_latent,
)
from .regression import (
    GlmFit,
    LinearFit,
    fit_glm,
    fit_ols,
    normal_cdf,
    normal_quantile,
)
from .simstudy import (
    PowerCurve,
    ReplicationResult,
    Scenario,
    generate_scenario_data,
    qq_data,
    reproduce,
    run_null_study,
    run_power_study,
)
from .vine import (
    DagVineSpec,
    DVineSpec,
    PairCopula,
    PathwayTestResult,
    dag_node_density,
    dvine_conditional_density,
    dvine_conditional_quantile,
    fit_dag_vine,
    fit_pair_copula,
    h_function,
    h_inverse,
    joint_density_4node,
    pair_cdf,
    pair_density,
    pathway_independence_test,
    simulate_4node,
)

__version__ = "0.1.0"
