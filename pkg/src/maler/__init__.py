"""Universal online convex optimization with certified regret bounds."""

from .core import (
    AssumptionReport,
    Ball,
    Box,
    DecisionSet,
    GradientSample,
    LossOracle,
    ProblemParams,
    ProjectionError,
    UnsupportedSetOperation,
    contains,
    project_euclidean,
    project_weighted,
    validate_assumptions,
)
from .experts import expert_regret_certificate
from .meta import (
    CertificateReport,
    CertificateRow,
    ExpertGrid,
    MetaState,
    RunTrace,
    aggregate_play,
    build_grid,
    init_meta_state,
    meta_regret_bound,
    meta_regret_certificate,
    metagrad_grid,
    potential_certificate,
    update_weights,
)
from .libsvm import parse_libsvm, write_libsvm
from .surrogates import SurrogateContext, exp_inequality_check
from .universal import (
    AssumptionViolation,
    Learner,
    MalerLearner,
    OGDLearner,
    ONSLearner,
    ProtocolError,
    make_learner,
    metagrad_baseline,
    ogd_baselines,
    play_round,
    regret_bound_certificate,
    regret_diagnostics,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "AssumptionViolation",
    "Ball",
    "Box",
    "CertificateReport",
    "CertificateRow",
    "DecisionSet",
    "ExpertGrid",
    "GradientSample",
    "Learner",
    "LossOracle",
    "MalerLearner",
    "MetaState",
    "OGDLearner",
    "ONSLearner",
    "ProblemParams",
    "ProjectionError",
    "ProtocolError",
    "RunTrace",
    "SurrogateContext",
    "UnsupportedSetOperation",
    "aggregate_play",
    "build_grid",
    "contains",
    "exp_inequality_check",
    "expert_regret_certificate",
    "init_meta_state",
    "make_learner",
    "meta_regret_bound",
    "meta_regret_certificate",
    "metagrad_baseline",
    "metagrad_grid",
    "ogd_baselines",
    "parse_libsvm",
    "play_round",
    "potential_certificate",
    "project_euclidean",
    "project_weighted",
    "regret_bound_certificate",
    "regret_diagnostics",
    "update_weights",
    "validate_assumptions",
    "write_libsvm",
]
