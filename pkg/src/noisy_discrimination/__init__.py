"""Optimal discrimination of quantum states through a noisy detector.

The detector noise is a column-stochastic confusion matrix applied after an
ideal POVM; folding it into the cost matrix turns the noisy problem into a
standard one that the closed-form and iterative solvers here handle.
"""

from .core import (
    ConfusionMatrix,
    CostMatrix,
    DensityMatrix,
    Ensemble,
    Povm,
    ToleranceProfile,
    DEFAULT_TOL,
    ValidationReport,
    Violation,
    hermitian_eigendecomposition,
    pure_state_density,
    require_valid,
    validate,
)
from .errors import (
    ConvergenceFailure,
    InvalidInput,
    NumericalFailure,
    ParseError,
    ValidationError,
)
from .oracles import (
    CriticalNoiseEstimate,
    OracleReport,
    SimulationEstimate,
    mirror_critical_noise,
    mirror_grid_oracle,
    projective_grid_oracle,
    random_povm_oracle,
    simulate_noisy_measurement,
)
from .problems import (
    identity_confusion,
    minimum_error_costs,
    orthogonal_ensemble,
    random_cost_matrix,
    random_density_matrix,
    random_ensemble,
    random_povm,
    random_priors,
    random_pure_state,
    random_stochastic_matrix,
    random_unitary,
    support_projectors,
    trine_ensemble,
    trine_leak_confusion,
    trine_povm,
    trine_states,
)
from .serialization import (
    Problem,
    SolveOptions,
    parse_povm,
    parse_problem,
)
from .solvers import (
    CertificateReport,
    MirrorParams,
    SolveResult,
    apply_assignment,
    assignment_search,
    certify,
    dispatch_solve,
    evaluate_povm,
    guess_only,
    helstrom_two_state,
    is_mirror_symmetric,
    iterative_solve,
    mirror_symmetric_solve,
    two_state_noisy,
)
from .transform import (
    LagrangeOperator,
    RiskOperators,
    average_cost,
    effective_povm,
    lagrange_operator,
    modified_costs,
    noisy_cost_equivalence_check,
    risk_operators,
)

__version__ = "0.1.0"

__all__ = [
    "CertificateReport",
    "ConfusionMatrix",
    "ConvergenceFailure",
    "CostMatrix",
    "CriticalNoiseEstimate",
    "DEFAULT_TOL",
    "DensityMatrix",
    "Ensemble",
    "InvalidInput",
    "LagrangeOperator",
    "MirrorParams",
    "NumericalFailure",
    "OracleReport",
    "ParseError",
    "Povm",
    "Problem",
    "RiskOperators",
    "SimulationEstimate",
    "SolveOptions",
    "SolveResult",
    "ToleranceProfile",
    "ValidationError",
    "ValidationReport",
    "Violation",
    "apply_assignment",
    "assignment_search",
    "average_cost",
    "certify",
    "dispatch_solve",
    "effective_povm",
    "evaluate_povm",
    "guess_only",
    "helstrom_two_state",
    "hermitian_eigendecomposition",
    "identity_confusion",
    "is_mirror_symmetric",
    "iterative_solve",
    "lagrange_operator",
    "minimum_error_costs",
    "mirror_critical_noise",
    "mirror_grid_oracle",
    "mirror_symmetric_solve",
    "modified_costs",
    "noisy_cost_equivalence_check",
    "orthogonal_ensemble",
    "parse_povm",
    "parse_problem",
    "projective_grid_oracle",
    "pure_state_density",
    "random_cost_matrix",
    "random_density_matrix",
    "random_ensemble",
    "random_povm",
    "random_priors",
    "random_pure_state",
    "random_stochastic_matrix",
    "random_unitary",
    "require_valid",
    "risk_operators",
    "simulate_noisy_measurement",
    "support_projectors",
    "trine_ensemble",
    "trine_leak_confusion",
    "trine_povm",
    "trine_states",
    "two_state_noisy",
    "validate",
]
