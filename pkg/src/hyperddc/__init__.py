"""Dynamic discrete choice with quasi-hyperbolic (beta-delta) discounting.

Solvers for finite-horizon and stationary equilibria of sophisticated
present-biased agents, identification of the discount parameters from
exclusion restrictions via bivariate polynomial systems and Sylvester
resultants, and the simulation plus minimum-distance estimation toolkit
around them.
"""

from .core import (
    ChoiceData,
    ChoiceProbabilities,
    DiscountPair,
    FiniteModel,
    InvalidModelError,
    StationaryModel,
    ValidationReport,
    ValueBundle,
    log_odds,
    pb_transition,
    perceived_values_from_data,
    recover_utilities_finite,
    solve_finite,
    surplus,
    validate_model,
)
from .identify import (
    Candidate,
    ExclusionRestriction,
    IdentifiedSet,
    MomentSystem,
    NonidentificationError,
    SearchDomain,
    StateStructure,
    build_finite_moment,
    build_moment_system,
    build_stationary_moment,
    enumerate_exclusion_pairs,
    geometric_identified_set,
    grid_oracle,
    solve_identified_set,
    three_period_system,
)
from .polyalg import (
    BivariatePoly,
    CommonFactorResult,
    DegenerateInputError,
    IdenticallyZeroError,
    InterpolationError,
    SylvesterMatrix,
    UnivariatePoly,
    common_factor_test,
    resultant,
    sylvester,
    uni_roots,
)
from .simest import (
    CCPEstimate,
    EmptyCellError,
    EstimationResult,
    MonteCarloTable,
    Panel,
    TransitionEstimate,
    criterion_surface,
    estimate_ccp,
    estimate_transitions,
    minimum_distance,
    monte_carlo,
    simulate_panel,
)
from .specio import ModelSpec, SpecError, load_model, load_restrictions
from .stationary import (
    AMatrix,
    NonConvergenceError,
    StationaryEquilibrium,
    omega,
    pi_map,
    recover_utilities_stationary,
    solve_stationary,
)

__version__ = "0.1.0"
