"""momsec: verification toolkit for hamiltonian Lie algebroids over Poisson charts.

Charts, Poisson bivectors, Lie algebroids, connections and candidate momentum
sections are declared as symbolic expressions; every tensor identity is then
checked at sampled points with exact truncated-Taylor jet arithmetic.
"""

from .errors import (
    ChartMismatchError,
    EvaluationDomainError,
    ExprError,
    ExprSyntaxError,
    InsufficientJetOrderError,
    JetMismatchError,
    MomsecError,
    PreconditionError,
    SchemaError,
    UnknownIdentifierError,
    ValidationError,
)
from .jets import Jet, JetSpace, jet_space
from .exprcore import parse_expr, to_source, jet_eval
from .fields import (
    BivectorField,
    Chart,
    OneForm,
    PoissonChart,
    ScalarField,
    TrivectorValue,
    VectorField,
    exterior_derivative,
    hamiltonian_vf,
    lie_bracket_vf,
    lie_derivative_bivector,
    pi_sharp,
    poisson_bracket,
    schouten_bb,
)
from .algebroid import (
    LieAlgebroid,
    SectionA,
    SectionAStar,
    algebroid_bracket,
    anchor_apply,
    anchor_field,
    anchor_morphism_residual,
    d_A_one_section,
    jacobiator_residual,
    make_action_algebroid,
    make_cotangent_algebroid,
    make_lie_algebra_bundle,
    make_tangent_algebroid,
    validate_algebroid,
    SO3_STRUCTURE,
)
from .connection import (
    Connection,
    cov_deriv_A,
    cov_deriv_Astar,
    cov_deriv_A_torsion,
    cov_deriv_bivector,
    curvature,
    dcheck_bivector,
    dcheck_twoform,
    dmu_pairing_jets,
    opposite_TM,
    opposite_TstarM,
    torsion_A,
    torsion_TM,
    torsion_TstarM,
)
from .hamiltonian import (
    CheckReport,
    HamiltonianInstance,
    build_momentum_connection,
    check_H1,
    check_H2,
    check_H3,
    classify_connection,
    coisotropy_witness,
    horizontal_section_at,
    invariance_residual,
    liouville_residual,
    momentum_builder_report,
    pointwise_checks,
    symplectic_suite,
)
from .dualspace import (
    C_trilinear,
    bivector_map_residual,
    build_pi_a,
    build_pi_hat,
    fiber_linear_function,
    theorem41_check,
    total_chart,
)
from .scenario import (
    Report,
    Scenario,
    emit_report,
    exit_code,
    load_scenario,
    loads_scenario,
    run_checks,
)
from .gallery import gallery, gallery_scenario, gallery_text

__version__ = "0.1.0"
