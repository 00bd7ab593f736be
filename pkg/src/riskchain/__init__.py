"""Multi-period coherent risk measures on finite scenario trees."""

from .config import Config, DEFAULT
from .errors import (
    EmptyIntersectionError,
    EmptyKernelError,
    EngineError,
    InfeasibleError,
    ModelError,
    NotCoarserError,
    NotMeasurableError,
    OutOfRangeError,
    SchemaError,
    SizeBoundError,
)
from .scenario import (
    Claim,
    ScenarioModel,
    Stage,
    ValidationReport,
    claim,
    condexp,
    validate_model,
)
from .riskset import (
    Kernel,
    LinearConstraint,
    Measure,
    RiskSet,
    density,
    includes,
    intersect,
    kernel_polytope,
    maximize_ratio,
    measure,
    member,
    node_kernel,
    set_equal,
    simplex_set,
    singleton,
    vertex_enumeration,
)
from .risk import (
    AdaptedProcess,
    Chain,
    ReservePlan,
    cone_member,
    decompose_acceptance,
    eta,
    is_acceptable,
    reserve_plan,
    rho,
)
from .consistency import (
    CheckReport,
    ConsistencyReport,
    StrongReport,
    chain_time_consistent,
    check_lower,
    check_strong,
    check_supermartingale,
    check_weak,
    consistency_report,
    dual_cone_member,
    find_witness,
    is_mstable,
    mstable_hull,
    paste_assembly,
    project,
)
from .intermarket import (
    FiReport,
    MarketModel,
    OnePeriodPremium,
    ProductModel,
    SplitReservePlan,
    build_refined,
    check_fi,
    extend_pi,
    fin_restriction,
    is_purely_financial,
    lift_financial,
    one_period_premium,
    product_space,
    psi_build,
    psi_verify,
    qf,
    qf_by_projection,
    qi,
    qi_by_projection,
    split_reserve,
)

__version__ = "0.1.0"
