"""Toroidal circle planes: families, geometric operations, verification."""

from .circle_geometry import (
    CHART_TOL,
    INF,
    Parallel,
    S1Point,
    SampledCircle,
    TorusPoint,
    angle_of,
    chart_distance,
    cyclic_between,
    hausdorff_h,
    metric_e,
    parallel_relation,
    point_at_angle,
    s1,
    s1_close,
)
from .errors import (
    ConstraintError,
    DegenerateInput,
    EmptyInput,
    EqualCircles,
    GeometryError,
    InfiniteCoordinate,
    InvalidParameter,
    InvalidTrials,
    JoinFailure,
    NoTouchingCircle,
    NotCollinear,
    NotTouching,
    OutsideDerivedPlane,
    ParallelInput,
    ParseError,
    PreconditionViolated,
    RegionOutsideDerivedPlane,
    SpecViolation,
    TooManyIntersections,
)
from .moebius import (
    MoebiusMap,
    cross_ratio,
    det_sign,
    mobius_apply,
    mobius_compose,
    mobius_from_three_pairs,
    mobius_inverse,
)
from .planes import (
    Branch,
    Circle,
    HartHyperbola,
    HartLine,
    Homeo,
    MoebiusGraph,
    Plane,
    SwappedGraph,
    Tolerances,
    circle_equal,
    join_hartmann,
    join_swapping,
    membership_residual,
    sample_circle,
    semi_mult_eval,
    semi_mult_inverse,
    underlying_moebius,
)
from .operations import (
    IntersectionKind,
    IntersectionResult,
    K4Report,
    SequenceSpec,
    alpha_join,
    beta_touch_point,
    gamma_intersect,
    k4_probe,
    pi_minus_projection,
    pi_parallel_intersection,
    pi_plus_projection,
    touching_solver,
)
from .automorphisms import (
    KernelMembership,
    TorusMap,
    apply_map,
    compose_maps,
    family_hartmann,
    family_swapping,
    identity_map,
    is_automorphism,
    kernel_membership,
    metric_e_tilde,
    random_family_member,
)
from .verification import (
    VerificationReport,
    random_circle,
    random_nonparallel_triple,
    random_point,
    verify_joining,
    verify_rigidity,
    verify_touching,
    verify_two_point_bound,
)
from .derived import (
    DenseResult,
    DerivedLine,
    between,
    collinear,
    derived_line,
    generate_dense,
    metric_d,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
