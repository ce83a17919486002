"""Numerical toolkit for contingent cones of sets and derivative notions of set-valued maps."""

from .cones import (
    ConeClass,
    ConeScanResult,
    ConeVerdict,
    WitnessSequence,
    cone_membership,
    cone_quotient,
    cone_scan,
    witness_sequence,
)
from .errors import (
    CertificationError,
    ConelabError,
    DimensionError,
    EmptySetError,
    NotOnSetError,
    ScheduleError,
    WindowError,
)
from .geometry import (
    FiniteCloud,
    SampledCurve,
    SequenceSet,
    SetRep,
    UnionSet,
    UnitBall,
    distance,
    hausdorff_deviation,
    hausdorff_distance,
    inclusion_with_radius,
    interval_sample,
)
from .limits import (
    DeltaSchedule,
    Explicit,
    Geometric,
    HarmonicFamily,
    LimitClass,
    LimitVerdict,
    QuotientTrace,
    classify_limit,
    default_schedule,
    make_schedule,
    parse_schedule,
    quotient_trace,
)
from .svmaps import (
    DerivativeVerdict,
    GraphSet,
    LipschitzEstimate,
    Notion,
    RadiusTrace,
    SetValuedMap,
    derivative_membership,
    derivative_quotient,
    derivative_set_scan,
    deviation_trace,
    differential_membership,
    differential_set_scan,
    from_branches,
    lipschitz_estimate,
    radius_function,
    single_valued,
)

__version__ = "0.1.0"
