"""Numerical holonomy and loop-space form verification toolkit."""

from .circle_k import (
    KHatElement,
    LKElement,
    SpectralClass,
    bcs_equivalent_s1,
    class_from_holonomy,
    conjugacy_probe,
    i_map_eval,
    lk_add,
    lk_eq,
    lk_i_map,
    lk_mul,
    lk_neg,
    lk_sub,
    monoid_star,
    monoid_sum,
    to_khat,
)
from .connections import (
    Connection,
    ConnectionPath,
    Gauge,
    TransitionMap,
    TwoFormValue,
    as_path,
    connection_from_json,
    connection_to_json,
    constant_diagonal_connection,
    curvature_at,
    direct_sum,
    gauge_apply,
    linear_path,
    scale_s_path,
    split_two_chart,
    tensor_product,
)
from .geometry import (
    BaseSpace,
    Loop,
    LoopVariation,
    deform_loop,
    make_circle_loop,
    make_constant_loop,
    make_torus_loop,
)
from .loop_forms import (
    DefectReport,
    FormQuery,
    bch_eval,
    bcs_eval,
    ch_eval,
    cs_eval,
    equivariant_defect,
    identity_checks,
    loop_d,
    velocity_variation,
)
from .matrices import Spectrum, eig_multiset, mat_exp
from .scenarios import Report, ScenarioConfig, list_scenarios, run_scenario
from .transport import (
    InsertionChannel,
    InsertionSpec,
    TransportResult,
    holonomy,
    shuffled_transport,
    transport,
)

__version__ = "0.1.0"
