"""Analysis and simulation toolkit for observer-based servo loops."""

from .analysis import (
    BodeIntegralReport,
    ConstraintReport,
    OuterGainAudit,
    PeakSpec,
    RootLocusRow,
    RootLocusTable,
    audit_outer_gain_condition,
    bode_integral,
    check_constraints,
    critical_parameter,
    max_bandwidth,
    nyquist_s_magnitude,
    nyquist_t_magnitude,
    root_locus,
    sensitivity_peak,
)
from .discretize import (
    DiscretizationRule,
    backward_euler_pd,
    substitute,
    zoh_double_integrator,
)
from .loops import (
    CiCompensator,
    LoopSet,
    PhaseCharacter,
    ci_compensator_dt,
    inner_loop_ct,
    inner_loop_dt,
    outer_loop_ct,
    outer_loop_dt,
)
from .lti import (
    BOUNDARY_TOL,
    ConnectMode,
    FrequencyResponse,
    Polynomial,
    RationalTransferFunction,
    Stability,
    StabilityVerdict,
    classify_roots,
    freq_response,
    is_stable,
    poly_roots,
    reduce_tf,
    tf_connect,
    tf_eval,
)
from .params import DObParams, OuterGains, per_sample_gain
from .sim import (
    DIVERGENCE_LIMIT,
    PlantParams,
    Scenario,
    SimTrace,
    Step,
    Trajectory,
    aggregate_mismatch,
    inner_loop_disturbance_oracle,
    noise_channel_oracle,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "DObParams",
    "OuterGains",
    "per_sample_gain",
    "Polynomial",
    "RationalTransferFunction",
    "FrequencyResponse",
    "ConnectMode",
    "Stability",
    "StabilityVerdict",
    "BOUNDARY_TOL",
    "poly_roots",
    "tf_eval",
    "tf_connect",
    "classify_roots",
    "is_stable",
    "freq_response",
    "reduce_tf",
    "DiscretizationRule",
    "substitute",
    "zoh_double_integrator",
    "backward_euler_pd",
    "LoopSet",
    "PhaseCharacter",
    "CiCompensator",
    "inner_loop_ct",
    "inner_loop_dt",
    "outer_loop_ct",
    "outer_loop_dt",
    "ci_compensator_dt",
    "PeakSpec",
    "ConstraintReport",
    "BodeIntegralReport",
    "RootLocusRow",
    "RootLocusTable",
    "OuterGainAudit",
    "sensitivity_peak",
    "bode_integral",
    "check_constraints",
    "max_bandwidth",
    "root_locus",
    "critical_parameter",
    "audit_outer_gain_condition",
    "nyquist_s_magnitude",
    "nyquist_t_magnitude",
    "PlantParams",
    "Step",
    "Trajectory",
    "Scenario",
    "SimTrace",
    "simulate",
    "inner_loop_disturbance_oracle",
    "noise_channel_oracle",
    "aggregate_mismatch",
    "DIVERGENCE_LIMIT",
]
