"""Nonlocal symmetric difference-quotient energies and their limit measures."""

from .energy import (
    EnergyRequest,
    EnergyResult,
    energy,
    local_density,
    pairwise_total,
    residual_energy,
    upper_bound_rhs,
)
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    InsufficientDataError,
    ModelError,
    NldefError,
    ParameterError,
)
from .fields import (
    BumpField,
    DomainBox,
    FieldSpec,
    GroundTruth,
    LinearField,
    PlanarJumpField,
    RigidField,
    SampledField,
    SinField,
    exact_sym_gradient,
    field_from_config,
    ground_truth,
    mollify,
)
from .lab import (
    EpsRecord,
    SweepConfig,
    SweepReport,
    rate_estimate,
    report_write,
    run_sweep,
)
from .measures import (
    DiscreteMeasure,
    TestFunction,
    density_measure,
    ground_truth_measure,
    pair,
    weakstar_gap,
)
from .mollifiers import FAMILIES, MollifierSpec
from .symnorm import (
    SphereRule,
    SymMatrix,
    make_sphere_rule,
    q1_trace_psd,
    q2_closed,
    q_norm,
    q_norm_eigen,
    qp_pow_eigs,
)

__version__ = "0.1.0"

__all__ = [
    "BumpField",
    "ConfigError",
    "DimensionError",
    "DiscreteMeasure",
    "DomainBox",
    "DomainError",
    "EnergyRequest",
    "EnergyResult",
    "EpsRecord",
    "FAMILIES",
    "FieldSpec",
    "GroundTruth",
    "InsufficientDataError",
    "LinearField",
    "ModelError",
    "MollifierSpec",
    "NldefError",
    "ParameterError",
    "PlanarJumpField",
    "RigidField",
    "SampledField",
    "SinField",
    "SphereRule",
    "SweepConfig",
    "SweepReport",
    "SymMatrix",
    "TestFunction",
    "density_measure",
    "energy",
    "exact_sym_gradient",
    "field_from_config",
    "ground_truth",
    "ground_truth_measure",
    "local_density",
    "make_sphere_rule",
    "mollify",
    "pair",
    "pairwise_total",
    "q1_trace_psd",
    "q2_closed",
    "q_norm",
    "q_norm_eigen",
    "qp_pow_eigs",
    "rate_estimate",
    "report_write",
    "residual_energy",
    "run_sweep",
    "upper_bound_rhs",
    "weakstar_gap",
]
