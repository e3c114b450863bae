"""Verification laboratory for transport identities on evolving domains.

The package represents open regions that move inside a fixed embedded
manifold, computes the boundary geometry (exterior normal, normal
speed, space-time normal, area factors) and checks the integral
identities that relate the time derivative of a bulk integral to bulk
and boundary terms, at quadrature accuracy with explicit tolerances.
"""

from .config import DEFAULT_NUMERICS, ConfigError, Numerics, load_config
from .domain import (
    BoundaryImmersion,
    Box,
    BulkPatch,
    EvolvingDomain,
    ManifoldChart,
    ScalarField,
    flat_chart,
)
from .errors import (
    DegenerateInterval,
    EvaluationFailure,
    LabError,
    MatchFailure,
    NoIntegrationPath,
    OrientationAmbiguous,
    RankDeficient,
    WindowExceeded,
)
from .geometry import (
    GapReport,
    boundary_frame,
    boundary_velocity,
    exterior_unit_normal,
    normal_velocity,
    reparametrization_gap,
)
from .quadrature import (
    GAUSS_TENSOR,
    MONTE_CARLO,
    IntegralEstimate,
    QuadratureRule,
    integrate_boundary,
    integrate_domain,
    integrate_immersed,
)
from .spacetime import (
    DivergenceReport,
    SpaceTimeVectorField,
    divergence_parts,
    divergence_theorem_residual,
    lateral_integral_direct,
    lateral_integral_iterated,
    lateral_normal,
    spacetime_jacobian,
    time_like_extension,
)
from .transport import (
    IntervalReport,
    Reference,
    Scenario,
    SweepResult,
    TransportReport,
    leibniz_check,
    lhs_time_derivative,
    moving_interval_domain,
    reynolds_check,
    rhs_transport,
    run_sweep,
    shift_scenario_time,
    verify_transport,
)
from .scenarios import (
    REGISTRY,
    SMOOTH_SCENARIOS,
    build_all,
    build_scenario,
    divergence_fields,
    scenario_names,
)
from .validation import CheckResult, ValidationReport, validate_scene, validate_scenario

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoundaryImmersion",
    "BulkPatch",
    "CheckResult",
    "ConfigError",
    "DEFAULT_NUMERICS",
    "DegenerateInterval",
    "DivergenceReport",
    "EvaluationFailure",
    "EvolvingDomain",
    "GAUSS_TENSOR",
    "GapReport",
    "IntegralEstimate",
    "IntervalReport",
    "LabError",
    "ManifoldChart",
    "MatchFailure",
    "MONTE_CARLO",
    "NoIntegrationPath",
    "Numerics",
    "OrientationAmbiguous",
    "QuadratureRule",
    "RankDeficient",
    "Reference",
    "REGISTRY",
    "ScalarField",
    "Scenario",
    "SMOOTH_SCENARIOS",
    "SpaceTimeVectorField",
    "SweepResult",
    "TransportReport",
    "ValidationReport",
    "WindowExceeded",
    "boundary_frame",
    "boundary_velocity",
    "build_all",
    "build_scenario",
    "divergence_fields",
    "divergence_parts",
    "divergence_theorem_residual",
    "exterior_unit_normal",
    "flat_chart",
    "integrate_boundary",
    "integrate_domain",
    "integrate_immersed",
    "lateral_integral_direct",
    "lateral_integral_iterated",
    "lateral_normal",
    "leibniz_check",
    "lhs_time_derivative",
    "load_config",
    "moving_interval_domain",
    "normal_velocity",
    "reparametrization_gap",
    "reynolds_check",
    "rhs_transport",
    "run_sweep",
    "scenario_names",
    "shift_scenario_time",
    "spacetime_jacobian",
    "time_like_extension",
    "validate_scene",
    "validate_scenario",
    "verify_transport",
    "__version__",
]
