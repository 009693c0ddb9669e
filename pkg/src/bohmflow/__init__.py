"""Bohm-type trajectory simulation and existence-condition verification.

The package propagates Schrodinger/Pauli and 1d Dirac wavefunctions on
periodic grids, integrates the guidance dynamics dQ/dt = J/j0 driven by the
probability current j = (j0, J), and numerically checks the transport and
integral conditions under which almost every trajectory exists up to the
horizon and the |psi_t|^2 distributions are equivariant.
"""

from .current import (
    CurrentProvider,
    CurrentSample,
    NodePolicy,
    dirac_current,
    divergence_residual,
    schrodinger_current,
    time_reverse,
    validate_current,
    velocity,
)
from .errors import (
    AxiomViolation,
    BadStart,
    BohmflowError,
    BoxTooLarge,
    ConfigError,
    DegenerateDensity,
    DimensionMismatch,
    NodeEncountered,
    OnSingularSet,
    OutOfDomain,
    ProviderWindow,
    TooFewSurvivors,
    UnsupportedField,
    WindowExceeded,
    WrongCodimension,
)
from .geometry import ConfigSpace, SingularSubspace, singular_distance
from .grids import GridSpec, SpinorField, read_field, write_field
from .propagators import (
    HamiltonianSpec,
    dirac_step_1d,
    propagate,
    spectral_gradient,
    split_step_schrodinger,
)
from .providers import GridProvider, ScenarioProvider, build_provider
from .scenarios import SCENARIOS, Scenario, get_scenario, scenario_eval
from .trajectories import (
    DiagnosticRecord,
    IntegratorConfig,
    SCurve,
    Status,
    Trajectory,
    diag_log_density_variation,
    diag_path_variation,
    diag_singular_variation,
    integrate,
    integrate_s_parameterized,
    reverse_roundtrip,
)
from .verify import (
    ComparisonResult,
    ConditionReport,
    Ensemble,
    condition_integrals,
    equivariance_test,
    expected_distance_check,
    hardy_check,
    pushforward,
    sample_initial,
    transport_check,
)

__version__ = "0.1.0"

__all__ = [
    "AxiomViolation",
    "BadStart",
    "BohmflowError",
    "BoxTooLarge",
    "ComparisonResult",
    "ConditionReport",
    "ConfigError",
    "ConfigSpace",
    "CurrentProvider",
    "CurrentSample",
    "DegenerateDensity",
    "DiagnosticRecord",
    "DimensionMismatch",
    "Ensemble",
    "GridProvider",
    "GridSpec",
    "HamiltonianSpec",
    "IntegratorConfig",
    "NodeEncountered",
    "NodePolicy",
    "OnSingularSet",
    "OutOfDomain",
    "ProviderWindow",
    "SCENARIOS",
    "SCurve",
    "Scenario",
    "ScenarioProvider",
    "SingularSubspace",
    "SpinorField",
    "Status",
    "TooFewSurvivors",
    "Trajectory",
    "UnsupportedField",
    "WindowExceeded",
    "WrongCodimension",
    "build_provider",
    "condition_integrals",
    "diag_log_density_variation",
    "diag_path_variation",
    "diag_singular_variation",
    "dirac_current",
    "dirac_step_1d",
    "divergence_residual",
    "equivariance_test",
    "expected_distance_check",
    "get_scenario",
    "hardy_check",
    "integrate",
    "integrate_s_parameterized",
    "propagate",
    "pushforward",
    "read_field",
    "reverse_roundtrip",
    "sample_initial",
    "scenario_eval",
    "schrodinger_current",
    "singular_distance",
    "spectral_gradient",
    "split_step_schrodinger",
    "time_reverse",
    "transport_check",
    "validate_current",
    "velocity",
    "write_field",
]
