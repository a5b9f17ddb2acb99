"""Anomalous localized resonance for confocal-ellipse plasmonic shells.

The package solves the quasistatic transmission problem for a dielectric
core inside a lossy negative-permittivity shell bounded by confocal
ellipses, classifies whether cloaking due to anomalous localized
resonance (CALR) occurs for a given source, and cross-validates the
closed-form mode solution against an independent Nystrom discretization
of the underlying boundary-integral operator.
"""

from .errors import (
    CalrError,
    ConfigError,
    CurveOverlap,
    DegeneratePoint,
    EigensolveFailure,
    OverflowGuard,
    SingularPoint,
    SourceInsideShell,
    TooFewCoefficients,
    TruncationWarning,
)
from .geometry import (
    ConfocalGeometry,
    CurvePanel,
    EllipticPoint,
    ellipse_curvature,
    metric_factor,
    sample_ellipse,
    to_cartesian,
    to_elliptic,
)
from .solver import (
    CalrDiagnosis,
    CalrVerdict,
    DensityCoefficients,
    ShellConfig,
    SweepRecord,
    adaptive_n_max,
    boundary_forcing,
    calr_classify,
    dissipated_power_direct,
    dissipated_power_spectral,
    eval_gradient_shell,
    eval_potential,
    mode_projections,
    solve_densities,
    sweep,
    z_param,
)
from .source import (
    ChargePair,
    Coefficients,
    Dipole,
    GapConditionReport,
    GapVerdict,
    SourceCoefficients,
    coefficient_projection_oracle,
    convergence_exponent,
    gap_condition_report,
    green_expansion_coefficients,
    newtonian_coefficients,
    newtonian_eval,
    newtonian_gradient,
)
from .spectrum import (
    AsymptoticRates,
    ModeData,
    ModeTable,
    Regime,
    RegimeKind,
    SingleEllipseMode,
    asymptotic_rates,
    block_matrices,
    critical_radius,
    mode_data,
    mode_table,
    s_gram,
    single_ellipse_np,
)

__version__ = "0.1.0"

__all__ = [
    "AsymptoticRates",
    "CalrDiagnosis",
    "CalrError",
    "CalrVerdict",
    "ChargePair",
    "Coefficients",
    "ConfigError",
    "ConfocalGeometry",
    "CurveOverlap",
    "CurvePanel",
    "DegeneratePoint",
    "DensityCoefficients",
    "Dipole",
    "EigensolveFailure",
    "EllipticPoint",
    "GapConditionReport",
    "GapVerdict",
    "ModeData",
    "ModeTable",
    "OverflowGuard",
    "Regime",
    "RegimeKind",
    "ShellConfig",
    "SingleEllipseMode",
    "SingularPoint",
    "SourceCoefficients",
    "SourceInsideShell",
    "SweepRecord",
    "TooFewCoefficients",
    "TruncationWarning",
    "adaptive_n_max",
    "asymptotic_rates",
    "block_matrices",
    "boundary_forcing",
    "calr_classify",
    "coefficient_projection_oracle",
    "convergence_exponent",
    "critical_radius",
    "dissipated_power_direct",
    "dissipated_power_spectral",
    "ellipse_curvature",
    "eval_gradient_shell",
    "eval_potential",
    "gap_condition_report",
    "green_expansion_coefficients",
    "metric_factor",
    "mode_data",
    "mode_projections",
    "mode_table",
    "newtonian_coefficients",
    "newtonian_eval",
    "newtonian_gradient",
    "s_gram",
    "sample_ellipse",
    "single_ellipse_np",
    "solve_densities",
    "sweep",
    "to_cartesian",
    "to_elliptic",
    "z_param",
    "__version__",
]
