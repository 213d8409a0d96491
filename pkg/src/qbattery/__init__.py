"""Spectral analysis and charging dynamics for a three-level dissipative
quantum battery."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    Observables,
    SystemParams,
    energy,
    ground_state,
    hs_norm,
    l1_coherence,
    lindblad_rhs,
    observables,
    validate_density_matrix,
    validate_params,
    von_neumann_entropy,
)
from .liouville import (  # noqa: F401
    Blocks,
    GapReport,
    Spectrum,
    SuperOpMatrix,
    build_liouvillian,
    devectorize,
    eigendecompose,
    expansion_coefficients,
    extract_blocks,
    gaps,
    spectral_evolve,
    steady_state,
    vectorize,
)
from .dynamics import (  # noqa: F401
    ChargingMetrics,
    EnvelopeFit,
    NotConvergedError,
    Trajectory,
    charging_metrics,
    decay_envelope_fit,
    default_time_grid,
    propagate,
    relaxation_time,
    relaxation_times,
)
from .slow_sector import (  # noqa: F401
    CubicCoefficients,
    EPResult,
    KappaEff,
    ReducedGenerator,
    adiabatic_coherences,
    build_l5_analytic,
    build_m,
    cardano_roots,
    cubic_coefficients,
    delta_slow_analytic,
    ep_trajectory,
    kappa_eff,
    locate_ep,
    sigma_rate,
    slow_spectrum,
    sqrt_scaling_fit,
)
from .sweep import AxisSpec, SweepResult, SweepSpec, run_sweep  # noqa: F401
