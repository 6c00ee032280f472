"""Split-step Fourier schemes (Lie, Strang, filtered Lie) for NLS with rough data."""

from .analysis import (
    AdmissiblePair,
    ConvergenceReport,
    admissible_check,
    bernstein_suite,
    discrete_strichartz_norm,
    filter_tail,
    fit_order,
    mass_drift,
    measure_error,
    q0r0,
    q1r1,
    radial_range_check,
    theorem2_bound,
    verify_mvt,
)
from .flows import apply_filter, chi, linear_flow, make_filter, nonlinear_flow
from .grid import (
    ComplexField,
    DomainTruncationWarning,
    SpectralGrid,
    HlogS,
    Hs,
    L2,
    Lr,
    dump_field,
    forward_transform,
    inverse_transform,
    load_field,
    make_grid,
    norm,
)
from .initial_data import DataSpec, exact_plane_wave, gaussian, hs_rough, phi_alpha, plane_wave
from .integrators import (
    FilterRule,
    NumericGuardError,
    OracleWarning,
    SplitConfig,
    Trajectory,
    duhamel_residual,
    evolve,
    reference_solution,
)

__version__ = "0.1.0"
