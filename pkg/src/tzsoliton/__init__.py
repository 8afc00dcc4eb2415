"""N-soliton solutions of the Tzitzeica equation on finite-gap backgrounds.

Construction by determinant dressing of a background Baker-Akhiezer vector
on the trigonal curve lambda = k^3, with built-in verification: PDE
residuals in both frames, an independent Goursat integration oracle,
Lax-pair deviations, residue and route-equivalence identities, and
singularity scanning.
"""
from .asymptotics import (
    SolitonKinematics,
    TrackResult,
    growth_exponents,
    kinematics_table,
    track_trajectory,
    trajectory_slope,
    velocity_lab,
    velocity_lightcone,
)
from .background import BackgroundData, check_real_positive, exp_v, v_field
from .config import RunConfig, VerifyOptions, load_config, parse_config
from .core import backend_name
from .dressing import (
    S_CALIBRATION,
    SolitonConfig,
    build_matrix,
    coupling_matrix,
    diag_C,
    evaluate_grid,
    evaluate_grid_lab,
    evaluate_points,
    exp_u,
    exp_u_via_linear_system,
    omega_kernel,
    point_sets,
    residue_identity_check,
)
from .exceptions import (
    CoincidentSpectrumError,
    ConfigError,
    DegenerateTrajectoryError,
    MarkedPointError,
    PeriodMatrixError,
    SingularPointError,
    ThetaDivisorError,
    TrackingError,
    TruncationOverflowError,
    TzsolitonError,
    VelocityPoleError,
)
from .grid import FieldGrid, GridSpec, branch_tracked_log
from .spectral_curve import (
    BAValue,
    BackgroundProvider,
    SpectralPoint,
    VacuumBackground,
    baker_vacuum,
    lam,
    lax_A,
    lax_L,
    pairing,
    preimages,
    principal_cbrt,
    sigma,
    tau,
)
from .theta import (
    DEFAULT_POLICY,
    PeriodMatrix,
    TruncationPolicy,
    theta,
    theta_dirderiv,
    theta_log_d2,
    theta_with_xt_jet,
)
from .verify import (
    VerificationReport,
    goursat_cross_check,
    lax_check,
    make_field_source,
    polish_singularity,
    residual_lab,
    residual_lightcone,
    singularity_scan,
    zero_curvature_gap,
)

__version__ = "0.1.0"

__all__ = [
    "BAValue",
    "BackgroundData",
    "BackgroundProvider",
    "CoincidentSpectrumError",
    "ConfigError",
    "DEFAULT_POLICY",
    "DegenerateTrajectoryError",
    "FieldGrid",
    "GridSpec",
    "MarkedPointError",
    "PeriodMatrix",
    "PeriodMatrixError",
    "RunConfig",
    "S_CALIBRATION",
    "SingularPointError",
    "SolitonConfig",
    "SolitonKinematics",
    "SpectralPoint",
    "ThetaDivisorError",
    "TrackResult",
    "TrackingError",
    "TruncationOverflowError",
    "TruncationPolicy",
    "TzsolitonError",
    "VacuumBackground",
    "VelocityPoleError",
    "VerificationReport",
    "VerifyOptions",
    "backend_name",
    "baker_vacuum",
    "branch_tracked_log",
    "build_matrix",
    "check_real_positive",
    "coupling_matrix",
    "diag_C",
    "evaluate_grid",
    "evaluate_grid_lab",
    "evaluate_points",
    "exp_u",
    "exp_u_via_linear_system",
    "exp_v",
    "goursat_cross_check",
    "growth_exponents",
    "kinematics_table",
    "lam",
    "lax_A",
    "lax_L",
    "lax_check",
    "load_config",
    "make_field_source",
    "omega_kernel",
    "pairing",
    "parse_config",
    "point_sets",
    "polish_singularity",
    "preimages",
    "principal_cbrt",
    "residual_lab",
    "residual_lightcone",
    "residue_identity_check",
    "sigma",
    "singularity_scan",
    "tau",
    "theta",
    "theta_dirderiv",
    "theta_log_d2",
    "theta_with_xt_jet",
    "track_trajectory",
    "trajectory_slope",
    "v_field",
    "velocity_lab",
    "velocity_lightcone",
    "zero_curvature_gap",
    "__version__",
]
