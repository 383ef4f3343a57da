"""Numerical laboratory for stable and finite-Morse-index radial solutions
of semilinear elliptic equations on the unit ball."""

from .degenerate import (
    DegenerateSpec,
    SignedSolutionReport,
    inner_ball_eigenvalue,
    lambda1_curve,
    signed_solutions,
    weighted_eigen,
)
from .errors import (
    ContractViolationError,
    DataError,
    DegeneracyError,
    EllstabError,
    ExistencePreconditionError,
    ExtrapolationError,
    NonlinearityClassError,
    ParameterError,
    SingularityError,
    StabilityBoundaryError,
    StepSizeError,
)
from .estimates import (
    DiagnosticsReport,
    EstimateCheck,
    RadialTestFunction,
    check_pointwise_estimate,
    counterexample_profile,
    diagnostics,
    h1_norm,
    hardy_stability_margin,
    key_inequality,
    key_test_suite,
    linear_cap,
    lp_norm,
    origin_ramp,
    power_cap,
    quotient_scaling_fit,
    ur_band_bound,
)
from .gelfand import (
    BranchPoint,
    BranchReport,
    extremal_diagnostics,
    extremal_parameter,
    joseph_lundgren_power,
    shoot,
    singular_extremal_profile,
    trace_branch,
)
from .grid import (
    ProblemParams,
    RadialGrid,
    ball_volume,
    integrate,
    make_grid,
    sphere_area,
)
from .profiles import (
    ConstantNonlinearity,
    ExponentialNonlinearity,
    HHExponents,
    LinearNonlinearity,
    Nonlinearity,
    PowerNonlinearity,
    PsiProfile,
    RadialProfile,
    SignedPowerNonlinearity,
    TabulatedNonlinearity,
    explicit_hh_solution,
    gamma_exponent,
    gamma_value,
    hh_residual,
    psi_profile,
    recover_nonlinearity,
    s_alpha_value,
    synthesize_solution,
)
from .spectral import (
    MorseReport,
    QuadraticFormSpec,
    SpectralPencil,
    angular_multiplicity,
    assemble_pencil,
    cc_quotient,
    full_morse_index,
    hardy_check,
    morse_index,
    smallest_eigenvalues,
)

__version__ = "0.1.0"
