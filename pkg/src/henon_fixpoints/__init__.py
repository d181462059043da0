"""Fixed-point algebra and escape-rate dynamics for compositions of generalized Hénon maps."""

from .coefficients import GaussianRational
from .dynamics import (
    EscapeOptions,
    GreenFunction,
    SliceSpec,
    backward_filtration_radius,
    filtration_radius,
    green_minus,
    green_plus,
    in_k_minus,
    in_k_plus,
    render_slice,
    write_csv,
    write_pgm,
)
from .henon import (
    CompositionError,
    HenonComposition,
    HenonFactor,
    composition_from_dict,
    composition_to_dict,
    differential_numeric,
    differential_symbolic,
    fixed_point_system,
    load_composition,
    multiplier_polynomial,
    random_composition,
    rotate,
    span_profile_check,
)
from .ideals import (
    decomposition_verify,
    membership,
    phi_membership,
    shifted_phi_membership,
    verify_groebner_system,
)
from .poly import (
    GRLEX,
    CancelToken,
    PolyRing,
    Polynomial,
    buchberger_verify,
    divide_multivariate,
    s_polynomial,
)
from .solver import (
    FixedPointSolver,
    check_shared_multipliers,
    classify_fixed_point,
    multiplication_matrices,
    quotient_basis,
    solve_fixed_points,
)

__version__ = "0.1.0"
