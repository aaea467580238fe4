"""Spectra of self-adjoint extensions through the Krein resolvent formula."""

from .errors import (
    ConfigError,
    DecompositionError,
    ExactnessError,
    ExtensionEigenvalueError,
    InsufficientDataError,
    ModelValidationError,
    PoleError,
    RootBracketError,
    SpectralError,
    SpectrumOverlapError,
    TruncationError,
)
from .extensions import (
    ExtensionParams,
    Subspace,
    b_from_theta,
    block_decompose,
    block_reassemble,
    make_projection,
    principal_angles,
    subspace_intersect,
    theta_from_b,
)
from .preservation import (
    Case,
    PerturbedVector,
    PreservationReport,
    classify_case,
    kernel_k,
    reconstruction_error,
    sufficient_checks,
    surviving_eigenspace,
    survey,
    trace_range,
)
from .spectral_core import (
    EigenCoordVector,
    NewEigenvalue,
    SpectralModel,
    TailBound,
    green_apply,
    new_eigenvalues,
    pencil,
    q_matrix,
    q_perp_matrix,
    resolvent_apply,
)

__version__ = "0.1.0"
