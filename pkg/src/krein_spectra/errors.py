"""Exception types raised by the spectral engine."""


class SpectralError(Exception):
    """Base class for all errors raised by this package."""


class PoleError(SpectralError):
    """The requested spectral parameter sits on (or too close to) a level of A."""

    def __init__(self, z, level_index, level):
        self.z = z
        self.level_index = level_index
        self.level = level
        super().__init__(
            f"spectral parameter {z!r} is within pole tolerance of level "
            f"{level_index} (lambda = {level!r})"
        )


class InsufficientDataError(SpectralError):
    """More levels were requested than the model stores."""

    def __init__(self, requested, available):
        self.requested = requested
        self.available = available
        super().__init__(
            f"insufficient spectral data: {requested} levels requested, "
            f"{available} stored"
        )


class TruncationError(SpectralError):
    """The certified tail bound exceeds the requested tolerance."""

    def __init__(self, bound, tol, n_needed):
        self.bound = bound
        self.tol = tol
        self.n_needed = n_needed
        super().__init__(
            f"truncation insufficient: tail bound {bound:.3e} > tol {tol:.3e}; "
            f"about {n_needed} levels are needed"
        )


class ModelValidationError(SpectralError):
    """A spectral model failed its load-time checks."""


class ExtensionEigenvalueError(SpectralError):
    """The Krein middle matrix is singular: z is an eigenvalue of the extension."""

    def __init__(self, z, smallest_singular_value):
        self.z = z
        self.smallest_singular_value = smallest_singular_value
        super().__init__(
            f"z = {z!r} is an eigenvalue of the extension "
            f"(smallest singular value {smallest_singular_value:.3e})"
        )


class SpectrumOverlapError(SpectralError):
    """A search interval touches the spectrum of the unperturbed operator."""


class RootBracketError(SpectralError):
    """Bracketing or refinement of an eigenvalue branch failed."""

    def __init__(self, message, branch_values=None):
        self.branch_values = branch_values
        super().__init__(message)


class DecompositionError(SpectralError):
    """A subspace split is not orthogonal or does not span the space."""


class ExactnessError(SpectralError):
    """Exact predicates were requested but the model carries no exact data."""


class ConfigError(SpectralError):
    """Configuration text failed to parse or validate.

    ``errors`` is a list of ``(line, message)`` pairs; ``line`` is 1-based or
    ``None`` when no position is known.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = []
        for line, msg in self.errors:
            lines.append(f"line {line}: {msg}" if line else msg)
        super().__init__("; ".join(lines))
