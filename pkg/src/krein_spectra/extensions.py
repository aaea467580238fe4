"""Extension parameters (Pi, Theta), subspaces of C^m and block splittings.

Projections are stored by an orthonormal basis of their range, never as
idempotent matrices; the m x m projector is built on demand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DecompositionError

ORTHO_TOL = 1e-12
RANK_RTOL = 1e-9


def _as_columns(vectors, dim=None):
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return np.asarray(vectors, dtype=complex)
    vecs = [np.asarray(v, dtype=complex).ravel() for v in vectors]
    if not vecs:
        if dim is None:
            raise ValueError("dim is required for an empty vector list")
        return np.zeros((dim, 0), dtype=complex)
    return np.column_stack(vecs)


@dataclass(frozen=True, eq=False)
class Subspace:
    """Subspace of C^m held as an m x k matrix with orthonormal columns."""

    basis: np.ndarray
    rtol: float = RANK_RTOL

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=complex)
        if B.ndim != 2:
            raise ValueError("basis must be a 2-D array")
        if B.shape[1] > B.shape[0]:
            raise ValueError("more basis vectors than ambient dimension")
        gram = B.conj().T @ B
        if B.shape[1] and np.max(np.abs(gram - np.eye(B.shape[1]))) > ORTHO_TOL:
            raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", B)

    @property
    def ambient(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def span(cls, vectors, dim=None, rtol=RANK_RTOL, scale=None):
        """Orthonormal basis of the span of ``vectors``.

        Singular values at or below ``rtol * scale`` are dropped; ``scale``
        defaults to the largest singular value.
        """
        A = _as_columns(vectors, dim)
        m = A.shape[0]
        if A.shape[1] == 0 or not np.any(A):
            return cls(np.zeros((m, 0), dtype=complex), rtol)
        U, s, _ = np.linalg.svd(A, full_matrices=False)
        ref = s[0] if scale is None else scale
        k = int(np.sum(s > rtol * ref))
        return cls(U[:, :k], rtol)

    @classmethod
    def full(cls, m):
        return cls(np.eye(m, dtype=complex))

    @classmethod
    def zero(cls, m):
        return cls(np.zeros((m, 0), dtype=complex))

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def complement(self) -> "Subspace":
        m, k = self.basis.shape
        if k == 0:
            return Subspace.full(m)
        if k == m:
            return Subspace.zero(m)
        U, _, _ = np.linalg.svd(self.basis, full_matrices=True)
        return Subspace(U[:, k:], self.rtol)

    def contains(self, other: "Subspace", tol=1e-9) -> bool:
        """True if every direction of ``other`` lies in this subspace."""
        if other.dim == 0:
            return True
        resid = other.basis - self.basis @ (self.basis.conj().T @ other.basis)
        return bool(np.linalg.norm(resid, 2) <= tol)


def make_projection(vectors, dim=None, rtol=RANK_RTOL) -> Subspace:
    """Range of the orthogonal projection onto span(vectors)."""
    return Subspace.span(vectors, dim=dim, rtol=rtol)


def principal_angles(a: Subspace, b: Subspace):
    """Principal angles between ``a`` and ``b`` with the principal vectors in ``a``.

    Returns ``(sines, vectors)`` with sines ascending.  Sines are computed from
    the residual of projecting onto ``b`` rather than from ``1 - cos``, which
    keeps small angles accurate.
    """
    if a.dim == 0 or b.dim == 0:
        return np.zeros(0), np.zeros((a.ambient, 0), dtype=complex)
    Y, _, _ = np.linalg.svd(a.basis.conj().T @ b.basis, full_matrices=True)
    V = a.basis @ Y
    resid = V - b.basis @ (b.basis.conj().T @ V)
    sines = np.clip(np.linalg.norm(resid, axis=0), 0.0, 1.0)
    order = np.argsort(sines, kind="stable")
    return sines[order], V[:, order]


def subspace_intersect(a: Subspace, b: Subspace, tol=RANK_RTOL) -> Subspace:
    """Intersection of two subspaces via principal angles.

    A principal direction belongs to the intersection when the sine of its
    angle is at most ``tol``.
    """
    if a.ambient != b.ambient:
        raise ValueError("subspaces live in different ambient spaces")
    sines, V = principal_angles(a, b)
    k = int(np.sum(sines <= tol))
    if k == 0:
        return Subspace.zero(a.ambient)
    # re-orthonormalize: principal vectors are orthonormal up to rounding
    Q, _ = np.linalg.qr(V[:, :k])
    return Subspace(Q, tol)


@dataclass(frozen=True, eq=False)
class ExtensionParams:
    """The couple (Pi, Theta).

    ``pi_basis`` is m x r with orthonormal columns spanning R(Pi); ``theta``
    is the r x r Hermitian matrix of Theta in that basis.
    """

    pi_basis: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.pi_basis, dtype=complex)
        if U.ndim != 2:
            raise ValueError("pi_basis must be 2-D")
        r = U.shape[1]
        if r and np.max(np.abs(U.conj().T @ U - np.eye(r))) > ORTHO_TOL:
            raise ValueError("pi_basis columns are not orthonormal")
        T = np.asarray(self.theta, dtype=complex).reshape(r, r)
        object.__setattr__(self, "pi_basis", U)
        object.__setattr__(self, "theta", 0.5 * (T + T.conj().T))

    @property
    def dim(self) -> int:
        return self.pi_basis.shape[0]

    @property
    def rank(self) -> int:
        return self.pi_basis.shape[1]

    @property
    def subspace(self) -> Subspace:
        return Subspace(self.pi_basis)

    def projector(self) -> np.ndarray:
        return self.pi_basis @ self.pi_basis.conj().T

    def theta_full(self) -> np.ndarray:
        """Theta as an operator on C^m, zero on the complement of R(Pi)."""
        U = self.pi_basis
        return U @ self.theta @ U.conj().T

    @classmethod
    def zero(cls, m):
        return cls(np.zeros((m, 0), dtype=complex), np.zeros((0, 0)))

    @classmethod
    def full(cls, theta):
        theta = np.atleast_2d(np.asarray(theta, dtype=complex))
        return cls(np.eye(theta.shape[0], dtype=complex), theta)

    @classmethod
    def from_subspace(cls, pi: Subspace, theta):
        return cls(pi.basis, np.asarray(theta, dtype=complex).reshape(pi.dim, pi.dim))


def _compress(mat, U):
    mat = np.atleast_2d(np.asarray(mat, dtype=complex))
    m, r = U.shape
    if mat.shape == (r, r):
        return mat
    if mat.shape == (m, m):
        return U.conj().T @ mat @ U
    raise ValueError(f"matrix of shape {mat.shape} fits neither C^{m} nor R(Pi) (rank {r})")


def theta_from_b(p0, pi, b) -> ExtensionParams:
    """Translate (Pi, B) into (Pi, Theta) with Theta = B + Pi P0 Pi.

    ``pi`` is a :class:`Subspace` (or an m x r orthonormal basis) and ``b`` is
    r x r in the coordinates of that basis.  An m x m ``b`` is compressed onto
    R(Pi) when r < m.
    """
    U = pi.basis if isinstance(pi, Subspace) else np.asarray(pi, dtype=complex)
    p0 = np.asarray(p0, dtype=complex)
    if p0.shape != (U.shape[0], U.shape[0]):
        raise ValueError(f"P0 has shape {p0.shape}, expected {(U.shape[0],) * 2}")
    if U.shape[1] == 0:
        return ExtensionParams.zero(U.shape[0])
    B = _compress(b, U)
    return ExtensionParams(U, B + U.conj().T @ p0 @ U)


def b_from_theta(p0, ext: ExtensionParams):
    """Inverse of :func:`theta_from_b`; returns ``(Subspace, B)``."""
    p0 = np.asarray(p0, dtype=complex)
    if p0.shape != (ext.dim, ext.dim):
        raise ValueError(f"P0 has shape {p0.shape}, expected {(ext.dim,) * 2}")
    U = ext.pi_basis
    B = ext.theta - U.conj().T @ p0 @ U
    return Subspace(U), 0.5 * (B + B.conj().T)


def block_decompose(op, split, tol=ORTHO_TOL):
    """Blocks (L_par, L_par_perp, L_perp_par, L_perp) of ``op`` for a split.

    ``split`` is a pair of subspaces expressed in the coordinates of the
    space ``op`` acts on; they must be orthogonal and span that space.
    """
    first, second = split
    op = np.atleast_2d(np.asarray(op, dtype=complex))
    n = op.shape[0]
    if op.shape != (n, n):
        raise DecompositionError("operator must be square")
    if first.ambient != n or second.ambient != n:
        raise DecompositionError("split subspaces do not match the operator dimension")
    if first.dim + second.dim != n:
        raise DecompositionError(
            f"split does not span: dims {first.dim} + {second.dim} != {n}"
        )
    if first.dim and second.dim:
        overlap = np.max(np.abs(first.basis.conj().T @ second.basis))
        if overlap > tol:
            raise DecompositionError(f"split subspaces are not orthogonal (overlap {overlap:.2e})")
    P, Q = first.basis, second.basis
    return (
        P.conj().T @ op @ P,
        P.conj().T @ op @ Q,
        Q.conj().T @ op @ P,
        Q.conj().T @ op @ Q,
    )


def block_reassemble(blocks, split):
    """Inverse of :func:`block_decompose`."""
    first, second = split
    P, Q = first.basis, second.basis
    par, par_perp, perp_par, perp = blocks
    return (
        P @ par @ P.conj().T
        + P @ par_perp @ Q.conj().T
        + Q @ perp_par @ P.conj().T
        + Q @ perp @ Q.conj().T
    )
