"""Spectral data of the base operator A and the Krein machinery built on it.

Conventions
-----------
Inner products are conjugate-linear in the first slot.  For an orthonormal
eigenvector psi_{n,j} with trace t = tau psi_{n,j} in C^m the Green operator
acts by

    <psi_{n,j}, G_z xi> = (t^H xi) / (z - lambda_n),

so that G_z^* G_w = sum_n T_n T_n^H / ((lambda_n - z)(lambda_n - w)) and the
Krein matrix is

    Q(z) = z G_0^* G_z = sum_n z / (lambda_n (lambda_n - z)) T_n T_n^H.

Level indices are 0-based throughout.  Roots of the pencil are found with
SciPy's bracketing solver; everything else is plain NumPy.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (
    ExtensionEigenvalueError,
    InsufficientDataError,
    ModelValidationError,
    PoleError,
    RootBracketError,
    SpectrumOverlapError,
    TruncationError,
)
from .extensions import ExtensionParams

POLE_RTOL = 1e-10
CONSISTENCY_TRUNC = 10_000
GRID_POINTS = 64


def pole_margin(level):
    return POLE_RTOL * max(1.0, abs(level))


@dataclass(frozen=True)
class TailBound:
    """Certified bound sum_{n > N} ||T_n||_F^2 / lambda_n^2 <= C * N**(-p)."""

    constant: float
    exponent: float

    def __call__(self, n_terms):
        if n_terms <= 0:
            return math.inf
        return self.constant * float(n_terms) ** (-self.exponent)


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Purely discrete self-adjoint A with 0 in rho(A) plus a trace map into C^m.

    ``trace_data[n]`` is the m x d_n matrix whose columns are the traces of an
    orthonormal eigenbasis of level n.  Optional hooks let a model supply
    exact formulas; the truncated series is always available and is used to
    cross-check every closed form when the model is built.

    Levels beyond the stored ones are assumed to be at least as large in
    magnitude as the last stored level; ``tail`` must certify that part of
    the series too.
    """

    levels: np.ndarray
    mult: np.ndarray
    trace_data: tuple
    boundary_dim: int
    tail: TailBound
    q_closed_form: Optional[Callable] = None
    q_perp_closed_form: Optional[Callable] = None
    g0_gram_closed_form: Optional[Callable] = None
    green_closed_form: Optional[Callable] = None
    eigenfunctions: Optional[Callable] = None
    trace_scale: Optional[np.ndarray] = None
    exact_rank: Optional[Callable] = None
    name: str = "model"
    meta: dict = field(default_factory=dict)
    validate: bool = True

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float).ravel()
        mult = np.asarray(self.mult, dtype=int).ravel()
        traces = tuple(np.asarray(T, dtype=complex) for T in self.trace_data)
        if not (len(levels) == len(mult) == len(traces)):
            raise ModelValidationError("levels, mult and trace_data differ in length")
        m = int(self.boundary_dim)
        for n, T in enumerate(traces):
            if T.ndim != 2 or T.shape != (m, mult[n]):
                raise ModelValidationError(
                    f"trace_data[{n}] has shape {T.shape}, expected {(m, int(mult[n]))}"
                )
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "mult", mult)
        object.__setattr__(self, "trace_data", traces)
        offsets = np.zeros(len(levels) + 1, dtype=int)
        np.cumsum(mult, out=offsets[1:])
        object.__setattr__(self, "offsets", offsets)
        uniform = len(levels) > 0 and bool(np.all(mult == mult[0]))
        stack = np.stack(traces) if uniform else None
        object.__setattr__(self, "_stack", stack)
        if stack is not None:
            gram = np.einsum("nid,njd->nij", stack, stack.conj())
        else:
            gram = np.stack([T @ T.conj().T for T in traces]) if traces else np.zeros((0, m, m))
        if not np.iscomplexobj(gram) or not np.any(gram.imag):
            gram = gram.real.copy()
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "_tnorm2", np.einsum("nii->n", gram).real)
        object.__setattr__(self, "coeff_level", np.repeat(np.arange(len(levels)), mult))
        if self.validate:
            self._check()

    # -- structure -----------------------------------------------------------

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level_slice(self, n) -> slice:
        return slice(int(self.offsets[n]), int(self.offsets[n + 1]))

    def n_coeffs(self, trunc) -> int:
        return int(self.offsets[trunc])

    def scale_of(self, n) -> float:
        """Reference magnitude for rank decisions on the traces of level n."""
        if self.trace_scale is not None:
            return float(self.trace_scale[n])
        return float(np.sqrt(self._tnorm2[n]))

    def find_pole(self, z):
        """Index of a level within pole tolerance of z, or None."""
        if len(self.levels) == 0:
            return None
        close = np.abs(z - self.levels) < POLE_RTOL * np.maximum(1.0, np.abs(self.levels))
        hits = np.flatnonzero(close)
        return int(hits[0]) if hits.size else None

    def check_pole(self, z):
        n = self.find_pole(z)
        if n is not None:
            raise PoleError(z, n, float(self.levels[n]))

    # -- load-time validation ------------------------------------------------

    def _check(self):
        lv = self.levels
        if len(lv) == 0:
            raise ModelValidationError("model has no levels")
        if not np.all(np.isfinite(lv)):
            raise ModelValidationError("levels must be finite")
        if np.any(np.abs(lv) < POLE_RTOL):
            raise ModelValidationError("0 must lie in the resolvent set: a level equals 0")
        if len(lv) > 1:
            d = np.diff(lv)
            if not (np.all(d > 0) or np.all(d < 0)):
                raise ModelValidationError("levels must be distinct and strictly monotone")
        if np.any(self.mult < 1):
            raise ModelValidationError("multiplicities must be >= 1")
        self._check_tail()
        if self.q_closed_form is not None or self.q_perp_closed_form is not None:
            self._check_closed_forms()

    def _check_tail(self):
        ratio = self._tnorm2 / self.levels**2
        # suffix sums over stored levels only; the bound must dominate them
        suffix = np.cumsum(ratio[::-1])[::-1]
        L = len(ratio)
        samples = sorted({1, 2, 5, 10, 100, 1000, L // 2, L - 1} - {0})
        for N in samples:
            if N >= L:
                continue
            partial = suffix[N]
            if partial > self.tail(N) * (1 + 1e-9) + 1e-300:
                raise ModelValidationError(
                    f"tail bound violated at N={N}: partial sum {partial:.3e} "
                    f"> bound {self.tail(N):.3e}"
                )

    def _sample_points(self):
        lv = self.levels
        pts = [0.5 * lv[0], -0.5 * lv[0]]
        for k in range(min(3, len(lv) - 1)):
            pts.append(0.5 * (lv[k] + lv[k + 1]))
        return [p for p in pts if self.find_pole(p) is None]

    def _check_closed_forms(self):
        N = min(CONSISTENCY_TRUNC, self.n_levels)
        if self.q_closed_form is not None:
            for lam in self._sample_points():
                exact = np.asarray(self.q_closed_form(lam))
                series, err = q_matrix(self, lam, trunc=N, method="series")
                gap = np.linalg.norm(exact - series, 2)
                slack = 1e-9 * (1 + np.linalg.norm(exact, 2))
                if not gap <= err + slack:
                    raise ModelValidationError(
                        f"closed-form Q disagrees with the series at lambda={lam}: "
                        f"{gap:.3e} > tail bound {err:.3e}"
                    )
        if self.q_perp_closed_form is not None:
            for n in range(min(3, N - 1)):
                exact = np.asarray(self.q_perp_closed_form(n))
                series, err = q_perp_matrix(self, n, trunc=N, method="series")
                gap = np.linalg.norm(exact - series, 2)
                slack = 1e-9 * (1 + np.linalg.norm(exact, 2))
                if not gap <= err + slack:
                    raise ModelValidationError(
                        f"closed-form reduced Q disagrees with the series at level {n}: "
                        f"{gap:.3e} > tail bound {err:.3e}"
                    )


@dataclass(frozen=True, eq=False)
class EigenCoordVector:
    """Truncated eigen-expansion plus Green-type components.

    Represents ``sum_k coeffs[k] psi_k + sum_i G_{e_i} xi_i`` where ``coeffs``
    is flat over the eigenvectors of levels ``0 .. trunc-1`` (model offsets)
    and ``charges`` is a tuple of ``(energy, xi)`` pairs.
    """

    coeffs: np.ndarray
    trunc: int
    charges: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex).ravel())
        merged = {}
        for e, xi in self.charges:
            e = complex(e)
            xi = np.asarray(xi, dtype=complex).ravel()
            merged[e] = merged[e] + xi if e in merged else xi.copy()
        object.__setattr__(self, "charges", tuple(merged.items()))

    @classmethod
    def zeros(cls, model, trunc):
        return cls(np.zeros(model.n_coeffs(trunc), dtype=complex), trunc)

    @classmethod
    def from_levels(cls, model, trunc, entries):
        """Build from ``{(n, j): value}``."""
        c = np.zeros(model.n_coeffs(trunc), dtype=complex)
        for (n, j), val in entries.items():
            if n >= trunc:
                raise ValueError(f"level {n} beyond truncation {trunc}")
            c[model.offsets[n] + j] = val
        return cls(c, trunc)

    def level(self, model, n):
        return self.coeffs[model.level_slice(n)] if n < self.trunc else np.zeros(model.mult[n], complex)

    def charge_total(self):
        if not self.charges:
            return None
        return sum(xi for _, xi in self.charges)

    def padded(self, model, trunc):
        if trunc < self.trunc:
            raise ValueError("cannot shrink a vector")
        c = np.zeros(model.n_coeffs(trunc), dtype=complex)
        c[: self.coeffs.size] = self.coeffs
        return EigenCoordVector(c, trunc, self.charges)

    def _combine(self, other, sign):
        n = max(self.coeffs.size, other.coeffs.size)
        c = np.zeros(n, dtype=complex)
        c[: self.coeffs.size] += self.coeffs
        c[: other.coeffs.size] += sign * other.coeffs
        ch = list(self.charges) + [(e, sign * xi) for e, xi in other.charges]
        return EigenCoordVector(c, max(self.trunc, other.trunc), tuple(ch))

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, s):
        s = complex(s)
        return EigenCoordVector(self.coeffs * s, self.trunc,
                                tuple((e, s * xi) for e, xi in self.charges))

    __rmul__ = __mul__


# -- series helpers ------------------------------------------------------------


def _weights(model, z, N):
    lv = model.levels[:N]
    return z / (lv * (lv - z))


def tail_bound(model, z, n_terms):
    """Bound on the operator norm of the Q-series remainder beyond ``n_terms`` levels."""
    if z == 0:
        return 0.0
    az = abs(z)
    beyond = model.levels[n_terms:]
    rho = 0.0
    if beyond.size:
        rho = float(np.max(np.abs(beyond) / np.abs(beyond - z)))
    last = abs(model.levels[-1])
    rho = max(rho, last / (last - az) if last > az else math.inf)
    return az * rho * model.tail(n_terms)


def _pick_trunc(model, z, trunc, tol, bound=tail_bound):
    L = model.n_levels
    if trunc is not None:
        if trunc > L:
            raise InsufficientDataError(trunc, L)
        if trunc < 1:
            raise ValueError("trunc must be >= 1")
        return int(trunc)
    if tol is None:
        return L
    if bound(model, z, L) > tol:
        b = bound(model, z, L)
        need = int(math.ceil(L * (b / tol) ** (1.0 / model.tail.exponent)))
        raise TruncationError(b, tol, need)
    lo, hi = 1, L
    while lo < hi:
        mid = (lo + hi) // 2
        if bound(model, z, mid) <= tol:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _series(model, weights, N, exclude=None):
    w = np.array(weights, dtype=complex if np.iscomplexobj(weights) else float)
    if exclude is not None:
        w[exclude] = 0.0
    return np.tensordot(w, model.gram[:N], axes=(0, 0))


# -- operations -----------------------------------------------------------------


def green_apply(model, z, xi, trunc) -> EigenCoordVector:
    """First ``trunc`` levels of the eigen-expansion of G_z xi."""
    model.check_pole(z)
    if trunc > model.n_levels:
        raise InsufficientDataError(trunc, model.n_levels)
    xi = np.asarray(xi, dtype=complex).ravel()
    if xi.size != model.boundary_dim:
        raise ValueError(f"xi has length {xi.size}, expected {model.boundary_dim}")
    return EigenCoordVector(_green_coeffs(model, z, xi, trunc), trunc)


def trace_adjoint(model, xi, trunc):
    """Flat array of T_n^H xi over the eigenvectors of levels < trunc."""
    if model._stack is not None:
        return np.einsum("nid,i->nd", model._stack[:trunc].conj(), xi).ravel()
    out = np.empty(model.n_coeffs(trunc), dtype=complex)
    for n in range(trunc):
        out[model.level_slice(n)] = model.trace_data[n].conj().T @ xi
    return out


def _green_coeffs(model, z, xi, trunc):
    denom = z - model.levels[:trunc]
    return trace_adjoint(model, xi, trunc) / np.repeat(denom, model.mult[:trunc])


def _trace_of_coeffs(model, coeffs, trunc, scale):
    """sum_n T_n (coeffs_n * scale_n) -> C^m."""
    if model._stack is not None:
        c = coeffs.reshape(trunc, -1) * scale[:, None]
        return np.einsum("nid,nd->i", model._stack[:trunc], c)
    out = np.zeros(model.boundary_dim, dtype=complex)
    for n in range(trunc):
        out += model.trace_data[n] @ (coeffs[model.level_slice(n)] * scale[n])
    return out


def q_matrix(model, lam, trunc=None, tol=None, method="auto"):
    """Krein matrix Q(lam) = lam G_0^* G_lam with a certified error bound.

    ``method`` is ``"auto"`` (closed form when the model has one),
    ``"closed"`` or ``"series"``.  Returns ``(Q, err)`` with ``err`` bounding
    the operator-norm truncation error (0 for closed forms).
    """
    model.check_pole(lam)
    if lam == 0:
        return np.zeros((model.boundary_dim,) * 2, dtype=complex), 0.0
    if method in ("auto", "closed") and model.q_closed_form is not None:
        return np.asarray(model.q_closed_form(lam), dtype=complex), 0.0
    if method == "closed":
        raise ValueError(f"{model.name} has no closed-form Q")
    N = _pick_trunc(model, lam, trunc, tol)
    Q = _series(model, _weights(model, lam, N), N)
    err = tail_bound(model, lam, N)
    if tol is not None and err > tol:
        raise TruncationError(err, tol, N)
    return np.asarray(Q, dtype=complex), err


def q_perp_matrix(model, level_index, trunc=None, tol=None, method="auto"):
    """Reduced Krein matrix lambda_n G_0^* G^perp_{lambda_n}.

    The Q-series at lambda_n with the term of level n removed; Hermitian.
    """
    n = int(level_index)
    if not 0 <= n < model.n_levels:
        raise IndexError(f"level {n} out of range")
    if method in ("auto", "closed") and model.q_perp_closed_form is not None:
        return np.asarray(model.q_perp_closed_form(n), dtype=complex), 0.0
    if method == "closed":
        raise ValueError(f"{model.name} has no closed-form reduced Q")
    lam = float(model.levels[n])
    if model.n_levels == 1:
        return np.zeros((model.boundary_dim,) * 2, dtype=complex), 0.0

    def bound(mdl, z, N):
        return tail_bound(mdl, z, N) if N > n else math.inf

    N = _pick_trunc(model, lam, trunc, tol, bound)
    if N <= n:
        raise InsufficientDataError(n + 1, N)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = _weights(model, lam, N)
    Q = _series(model, w, N, exclude=n)
    err = bound(model, lam, N)
    if tol is not None and err > tol:
        raise TruncationError(err, tol, N)
    return np.asarray(Q, dtype=complex), err


def g0_gram(model):
    """G_0^* G_0 = sum_n T_n T_n^H / lambda_n^2 with its error bound."""
    if model.g0_gram_closed_form is not None:
        return np.asarray(model.g0_gram_closed_form(), dtype=complex), 0.0
    L = model.n_levels
    w = 1.0 / model.levels**2
    return np.asarray(_series(model, w, L), dtype=complex), model.tail(L)


def green_cross(model, z, w):
    """G_{conj z}^* G_w = sum_n T_n T_n^H / ((lambda_n - z)(lambda_n - w))."""
    if z == w == 0:
        return g0_gram(model)[0]
    if z == w:
        N = model.n_levels
        lv = model.levels
        return np.asarray(_series(model, 1.0 / (lv - z) ** 2, N), dtype=complex)
    Qz, _ = q_matrix(model, z)
    Qw, _ = q_matrix(model, w)
    return (Qz - Qw) / (z - w)


def pencil(model, ext: ExtensionParams, z, trunc=None, tol=None, method="auto"):
    """M(z) = Theta + Pi Q(z) Pi on R(Pi), in the coordinates of ``ext.pi_basis``."""
    Q, err = q_matrix(model, z, trunc=trunc, tol=tol, method=method)
    U = ext.pi_basis
    return ext.theta + U.conj().T @ Q @ U, err


def rebase(model, vec: EigenCoordVector, energy=0.0, trunc=None) -> EigenCoordVector:
    """Rewrite every Green component at a single energy.

    Uses G_w xi = G_e xi + (G_w - G_e) xi, where the difference lies in D(A)
    and its expansion decays fast; it is kept to ``trunc`` levels (default:
    all stored levels).
    """
    if not vec.charges:
        return vec
    trunc = model.n_levels if trunc is None else trunc
    out = vec.padded(model, max(trunc, vec.trunc))
    total = np.zeros(model.boundary_dim, dtype=complex)
    c = out.coeffs.copy()
    for w, xi in vec.charges:
        total += xi
        if w == energy:
            continue
        diff = _green_coeffs(model, w, xi, out.trunc) - _green_coeffs(model, energy, xi, out.trunc)
        c += diff
    return EigenCoordVector(c, out.trunc, ((energy, total),))


def inner(model, u: EigenCoordVector, v: EigenCoordVector, trunc=None):
    """<u, v>, conjugate-linear in ``u``."""
    u = rebase(model, u, 0.0, trunc)
    v = rebase(model, v, 0.0, trunc)
    N = max(u.trunc, v.trunc)
    u = u.padded(model, N)
    v = v.padded(model, N)
    total = np.vdot(u.coeffs, v.coeffs)
    a = u.charges[0][1] if u.charges else None
    b = v.charges[0][1] if v.charges else None
    if b is not None:
        total += np.vdot(u.coeffs, _green_coeffs(model, 0.0, b, N))
    if a is not None:
        total += np.conj(np.vdot(v.coeffs, _green_coeffs(model, 0.0, a, N)))
    if a is not None and b is not None:
        total += a.conj() @ g0_gram(model)[0] @ b
    return complex(total)


def norm(model, u: EigenCoordVector, trunc=None) -> float:
    return math.sqrt(max(inner(model, u, u, trunc).real, 0.0))


def _safe_energy(model):
    k = int(np.argmin(np.abs(model.levels)))
    return 0.5 * float(model.levels[k])


def resolvent_apply(model, ext: ExtensionParams, z, phi: EigenCoordVector,
                    trunc=None, tol=1e-12) -> EigenCoordVector:
    """(-A^{Pi,Theta} + z)^{-1} phi through the Krein resolvent formula.

    ``trunc`` only affects series evaluations of Q; the regular part of the
    result keeps the truncation of ``phi``.
    """
    model.check_pole(z)
    if phi.trunc > model.n_levels:
        raise InsufficientDataError(phi.trunc, model.n_levels)
    e = 0.0 if z != 0 else _safe_energy(model)
    phi = rebase(model, phi, e)
    N = phi.trunc
    lv = model.levels[:N]
    denom = (z - lv)
    reg = phi.coeffs / np.repeat(denom, model.mult[:N])
    charges = []
    g = _trace_of_coeffs(model, phi.coeffs, N, 1.0 / denom)
    if phi.charges:
        eta = phi.charges[0][1]
        charges += [(e, eta / (z - e)), (z, -eta / (z - e))]
        if z == e:
            raise ValueError("resolvent point coincides with the rebasing energy")
        g = g + green_cross(model, z, e) @ eta
    if ext.rank:
        M, _ = pencil(model, ext, z, trunc=trunc)
        s = np.linalg.svd(M, compute_uv=False)
        scale = max(s[0], np.linalg.norm(ext.theta, 2), 1e-300)
        if s[-1] <= tol * scale:
            raise ExtensionEigenvalueError(z, float(s[-1]))
        U = ext.pi_basis
        zeta = U @ np.linalg.solve(M, U.conj().T @ g)
        charges.append((z, zeta))
    return EigenCoordVector(reg, N, tuple(charges))


# -- new eigenvalues -------------------------------------------------------------


class NewEigenvalue(NamedTuple):
    value: float
    multiplicity: int
    charges: np.ndarray  # m x k, columns xi with G_lambda xi an eigenvector
    residual: float
    boundary: bool


def _gap_of(model, lo, hi):
    """Closed interval of rho(A) around [lo, hi] (None for an open side)."""
    lv = model.levels
    below = lv[lv < lo]
    above = lv[lv > hi]
    inside = lv[(lv >= lo) & (lv <= hi)]
    if inside.size:
        raise SpectrumOverlapError(f"interval [{lo}, {hi}] contains level(s) {inside[:3].tolist()}")
    left = float(below.max()) if below.size else None
    right = float(above.min()) if above.size else None
    return left, right


def _near_level(model, lam, factor=4.0):
    k = int(np.argmin(np.abs(model.levels - lam)))
    lv = float(model.levels[k])
    return abs(lam - lv) <= factor * pole_margin(lv)


def _clamp(lo, hi, left, right):
    if left is not None:
        lo = max(lo, left + 2 * pole_margin(left))
    if right is not None:
        hi = min(hi, right - 2 * pole_margin(right))
    return lo, hi


def new_eigenvalues(model, ext: ExtensionParams, interval, tol=1e-9, grid=GRID_POINTS,
                    boundary_search=False, threads=1, method="auto", trunc=None):
    """Eigenvalues of A^{Pi,Theta} inside a spectral gap of A.

    Tracks the eigenvalue branches of the Hermitian pencil M(lam) on a grid,
    brackets sign changes per branch and refines each with a bracketing
    solver.  Branches are nondecreasing in lam (dM/dlam = Pi G^*G Pi >= 0), so
    each crosses zero at most once per gap.  With ``boundary_search`` the scan
    is widened by the interval length on both sides (clamped to the enclosing
    gap) and roots found outside the original interval are flagged.
    """
    lo, hi = sorted(float(v) for v in interval)
    if ext.rank == 0:
        _gap_of(model, lo, hi)
        return []
    left, right = _gap_of(model, lo, hi)
    lo, hi = _clamp(lo, hi, left, right)
    core = (lo, hi)
    if boundary_search:
        width = max(hi - lo, tol)
        lo, hi = _clamp(lo - width, hi + width, left, right)
    if not lo < hi:
        raise SpectrumOverlapError(f"interval [{lo}, {hi}] is empty after clamping")

    def branches(lam):
        M, _ = pencil(model, ext, lam, trunc=trunc, method=method)
        return np.linalg.eigvalsh(0.5 * (M + M.conj().T))

    xs = np.linspace(lo, hi, grid)
    vals = np.array([branches(x) for x in xs])
    r = ext.rank
    jobs = []
    for i in range(r):
        mu = vals[:, i]
        for k in range(len(xs) - 1):
            if mu[k] < 0.0 <= mu[k + 1] or (k == 0 and mu[0] == 0.0):
                jobs.append((i, xs[k], xs[k + 1]))
        if abs(mu[-1]) <= tol and not (mu[-2] < 0.0 <= mu[-1]):
            jobs.append((i, xs[-1], xs[-1]))
        if 0.0 < mu[0] <= tol:
            jobs.append((i, xs[0], xs[0]))

    def solve(job):
        i, a, b = job
        if a == b:
            return i, a
        f = lambda lam: branches(lam)[i]
        try:
            root = brentq(f, a, b, xtol=max(tol * 1e-3, 1e-15), rtol=4 * np.finfo(float).eps,
                          maxiter=500)
        except (ValueError, RuntimeError) as exc:
            raise RootBracketError(
                f"branch {i} failed on [{a}, {b}]: {exc}", branch_values=(f(a), f(b))
            ) from exc
        return i, root

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            found = list(pool.map(solve, jobs))
    else:
        found = [solve(j) for j in jobs]
    # a root this close to a level is the level itself (decided by preservation), not a new eigenvalue
    found = [(i, lam) for i, lam in found if not _near_level(model, lam)]
    found.sort(key=lambda t: (t[1], t[0]))

    groups = []
    for i, lam in found:
        if groups and abs(lam - groups[-1][-1][1]) <= 10 * tol * max(1.0, abs(lam)):
            groups[-1].append((i, lam))
        else:
            groups.append([(i, lam)])

    out = []
    for grp in groups:
        idx = sorted({i for i, _ in grp})
        lam = float(np.mean([x for _, x in grp]))
        M, _ = pencil(model, ext, lam, trunc=trunc, method=method)
        w, V = np.linalg.eigh(0.5 * (M + M.conj().T))
        kernel = ext.pi_basis @ V[:, idx]
        resid = float(np.max(np.abs(w[idx])))
        boundary = not (core[0] <= lam <= core[1])
        out.append(NewEigenvalue(lam, len(idx), kernel, resid, boundary))
    return out


def eigenvector_of_new(model, ev: NewEigenvalue, k=0) -> EigenCoordVector:
    """Eigenvector G_lambda xi for the k-th kernel charge of a new eigenvalue."""
    return EigenCoordVector(np.zeros(0), 0, ((ev.value, ev.charges[:, k]),))
