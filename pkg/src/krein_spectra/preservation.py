"""Which eigenvalues of A survive in A^{Pi,Theta}, and with which eigenvectors.

For a level lambda with eigenspace H and trace range R = R(tau P_lambda) the
surviving eigenvectors are phi = psi + G^perp_lambda xi with psi in H and
xi in R(Pi) n R^perp solving

    Pi tau psi = (Theta + Pi Q^perp(lambda) Pi) xi.

When R(Pi) n R^perp = {0} the charge vanishes and only psi in H with
Pi tau psi = 0 survive.  Both situations are handled by one null-space
computation on H (+) (R(Pi) n R^perp).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import spectral_core as sc
from .extensions import RANK_RTOL, ExtensionParams, Subspace, principal_angles, subspace_intersect


class Case(str, Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    TRACE_RANGE_ZERO = "TraceRangeZero"
    PI_ZERO = "PiZero"


@dataclass(frozen=True, eq=False)
class PerturbedVector:
    """phi = psi + G^perp_lambda xi for the eigenvalue lambda of level ``level``.

    ``psi`` holds coordinates in the stored eigenbasis of that level and
    ``charge`` is xi in C^m (zero when the vector is a plain eigenvector of A).
    """

    level: int
    psi: np.ndarray
    charge: np.ndarray

    @property
    def has_charge(self) -> bool:
        return bool(np.any(self.charge))

    def to_eigencoords(self, model, trunc=None) -> sc.EigenCoordVector:
        """Expansion in eigencoordinates plus a single G_0 component.

        Uses G^perp xi = G_0 xi - P_lambda G_0 xi + (fast-decaying series), so
        the truncation error of the regular part decays much faster than
        that of G^perp xi itself.
        """
        n = self.level
        if not self.has_charge:
            trunc = n + 1 if trunc is None else max(trunc, n + 1)
            c = np.zeros(model.n_coeffs(trunc), dtype=complex)
            c[model.level_slice(n)] = self.psi
            return sc.EigenCoordVector(c, trunc)
        trunc = model.n_levels if trunc is None else trunc
        if trunc <= n:
            raise ValueError("truncation must include the eigenvalue's level")
        lam = float(model.levels[n])
        lv = model.levels[:trunc]
        with np.errstate(divide="ignore", invalid="ignore"):
            w = lam / (lv * (lam - lv))
        w[n] = 1.0 / lam
        c = sc.trace_adjoint(model, self.charge, trunc) * np.repeat(w, model.mult[:trunc])
        c[model.level_slice(n)] += self.psi
        return sc.EigenCoordVector(c, trunc, ((0.0, self.charge),))


@dataclass(eq=False)
class PreservationReport:
    level: int
    value: float
    case_tag: Case
    preserved: bool
    dim_surviving: int
    eigenvectors: list
    diagnostics: dict = field(default_factory=dict)
    tolerance_sensitive: bool = False

    @property
    def residual(self) -> float:
        return float(self.diagnostics.get("residual", 0.0))


def trace_range(model, level_index, rtol=RANK_RTOL, exact=True) -> Subspace:
    """Column span of T_n; exact rank is used when the model declares one."""
    T = model.trace_data[level_index]
    if exact and model.exact_rank is not None:
        k = int(model.exact_rank(level_index))
        if k == 0:
            return Subspace.zero(model.boundary_dim)
        U, _, _ = np.linalg.svd(T, full_matrices=False)
        return Subspace(U[:, :k], rtol)
    return Subspace.span(T, rtol=rtol, scale=model.scale_of(level_index))


def _pi_of(pi):
    if isinstance(pi, ExtensionParams):
        return pi.subspace
    return pi


def kernel_k(model, level_index, pi, rtol=RANK_RTOL, exact=True):
    """Basis (list of coordinate vectors in H_lambda) of {psi : Pi tau psi = 0}."""
    pi = _pi_of(pi)
    n = level_index
    d = int(model.mult[n])
    if pi.dim == 0:
        return list(np.eye(d, dtype=complex))
    A = pi.basis.conj().T @ model.trace_data[n]
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    if exact and model.exact_rank is not None and pi.dim == model.boundary_dim:
        rank = int(model.exact_rank(n))
    else:
        rank = int(np.sum(s > rtol * model.scale_of(n)))
    return [Vh[k].conj() for k in range(rank, d)]


def classify_case(pi, trange: Subspace, tol=RANK_RTOL) -> Case:
    pi = _pi_of(pi)
    if trange.dim == 0:
        return Case.TRACE_RANGE_ZERO
    if pi.dim == 0:
        return Case.PI_ZERO
    inter = subspace_intersect(pi, trange.complement(), tol)
    return Case.CASE2 if inter.dim else Case.CASE1


def _solve(model, n, ext, rtol, exact, qperp):
    T = model.trace_data[n]
    d = int(model.mult[n])
    pi = ext.subspace
    trange = trace_range(model, n, rtol, exact)
    case = classify_case(pi, trange, rtol)
    W = subspace_intersect(pi, trange.complement(), rtol).basis if pi.dim else np.zeros((model.boundary_dim, 0))
    s_dim = W.shape[1]
    U = ext.pi_basis
    r = ext.rank
    diag = {"rtol": rtol, "charge_space_dim": s_dim, "trace_range_dim": trange.dim}
    if r == 0:
        kern = np.eye(d, dtype=complex)
        return case, [(kern[:, k], np.zeros(model.boundary_dim, complex)) for k in range(d)], diag

    Qp, qerr = qperp
    Mp = ext.theta + U.conj().T @ Qp @ U
    F_psi = U.conj().T @ T
    if exact and model.exact_rank is not None and trange.dim == 0:
        F_psi = np.zeros_like(F_psi)
    F_xi = -Mp @ (U.conj().T @ W)
    s_psi = model.scale_of(n) or 1.0
    s_xi = np.linalg.norm(ext.theta, 2) + np.linalg.norm(U.conj().T @ Qp @ U, 2)
    s_xi = s_xi if s_xi > 0 else 1.0
    F = np.hstack([F_psi / s_psi, F_xi / s_xi])
    _, sv, Vh = np.linalg.svd(F, full_matrices=True)
    if exact and model.exact_rank is not None and s_dim == 0 and r == model.boundary_dim:
        rank = int(model.exact_rank(n))
    else:
        # Q_perp error only enters through the charge columns
        thr = max(rtol, qerr / s_xi) if s_dim else rtol
        rank = int(np.sum(sv > thr))
    diag["singular_values"] = sv.tolist()
    diag["q_perp_error"] = qerr
    diag["angles_sin"] = principal_angles(pi, trange.complement())[0].tolist()
    vecs = []
    for k in range(rank, d + s_dim):
        v = Vh[k].conj()
        c = v[:d] / s_psi
        xi = W @ (v[d:] / s_xi) if s_dim else np.zeros(model.boundary_dim, complex)
        vecs.append((c, xi))
    resid = 0.0
    for c, xi in vecs:
        res = np.linalg.norm(F_psi @ c - Mp @ (U.conj().T @ xi))
        resid = max(resid, res / (np.linalg.norm(c) + np.linalg.norm(xi)))
    diag["residual"] = resid
    diag["min_singular_value"] = float(sv[-1]) if F.shape[0] >= F.shape[1] else 0.0
    return case, vecs, diag


def surviving_eigenspace(model, level_index, ext: ExtensionParams, rtol=RANK_RTOL,
                         exact=True, check_sensitivity=True, trunc=None) -> PreservationReport:
    """Decide whether level ``level_index`` of A is an eigenvalue of A^{Pi,Theta}.

    The report is flagged ``tolerance_sensitive`` when the case or the
    surviving dimension changes with the rank tolerance multiplied or divided
    by 10.
    """
    n = int(level_index)
    qperp = (np.zeros((model.boundary_dim,) * 2, complex), 0.0)
    if ext.rank:
        qperp = sc.q_perp_matrix(model, n, trunc=trunc)
    case, vecs, diag = _solve(model, n, ext, rtol, exact, qperp)
    sensitive = False
    if check_sensitivity:
        for f in (10.0, 0.1):
            other_case, other_vecs, _ = _solve(model, n, ext, rtol * f, exact, qperp)
            if other_case != case or len(other_vecs) != len(vecs):
                sensitive = True
    diag["tolerance_sensitive"] = sensitive
    eig = [PerturbedVector(n, c, xi) for c, xi in vecs]
    return PreservationReport(
        level=n,
        value=float(model.levels[n]),
        case_tag=case,
        preserved=len(eig) > 0,
        dim_surviving=len(eig),
        eigenvectors=eig,
        diagnostics=diag,
        tolerance_sensitive=sensitive,
    )


def sufficient_checks(model, level_index, ext: ExtensionParams, rtol=RANK_RTOL, exact=True):
    """Cheap conditions that already guarantee preservation.

    Tags: ``pi_zero``, ``trace_range_zero``, ``trace_range_meets_pi_complement``
    (some trace direction is killed by Pi, so a psi with Pi tau psi = 0
    exists) and ``simple_level_pi_trace_vanishes``.
    """
    n = int(level_index)
    pi = ext.subspace
    trange = trace_range(model, n, rtol, exact)
    tags = []
    if pi.dim == 0:
        tags.append("pi_zero")
    if trange.dim == 0:
        tags.append("trace_range_zero")
    if trange.dim and subspace_intersect(pi.complement(), trange, rtol).dim:
        tags.append("trace_range_meets_pi_complement")
    if model.mult[n] == 1:
        v = ext.pi_basis.conj().T @ model.trace_data[n][:, 0]
        if np.linalg.norm(v) <= rtol * model.scale_of(n) or trange.dim == 0:
            tags.append("simple_level_pi_trace_vanishes")
    return tags


def survey(model, ext, levels, rtol=RANK_RTOL, exact=True, threads=1, trunc=None):
    """Reports for several levels, in level order."""
    levels = list(levels)

    def one(n):
        return surviving_eigenspace(model, n, ext, rtol, exact, trunc=trunc)

    if threads > 1 and len(levels) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(one, levels))
    else:
        reports = [one(n) for n in levels]
    return sorted(reports, key=lambda r: r.level)


def reconstruction_error(model, ext, vec: PerturbedVector, z=None, trunc=None) -> float:
    """Relative defect |z - lambda| * ||R(z) phi - phi / (z - lambda)|| / ||phi||.

    Vanishes (up to truncation) exactly when phi is an eigenvector of the
    extension with eigenvalue lambda; z defaults to a non-real point.
    """
    lam = float(model.levels[vec.level])
    if z is None:
        z = lam + 0.5j * max(1.0, abs(lam))
    phi = vec.to_eigencoords(model, trunc)
    out = sc.resolvent_apply(model, ext, z, phi)
    defect = out - phi * (1.0 / (z - lam))
    return abs(z - lam) * sc.norm(model, defect) / sc.norm(model, phi)
