"""Equilateral star graph: N copies of the Dirichlet interval (0, a).

Boundary space C^{2N} ordered edge by edge: coordinates 2k, 2k+1 are the
two ends of edge k.  Every level -(n pi / a)^2 has multiplicity N and all
closed forms are block-diagonal copies of the single-edge ones.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import block_diag

from ..errors import ModelValidationError
from ..spectral_core import SpectralModel, TailBound
from . import interval as iv

DEFAULT_LEVELS = 20_000


def _blocks(mat, N):
    return block_diag(*([mat] * N))


def _split(points):
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    return pts[:, 0].astype(int), pts[:, 1]


def build_star_graph(N, a=math.pi, n_levels=DEFAULT_LEVELS, validate=True) -> SpectralModel:
    """Spectral model of N decoupled Dirichlet edges of length a, m = 2N."""
    if int(N) != N or N < 1:
        raise ModelValidationError(f"edge count must be a positive integer, got {N}")
    N = int(N)
    a = float(a)
    if not a > 0:
        raise ModelValidationError(f"edge length must be positive, got {a}")
    if n_levels < 2:
        raise ModelValidationError("need at least two levels")
    n = np.arange(1, n_levels + 1)
    levels = -((n * math.pi / a) ** 2)
    edge = iv.edge_trace(a, n_levels)  # (L, 2)
    trace = np.zeros((n_levels, 2 * N, N))
    for k in range(N):
        trace[:, 2 * k : 2 * k + 2, k] = edge

    def green(z, xi, points):
        edge_idx, x = _split(points)
        xi = np.asarray(xi, dtype=complex)
        out = np.zeros(len(x), dtype=complex)
        for k in np.unique(edge_idx):
            sel = edge_idx == k
            out[sel] = iv.edge_green(a, z, xi[2 * k : 2 * k + 2], x[sel])
        return out

    def eigenfunctions(level_index, points):
        edge_idx, x = _split(points)
        kk = (level_index + 1) * math.pi / a
        vals = np.zeros((len(x), N))
        vals[np.arange(len(x)), edge_idx] = math.sqrt(2.0 / a) * np.sin(kk * x)
        return vals

    return SpectralModel(
        levels=levels,
        mult=np.full(n_levels, N, dtype=int),
        trace_data=tuple(trace),
        boundary_dim=2 * N,
        tail=TailBound(N * 4.0 * a / math.pi**2, 1.0),
        q_closed_form=lambda z: _blocks(iv.edge_q(a, z), N),
        q_perp_closed_form=lambda idx: _blocks(iv.edge_q_perp(a, idx), N),
        g0_gram_closed_form=lambda: _blocks(iv.edge_g0_gram(a), N),
        green_closed_form=green,
        eigenfunctions=eigenfunctions,
        exact_rank=lambda idx: N,
        name=f"star(N={N}, a={a:g})",
        meta={"kind": "star", "a": a, "edges": N, "p0": _blocks(iv.edge_p0(a), N)},
        validate=validate,
    )


def parallel_basis(N, level_index):
    """Orthonormal basis (columns) of the trace range: xi_hat on each edge."""
    B = np.zeros((2 * N, N))
    for k in range(N):
        B[2 * k : 2 * k + 2, k] = iv.xi_hat(level_index)
    return B


def perp_basis(N, level_index):
    B = np.zeros((2 * N, N))
    for k in range(N):
        B[2 * k : 2 * k + 2, k] = iv.xi_hat_perp(level_index)
    return B


def b_perp(b, level_index):
    """N x N compression of an m x m matrix B onto the perp directions."""
    b = np.asarray(b, dtype=complex)
    P = perp_basis(b.shape[0] // 2, level_index)
    return P.T @ b @ P
