"""Pointwise evaluation of eigen-expansions for plotting and oracle checks."""

from __future__ import annotations

import math

import numpy as np

from ..errors import ModelValidationError, TruncationError
from ..preservation import PerturbedVector
from ..spectral_core import EigenCoordVector, _green_coeffs

_CHUNK = 512


def _series_values(model, coeffs, trunc, points):
    out = np.zeros(len(points), dtype=complex)
    for start in range(0, trunc, _CHUNK):
        for n in range(start, min(trunc, start + _CHUNK)):
            c = coeffs[model.level_slice(n)]
            if np.any(c):
                out += model.eigenfunctions(n, points) @ c
    return out


def eigenfunction_eval(model, vector, points, trunc=None, tol=None):
    """Values of a vector at ``points`` plus an L^2 truncation-error estimate.

    ``vector`` is a :class:`PerturbedVector` or an :class:`EigenCoordVector`.
    Green components use the model's closed form when it has one and the
    eigen-series otherwise.  Points are x values for the interval, ``(edge,
    x)`` pairs for the star graph and ``(y1, y2)`` pairs for the rectangle.
    The estimate bounds the L^2 norm of what the evaluation drops.
    """
    if model.eigenfunctions is None:
        raise ModelValidationError(f"{model.name} provides no real-space eigenfunctions")
    if isinstance(vector, PerturbedVector):
        vector = vector.to_eigencoords(model, trunc)
    if not isinstance(vector, EigenCoordVector):
        raise TypeError("expected a PerturbedVector or EigenCoordVector")
    L = model.n_levels
    N = L if trunc is None else min(int(trunc), L)
    if N >= vector.trunc:
        pending = vector.padded(model, N).coeffs.copy()
        err2 = 0.0
    else:
        cut = model.n_coeffs(N)
        pending = vector.coeffs[:cut].copy()
        err2 = float(np.sum(np.abs(vector.coeffs[cut:]) ** 2))
    closed = model.green_closed_form
    vals = np.zeros(len(points), dtype=complex)
    for energy, xi in vector.charges:
        if closed is not None:
            vals += closed(energy, xi, points)
            continue
        pending += _green_coeffs(model, energy, xi, N)
        lv = model.levels[N:]
        rho = float(np.max(lv**2 / np.abs(lv - energy) ** 2)) if lv.size else 0.0
        last = abs(model.levels[-1])
        if abs(energy) < last:
            rho = max(rho, last**2 / (last - abs(energy)) ** 2)
        else:
            rho = math.inf
        err2 += float(np.vdot(xi, xi).real) * rho * model.tail(N)
    vals += _series_values(model, pending, N, points)
    err = math.sqrt(err2)
    if tol is not None and err > tol:
        need = int(math.ceil(N * (err / tol) ** (2.0 / model.tail.exponent)))
        raise TruncationError(err, tol, need)
    return vals, err
