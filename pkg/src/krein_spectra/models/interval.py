"""Dirichlet Laplacian A = d^2/dx^2 on (0, a) with trace tau phi = (phi'(0), -phi'(a)).

Levels lambda_n = -(n pi / a)^2 (n = 1, 2, ...; stored at index n - 1) and
psi_n(x) = sqrt(2/a) sin(n pi x / a), so

    tau psi_n = sqrt(2/a) (n pi / a) (1, (-1)^(n-1)).

G_z xi is the solution of g'' = z g with boundary values (g(0), g(a)) = xi;
the closed forms below follow from that.  With x^2 = -z a^2,

    Q(z) = (1/a) [[x cot x - 1, 1 - x/sin x], [1 - x/sin x, x cot x - 1]],

and removing the pole of level n gives

    Q^perp(lambda_n) = (1/a) [[-3/2, 1 + (-1)^n / 2], [1 + (-1)^n / 2, -3/2]].

Tail: ||T_n||^2 / lambda_n^2 = 4a / (pi^2 n^2) and sum_{n>N} n^-2 <= 1/N,
so C = 4a / pi^2, p = 1.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from ..errors import ModelValidationError
from ..spectral_core import SpectralModel, TailBound

DEFAULT_LEVELS = 100_000

# Taylor coefficients in x^2 of x cot x and x / sin x
_XCOT = (1.0, -1.0 / 3, -1.0 / 45, -2.0 / 945, -1.0 / 4725, -2.0 / 93555)
_XCSC = (1.0, 1.0 / 6, 7.0 / 360, 31.0 / 15120, 127.0 / 604800, 73.0 / 3421440)


def _poly(coeffs, t):
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


def xcot_xcsc(x2):
    """(x cot x, x / sin x) as functions of x^2; both are even in x."""
    if isinstance(x2, complex) and x2.imag == 0.0:
        x2 = x2.real
    if abs(x2) < 1e-2:
        return _poly(_XCOT, x2), _poly(_XCSC, x2)
    if isinstance(x2, float):
        if x2 > 0:
            x = math.sqrt(x2)
            s = math.sin(x)
            return x * math.cos(x) / s, x / s
        k = math.sqrt(-x2)
        if k > 30:
            e = math.exp(-k)
            return k * (1 + e * e) / (1 - e * e), 2 * k * e / (1 - e * e)
        return k / math.tanh(k), k / math.sinh(k)
    x = cmath.sqrt(x2)
    if x.imag < 0:
        x = -x
    q = cmath.exp(2j * x)
    h = cmath.exp(1j * x)
    cot = 1j * (q + 1) / (q - 1)
    csc = 2j * h / (q - 1)
    return x * cot, x * csc


def edge_q(a, z):
    """Krein matrix of a single edge of length a."""
    f1, f2 = xcot_xcsc(-complex(z) * a * a if isinstance(z, complex) else -float(z) * a * a)
    d = (f1 - 1.0) / a
    o = (1.0 - f2) / a
    return np.array([[d, o], [o, d]], dtype=complex)


def edge_q_perp(a, level_index):
    n = level_index + 1
    o = (1.0 + 0.5 * (-1) ** n) / a
    return np.array([[-1.5 / a, o], [o, -1.5 / a]], dtype=complex)


def edge_p0(a):
    """Dirichlet-to-Neumann matrix at zero energy."""
    return np.array([[1.0, -1.0], [-1.0, 1.0]]) / a


def edge_g0_gram(a):
    return (a / 6.0) * np.array([[2.0, 1.0], [1.0, 2.0]], dtype=complex)


def edge_green(a, z, xi, x):
    """Values of G_z xi at points x: g'' = z g, g(0) = xi[0], g(a) = xi[1]."""
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=complex)
    if z == 0:
        t = x / a
        return xi[0] * (1 - t) + xi[1] * t
    k = cmath.sqrt(-complex(z))
    if k.imag < 0:
        k = -k
    if k.imag * a > 30:
        # sin(k y)/sin(k a) ~ exp(i k (y - a)) away from y = 0
        r = lambda y: (np.exp(1j * k * (y - a)) - np.exp(-1j * k * (y + a))) / (1 - np.exp(-2j * k * a))
    else:
        s = np.sin(k * a)
        r = lambda y: np.sin(k * y) / s
    return xi[0] * r(a - x) + xi[1] * r(x)


def edge_trace(a, n_levels):
    n = np.arange(1, n_levels + 1)
    amp = math.sqrt(2.0 / a) * n * math.pi / a
    sign = np.where(n % 2 == 1, 1.0, -1.0)
    return np.stack([amp, amp * sign], axis=1)  # (L, 2)


def build_interval(a=math.pi, n_levels=DEFAULT_LEVELS, validate=True) -> SpectralModel:
    """Spectral model of the Dirichlet Laplacian on (0, a), m = 2."""
    a = float(a)
    if not a > 0:
        raise ModelValidationError(f"interval length must be positive, got {a}")
    if n_levels < 2:
        raise ModelValidationError("need at least two levels")
    n = np.arange(1, n_levels + 1)
    levels = -((n * math.pi / a) ** 2)
    tr = edge_trace(a, n_levels)
    trace_data = tuple(tr[:, :, None])

    def eigenfunctions(level_index, x):
        k = (level_index + 1) * math.pi / a
        return (math.sqrt(2.0 / a) * np.sin(k * np.asarray(x, dtype=float)))[:, None]

    return SpectralModel(
        levels=levels,
        mult=np.ones(n_levels, dtype=int),
        trace_data=trace_data,
        boundary_dim=2,
        tail=TailBound(4.0 * a / math.pi**2, 1.0),
        q_closed_form=lambda z: edge_q(a, z),
        q_perp_closed_form=lambda idx: edge_q_perp(a, idx),
        g0_gram_closed_form=lambda: edge_g0_gram(a),
        green_closed_form=lambda z, xi, x: edge_green(a, z, xi, x),
        eigenfunctions=eigenfunctions,
        exact_rank=lambda idx: 1,
        name=f"interval(a={a:g})",
        meta={"kind": "interval", "a": a, "p0": edge_p0(a), "edges": 1},
        validate=validate,
    )


def xi_hat(level_index):
    """Unit vector spanning the trace range of level n (n = index + 1)."""
    n = level_index + 1
    return np.array([1.0, (-1.0) ** (n - 1)]) / math.sqrt(2.0)


def xi_hat_perp(level_index):
    n = level_index + 1
    return np.array([1.0, (-1.0) ** n]) / math.sqrt(2.0)


def preserved_pi_full(b, level_index):
    """Closed-form verdict for Pi = 1: b11 + b22 + 2 (-1)^n Re b12 == 0.

    Works on exact entries (e.g. Fractions) as well as floats; returns the
    left-hand side.
    """
    n = level_index + 1
    b11, b12, b22 = b[0][0], b[0][1], b[1][1]
    re12 = b12.real if hasattr(b12, "real") else b12
    return b11 + b22 + 2 * (-1) ** n * re12
