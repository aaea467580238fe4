"""Explicit boundary conditions of interval and star-graph extensions.

On each edge gamma0 phi = (phi(0), phi(a)) and gamma1 phi = (phi'(0), -phi'(a)).
A couple (Pi, B) imposes

    (1 - Pi) gamma0 phi = 0,      Pi gamma1 phi = B gamma0 phi.
"""

from __future__ import annotations

import numpy as np

from ..errors import ModelValidationError
from ..extensions import ExtensionParams, b_from_theta

_ZERO = 1e-12


def fmt_number(c, digits=6):
    """Compact real or complex rendering, complex as a+bi."""
    c = complex(c)
    re = 0.0 if abs(c.real) < _ZERO else c.real
    im = 0.0 if abs(c.imag) < _ZERO else c.imag
    if im == 0.0:
        return f"{re:.{digits}g}"
    if re == 0.0:
        return f"{im:.{digits}g}i"
    sign = "+" if im >= 0 else "-"
    return f"{re:.{digits}g}{sign}{abs(im):.{digits}g}i"


def _labels(model):
    edges = model.meta.get("edges", 1)
    suffix = (lambda k: "") if model.meta.get("kind") == "interval" else (lambda k: f"_{k + 1}")
    vals, ders = [], []
    for k in range(edges):
        s = suffix(k)
        vals += [f"phi{s}(0)", f"phi{s}(a)"]
        ders += [(f"phi{s}'(0)", 1.0), (f"phi{s}'(a)", -1.0)]
    return vals, ders


def _term(coef, name, first):
    """Signed term; returns '' for a zero coefficient."""
    c = complex(coef)
    if abs(c) < _ZERO:
        return ""
    if abs(c.imag) < _ZERO:
        r = c.real
        body = name if abs(abs(r) - 1) < _ZERO else f"{fmt_number(abs(r))} {name}"
        sign = "-" if r < 0 else "+"
        if first:
            return ("-" if r < 0 else "") + body
        return f" {sign} {body}"
    body = f"({fmt_number(c)}) {name}"
    return body if first else f" + {body}"


def _equation(terms):
    out = ""
    for coef, name in terms:
        t = _term(coef, name, not out)
        out += t
    return (out or "0") + " = 0"


def _normalize_phase(w):
    k = int(np.argmax(np.abs(w) > 1e-12))
    return w * (abs(w[k]) / w[k])


def boundary_conditions_render(ext, model, b=None):
    """Boundary conditions as a list of equation strings.

    ``ext`` is an :class:`ExtensionParams` (then B is computed from Theta) or
    a ``(Subspace-or-basis, B)`` pair.
    """
    kind = model.meta.get("kind")
    if kind not in ("interval", "star"):
        raise ModelValidationError(f"boundary conditions are only rendered for interval and star models, not {kind!r}")
    p0 = model.meta["p0"]
    if isinstance(ext, ExtensionParams):
        U = ext.pi_basis
        _, B = b_from_theta(p0, ext) if ext.rank else (None, np.zeros((0, 0)))
    else:
        pi, B = ext
        U = pi.basis if hasattr(pi, "basis") else np.asarray(pi, dtype=complex)
        B = np.atleast_2d(np.asarray(B, dtype=complex))
    m = model.boundary_dim
    r = U.shape[1]
    if r == 0:
        return ["Dirichlet (unperturbed)"]
    vals, ders = _labels(model)
    lines = []
    if r == m:
        B = U @ B @ U.conj().T
        # rows of gamma1 phi = B gamma0 phi, derivative term placed after the matching value
        for i in range(m):
            terms = []
            for j in range(m):
                terms.append((B[i, j], vals[j]))
                if j == i:
                    name, s = ders[i]
                    terms.append((-s, name))
            lines.append(_equation(terms))
        return lines
    if m == 2 and r == 1:
        w = _normalize_phase(U[:, 0])
        b = complex(B[0, 0])
        lines.append(_equation([(w[1], vals[0]), (-w[0], vals[1])]))
        wc = w.conj()
        lines.append(_equation([
            (b * wc[0], vals[0]), (-wc[0], ders[0][0]),
            (b * wc[1], vals[1]), (wc[1], ders[1][0]),
        ]))
        return lines
    Uc = U.conj()
    # value constraints from the orthogonal complement of R(Pi)
    full, _, _ = np.linalg.svd(U, full_matrices=True)
    V = full[:, r:]
    for k in range(V.shape[1]):
        v = _normalize_phase(V[:, k]).conj()
        lines.append(_equation([(v[j], vals[j]) for j in range(m)]))
    for i in range(r):
        terms = []
        for j in range(m):
            coef_val = (B[i] @ Uc.T)[j]
            terms.append((coef_val, vals[j]))
            name, s = ders[j]
            terms.append((-s * Uc[j, i], name))
        lines.append(_equation(terms))
    return lines
