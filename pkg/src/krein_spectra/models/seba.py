"""Dirichlet Laplacian on the rectangle (0, a) x (0, b) with tau psi = psi(y).

Levels are -pi^2 (m^2/a^2 + n^2/b^2), grouped by exact equality, stored by
increasing |lambda| up to a mandatory cutoff.  The point is given through its
relative coordinates t = (y1/a, y2/b); exact predicates need both to be exact
(``fractions.Fraction``, ``int`` or a sympy number with decidable rationality,
e.g. ``sympy.sqrt(2)/2`` as an irrational marker).

Tail constants (Weyl counting).  The number of pairs with
pi^2 (m^2/a^2 + n^2/b^2) <= t is at most the area a b t / (4 pi) of the
quarter ellipse, |psi(y)|^2 <= 4/(ab), and Stieltjes integration gives

    sum over pairs with |lambda| >= t of |psi(y)|^2 / lambda^2 <= 2 / (pi t).

Since the (N+1)-th level has |lambda| >= 4 pi N / (ab), the tail after N
levels is at most ab / (2 pi^2 N): C = ab / (2 pi^2), p = 1.
"""

from __future__ import annotations

import math
import warnings
from fractions import Fraction

import numpy as np
import sympy

from ..errors import ExactnessError, ModelValidationError
from ..spectral_core import SpectralModel, TailBound

FLOAT_GROUP_RTOL = 1e-9
NEAR_DEGENERACY_RTOL = 1e-6


class NearDegeneracyWarning(UserWarning):
    """Distinct levels of an incommensurable rectangle are numerically close."""


def _exact(t):
    """Exact rational/irrational description of t, or None for plain floats."""
    if isinstance(t, (int, Fraction)):
        return Fraction(t)
    if isinstance(t, sympy.Basic):
        if t.is_Float:
            return None
        if t.is_rational:
            return Fraction(int(t.p), int(t.q))
        if t.is_rational is False:
            return t
        raise ExactnessError(f"cannot decide whether {t} is rational")
    return None


def _as_float(t):
    return float(t) if not isinstance(t, sympy.Basic) else float(sympy.N(t, 30))


def _numeric(x):
    if isinstance(x, sympy.Basic):
        return float(sympy.N(x, 30))
    return float(x)


def _vanishes(k, t):
    """Exact test of sin(k pi t) == 0 for k >= 1."""
    if isinstance(t, Fraction):
        return k % t.denominator == 0
    return False  # irrational t: k t is never an integer


def _group_pairs(a, b, cutoff):
    """Return [(|lambda|, [(m, n), ...]), ...] sorted by |lambda|."""
    af, bf = _numeric(a), _numeric(b)
    pairs = []
    mmax = int(math.floor(af * math.sqrt(cutoff) / math.pi)) + 1
    for m in range(1, mmax + 1):
        rest = cutoff / math.pi**2 - m * m / af**2
        if rest < 0:
            break
        nmax = int(math.floor(bf * math.sqrt(rest))) + 1
        for n in range(1, nmax + 1):
            val = math.pi**2 * (m * m / af**2 + n * n / bf**2)
            if val <= cutoff * (1 + 1e-12):
                pairs.append((val, m, n))
    if not pairs:
        raise ModelValidationError(f"no level below cutoff {cutoff}")

    ratio = None
    if isinstance(a, (int, Fraction, sympy.Basic)) and isinstance(b, (int, Fraction, sympy.Basic)):
        ratio = sympy.nsimplify(sympy.Rational(1) * sympy.sympify(a) ** 2 / sympy.sympify(b) ** 2)
    groups = {}
    if ratio is not None and ratio.is_rational:
        # m^2/a^2 + n^2/b^2 = (m^2 + n^2 a^2/b^2) / a^2, a^2/b^2 = P/Q
        P, Q = int(ratio.p), int(ratio.q)
        for val, m, n in pairs:
            groups.setdefault(m * m * Q + n * n * P, []).append((val, m, n))
        out = [(min(v for v, _, _ in g), [(m, n) for _, m, n in g]) for g in groups.values()]
    elif ratio is not None and ratio.is_rational is False:
        out = [(val, [(m, n)]) for val, m, n in pairs]
    else:
        pairs.sort()
        out = []
        for val, m, n in pairs:
            if out and abs(val - out[-1][0]) <= FLOAT_GROUP_RTOL * val:
                out[-1][1].append((m, n))
            else:
                if out and abs(val - out[-1][0]) <= NEAR_DEGENERACY_RTOL * val:
                    warnings.warn(
                        f"levels {out[-1][0]!r} and {val!r} are within {NEAR_DEGENERACY_RTOL:g} "
                        "relative distance and are treated as distinct",
                        NearDegeneracyWarning,
                        stacklevel=3,
                    )
                out.append((val, [(m, n)]))
    out.sort(key=lambda g: g[0])
    for _, grp in out:
        grp.sort()
    return out


def build_seba(a, b, point, cutoff, validate=True) -> SpectralModel:
    """Model of the rectangle with a point perturbation, m = 1.

    ``point`` holds the relative coordinates (y1/a, y2/b), each in (0, 1).
    ``a`` and ``b`` may be sympy numbers to make the level grouping exact.
    """
    af, bf = _numeric(a), _numeric(b)
    if not (af > 0 and bf > 0):
        raise ModelValidationError("rectangle sides must be positive")
    if cutoff is None or not cutoff > 0:
        raise ModelValidationError("a positive level cutoff is required")
    t1, t2 = point
    e1, e2 = _exact(t1), _exact(t2)
    f1, f2 = _as_float(t1), _as_float(t2)
    if not (0 < f1 < 1 and 0 < f2 < 1):
        raise ModelValidationError(f"point must lie strictly inside the rectangle, got t = {(f1, f2)}")

    groups = _group_pairs(a, b, float(cutoff))
    amp = 2.0 / math.sqrt(af * bf)
    levels = np.array([-v for v, _ in groups])
    mult = np.array([len(g) for _, g in groups])
    traces = []
    for _, grp in groups:
        row = [amp * math.sin(m * math.pi * f1) * math.sin(n * math.pi * f2) for m, n in grp]
        traces.append(np.array([row]))
    exact = e1 is not None and e2 is not None
    vanish = None
    if exact:
        vanish = [[_vanishes(m, e1) or _vanishes(n, e2) for m, n in grp] for _, grp in groups]

    def exact_rank(idx):
        return 0 if all(vanish[idx]) else 1

    def eigenfunctions(level_index, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        grp = groups[level_index][1]
        return np.stack(
            [amp * np.sin(m * math.pi * pts[:, 0] / af) * np.sin(n * math.pi * pts[:, 1] / bf) for m, n in grp],
            axis=1,
        )

    return SpectralModel(
        levels=levels,
        mult=mult,
        trace_data=tuple(traces),
        boundary_dim=1,
        tail=TailBound(af * bf / (2 * math.pi**2), 1.0),
        eigenfunctions=eigenfunctions,
        trace_scale=amp * np.sqrt(mult),
        exact_rank=exact_rank if exact else None,
        name=f"seba(a={af:g}, b={bf:g}, t=({f1:.6g}, {f2:.6g}))",
        meta={
            "kind": "seba",
            "a": af,
            "b": bf,
            "point": (f1 * af, f2 * bf),
            "relative": (t1, t2),
            "exact_relative": (e1, e2) if exact else None,
            "pairs": [tuple(g) for _, g in groups],
            "vanish": vanish,
            "cutoff": float(cutoff),
        },
        validate=validate,
    )


def seba_common_spectrum_exact(model, cutoff=None):
    """Level indices preserved by every point perturbation, decided exactly.

    A level is preserved iff {psi in H_lambda : psi(y) = 0} is nonzero, i.e.
    iff it is degenerate or its single eigenfunction vanishes at y.  This is
    integer arithmetic on the relative coordinates; no floating point is used.
    """
    vanish = model.meta.get("vanish")
    if model.meta.get("kind") != "seba" or vanish is None:
        raise ExactnessError("exact relative coordinates are required for the exact predicate")
    cutoff = model.meta["cutoff"] if cutoff is None else cutoff
    out = set()
    for idx, (pairs, flags) in enumerate(zip(model.meta["pairs"], vanish)):
        if -model.levels[idx] > cutoff * (1 + 1e-12):
            continue
        if len(pairs) >= 2 or all(flags):
            out.add(idx)
    return out


def all_partners_vanish(model):
    """Level indices where every degenerate partner vanishes at y."""
    vanish = model.meta.get("vanish")
    if vanish is None:
        raise ExactnessError("exact relative coordinates are required")
    return {i for i, flags in enumerate(vanish) if all(flags)}


def rationality_family(model):
    """Levels containing a pair (kq, n) or (m, ks) for t = (p/q, r/s).

    Irrational coordinates contribute no family.  On a rectangle whose
    levels are all simple this coincides with the exact common spectrum.
    """
    ex = model.meta.get("exact_relative")
    if ex is None:
        raise ExactnessError("exact relative coordinates are required")
    e1, e2 = ex
    out = set()
    for idx, pairs in enumerate(model.meta["pairs"]):
        for m, n in pairs:
            if (isinstance(e1, Fraction) and m % e1.denominator == 0) or (
                isinstance(e2, Fraction) and n % e2.denominator == 0
            ):
                out.add(idx)
                break
    return out
