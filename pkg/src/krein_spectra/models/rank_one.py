"""User-supplied discrete model with a scalar trace map (m = 1)."""

from __future__ import annotations

import numpy as np

from ..errors import ModelValidationError
from ..spectral_core import SpectralModel, TailBound


def fitted_tail(levels, traces):
    """Smallest C with suffix sums <= C / N over the stored data.

    Only meaningful when the stored levels are the whole spectrum.
    """
    with np.errstate(divide="ignore"):
        ratio = np.array([np.sum(np.abs(t) ** 2) for t in traces]) / np.asarray(levels, float) ** 2
    suffix = np.cumsum(ratio[::-1])[::-1]
    N = np.arange(1, len(ratio))
    c = float(np.max(N * suffix[1:])) if len(ratio) > 1 else 0.0
    return TailBound(c, 1.0)


def build_rank_one(levels, traces, tail=None, exact_zero=None, validate=True) -> SpectralModel:
    """Model from eigenvalues and per-level rows (tau psi_{n,1}, ..., tau psi_{n,d}).

    ``tail`` is a :class:`TailBound` or a ``(C, p)`` pair; when omitted the
    data is taken as the complete spectrum and C is fitted to it.
    ``exact_zero`` optionally lists, per level, which trace values are known
    to vanish exactly.
    """
    levels = np.asarray(levels, dtype=float)
    rows = [np.atleast_1d(np.asarray(t, dtype=complex)).ravel() for t in traces]
    if len(rows) != len(levels):
        raise ModelValidationError("one trace row per level is required")
    if any(r.size == 0 for r in rows):
        raise ModelValidationError("every level needs at least one eigenvector")
    if tail is None:
        tail = fitted_tail(levels, rows)
    elif not isinstance(tail, TailBound):
        tail = TailBound(*map(float, tail))
    exact_rank = None
    if exact_zero is not None:
        flags = [list(map(bool, f)) for f in exact_zero]
        if [len(f) for f in flags] != [r.size for r in rows]:
            raise ModelValidationError("exact_zero must match the trace rows")
        exact_rank = lambda idx: 0 if all(flags[idx]) else 1
    return SpectralModel(
        levels=levels,
        mult=np.array([r.size for r in rows]),
        trace_data=tuple(r[None, :] for r in rows),
        boundary_dim=1,
        tail=tail,
        exact_rank=exact_rank,
        name="rank_one",
        meta={"kind": "rank_one"},
        validate=validate,
    )
