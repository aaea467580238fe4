"""Run configuration: YAML text -> validated :class:`RunConfig`.

Grammar (all sections are mappings; unknown keys are errors)::

    model:
      kind: interval | star | seba | rank_one
      a: pi                  # interval, star, seba (numbers or expressions)
      N: 3                   # star: edge count
      b: 2**(1/4)            # seba: second side
      point: [1/2, sqrt(2)/2]  # seba: relative coordinates (y1/a, y2/b)
      cutoff: 2000           # seba: keep levels with |lambda| <= cutoff
      n_levels: 100000       # interval, star
      levels: [-1, -4]       # rank_one
      traces: [[1], [0.5]]   # rank_one: one row per level
      tail: [C, p]           # rank_one (optional)
    extension:
      pi: full | zero | [[v11, v12, ...], ...]   # vectors spanning R(Pi)
      parametrization: B | theta                 # default B where P0 exists
      matrix: [[...], ...]                       # r x r or m x m (compressed)
    tasks:
      preserve: {levels: 20}                     # first 20, or [1, 3, 5], or all
      new_eigenvalues: {intervals: [[-0.5, -1e-6]], boundary_search: true, grid: 64}
      pencil: {interval: [-0.9, 0.5], points: 200}
      resolvent: {z: -0.3, phi: [[1, 1, 1.0]], levels_out: 10}
      eigenfunction: {source: preserved | new, index: 1, level: 2, points: 101}
      render_bc: true
      common_spectrum: true
    tolerances: {rank: 1e-9, root: 1e-9}
    output: {dir: out}

Complex numbers are written ``a+bi``; strings are read as exact sympy
expressions where exactness matters (Seba coordinates, side lengths).
Vectors given for ``pi`` are used as the basis of R(Pi) when orthonormal and
orthonormalized by Gram-Schmidt (in the given order) otherwise; an r x r
matrix is read in that basis.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import sympy
import yaml

from ..errors import ConfigError

HERMITIAN_SILENT = 1e-12
HERMITIAN_MAX = 1e-6

_SECTIONS = {"model", "extension", "tasks", "tolerances", "output"}
_MODEL_KEYS = {
    "interval": {"kind", "a", "n_levels"},
    "star": {"kind", "N", "a", "n_levels"},
    "seba": {"kind", "a", "b", "point", "cutoff"},
    "rank_one": {"kind", "levels", "traces", "tail"},
}
_TASK_KEYS = {
    "preserve": {"levels"},
    "new_eigenvalues": {"intervals", "boundary_search", "grid"},
    "pencil": {"interval", "points"},
    "resolvent": {"z", "phi", "levels_out"},
    "eigenfunction": {"source", "index", "level", "points"},
    "render_bc": set(),
    "common_spectrum": set(),
}
_COMPLEX_RE = re.compile(r"^[\s+\-0-9.eE]*[ij]?[\s+\-0-9.eE]*[ij]?$")


@dataclass
class RunConfig:
    kind: str
    model: dict
    boundary_dim: int
    pi_basis: np.ndarray
    parametrization: str
    matrix: np.ndarray
    tasks: dict
    rank_tol: float = 1e-9
    root_tol: float = 1e-9
    out_dir: str = "out"
    warnings: list = field(default_factory=list)


# -- YAML with line numbers -----------------------------------------------------


class _Tree:
    """Plain Python view of a YAML document with 1-based key lines."""

    def __init__(self, node):
        self.lines = {}
        self.data = self._convert(node, ())

    def _convert(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = self._scalar(k)
                self.lines[path + (key,)] = k.start_mark.line + 1
                out[key] = self._convert(v, path + (key,))
                self.lines[path + (key,)] = k.start_mark.line + 1
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self._convert(v, path + (i,)) for i, v in enumerate(node.value)]
        return self._scalar(node)

    @staticmethod
    def _scalar(node):
        tag, val = node.tag, node.value
        if tag.endswith(":int"):
            return int(val.replace("_", ""), 0)
        if tag.endswith(":float"):
            return float(val.replace("_", ""))
        if tag.endswith(":bool"):
            return val.lower() in ("true", "yes", "on", "y")
        if tag.endswith(":null"):
            return None
        return val

    def line(self, path):
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)


class _Errors:
    def __init__(self, tree):
        self.tree = tree
        self.items = []

    def add(self, path, msg):
        where = ".".join(str(p) for p in path) if path else "<root>"
        self.items.append((self.tree.line(tuple(path)), f"[{where}] {msg}"))


# -- value parsing ----------------------------------------------------------------


def _sym(text):
    expr = sympy.sympify(str(text).replace("^", "**"), locals={"i": sympy.I, "pi": sympy.pi}, rational=True)
    if not expr.is_number:
        raise ValueError(f"{text!r} is not a number")
    return expr


def parse_number(value, exact=False):
    """Number from YAML scalar; ``exact`` keeps strings as sympy expressions."""
    if isinstance(value, bool) or value is None:
        raise ValueError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return value
    s = str(value).strip()
    if not exact and _COMPLEX_RE.match(s) and any(ch.isdigit() for ch in s):
        try:
            c = complex(s.replace(" ", "").replace("i", "j"))
            return c.real if c.imag == 0 else c
        except ValueError:
            pass
    expr = _sym(s)
    if exact:
        return expr
    c = complex(sympy.N(expr, 30))
    return c.real if c.imag == 0 else c


def _real(value):
    v = parse_number(value)
    if isinstance(v, complex):
        raise ValueError(f"expected a real number, got {value!r}")
    return float(v)


def _matrix(rows, err, path):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        err.add(path, "matrix must be a non-empty list of rows")
        return None
    n = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != n:
            err.add(path + [i], f"malformed matrix row {i + 1} in section {'.'.join(map(str, path))}: "
                                f"length {len(r)}, expected {n}")
            return None
    if len(rows) != n:
        err.add(path, f"matrix in section {'.'.join(map(str, path))} has {len(rows)} rows of length {n}; "
                      "it must be square")
        return None
    try:
        return np.array([[complex(parse_number(v)) for v in r] for r in rows])
    except (ValueError, TypeError, sympy.SympifyError) as exc:
        err.add(path, str(exc))
        return None


def _hermitian(mat, err, path, warn):
    asym = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
    if asym <= HERMITIAN_SILENT:
        return 0.5 * (mat + mat.conj().T)
    if asym <= HERMITIAN_MAX:
        warn.append(f"{'.'.join(map(str, path))}: asymmetry {asym:.3e} removed by symmetrization")
        return 0.5 * (mat + mat.conj().T)
    err.add(path, f"matrix is not Hermitian (asymmetry {asym:.3e} > {HERMITIAN_MAX:g})")
    return None


def _check_keys(mapping, allowed, err, path):
    if not isinstance(mapping, dict):
        err.add(path, "expected a mapping")
        return False
    for k in mapping:
        if k not in allowed:
            err.add(list(path) + [k], f"unknown key {k!r}; allowed: {', '.join(sorted(allowed))}")
    return True


# -- sections -----------------------------------------------------------------------


def _model(sec, err):
    path = ["model"]
    if not _check_keys(sec, set().union(*_MODEL_KEYS.values()), err, path):
        return None, None, None
    kind = sec.get("kind")
    if kind not in _MODEL_KEYS:
        err.add(path + ["kind"], f"kind must be one of {sorted(_MODEL_KEYS)}, got {kind!r}")
        return None, None, None
    for k in sec:
        if k in set().union(*_MODEL_KEYS.values()) and k not in _MODEL_KEYS[kind]:
            err.add(path + [k], f"key {k!r} does not apply to model kind {kind!r}")
    out = {}

    def get(key, conv, default=None, required=False):
        if key not in sec:
            if required:
                err.add(path + [key], f"missing required key {key!r}")
            return default
        try:
            return conv(sec[key])
        except (ValueError, TypeError, sympy.SympifyError) as exc:
            err.add(path + [key], str(exc))
            return None

    def positive_int(v):
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ValueError(f"expected a positive integer, got {v!r}")
        return v

    if kind in ("interval", "star"):
        out["a"] = get("a", _real, np.pi)
        if kind == "star":
            out["N"] = get("N", positive_int, required=True)
        n_levels = get("n_levels", positive_int)
        if n_levels is not None:
            out["n_levels"] = n_levels
        m = 2 if kind == "interval" else 2 * (out.get("N") or 1)
    elif kind == "seba":
        exact = lambda v: parse_number(v, exact=True)
        out["a"] = get("a", exact, 1)
        out["b"] = get("b", exact, 1)
        pt = sec.get("point")
        if not (isinstance(pt, list) and len(pt) == 2):
            err.add(path + ["point"], "point must be a list of two relative coordinates")
        else:
            try:
                out["point"] = tuple(parse_number(v, exact=True) for v in pt)
            except (ValueError, sympy.SympifyError) as exc:
                err.add(path + ["point"], str(exc))
        out["cutoff"] = get("cutoff", _real, required=True)
        m = 1
    else:
        levels = sec.get("levels")
        traces = sec.get("traces")
        if not isinstance(levels, list) or not levels:
            err.add(path + ["levels"], "levels must be a non-empty list")
        if not isinstance(traces, list) or (isinstance(levels, list) and len(traces) != len(levels)):
            err.add(path + ["traces"], "traces must be a list with one row per level")
        if isinstance(levels, list) and isinstance(traces, list):
            try:
                out["levels"] = [_real(v) for v in levels]
                out["traces"] = [[complex(parse_number(v)) for v in (r if isinstance(r, list) else [r])]
                                 for r in traces]
            except (ValueError, sympy.SympifyError) as exc:
                err.add(path, str(exc))
        if "tail" in sec:
            t = sec["tail"]
            if not (isinstance(t, list) and len(t) == 2):
                err.add(path + ["tail"], "tail must be [C, p]")
            else:
                out["tail"] = (_real(t[0]), _real(t[1]))
        m = 1
    return kind, out, m


def _extension(sec, m, kind, err, warn):
    path = ["extension"]
    if sec is None:
        return np.zeros((m, 0), complex), "theta", np.zeros((0, 0), complex)
    if not _check_keys(sec, {"pi", "parametrization", "matrix"}, err, path):
        return None, None, None
    pi = sec.get("pi", "zero")
    if pi == "full":
        U = np.eye(m, dtype=complex)
    elif pi == "zero":
        U = np.zeros((m, 0), complex)
    elif isinstance(pi, list) and all(isinstance(v, list) for v in pi):
        try:
            vecs = np.array([[complex(parse_number(x)) for x in v] for v in pi])
        except (ValueError, sympy.SympifyError) as exc:
            err.add(path + ["pi"], str(exc))
            return None, None, None
        if vecs.ndim != 2 or vecs.shape[1] != m:
            err.add(path + ["pi"], f"every vector of pi must have length {m}")
            return None, None, None
        A = vecs.T
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] <= 1e-9 * s[0]:
            err.add(path + ["pi"], "vectors spanning pi are linearly dependent")
            return None, None, None
        if np.max(np.abs(A.conj().T @ A - np.eye(A.shape[1]))) <= 1e-12:
            U = A
        else:
            Q, R = np.linalg.qr(A)
            U = Q * (np.sign(np.diag(R).real) + (np.diag(R).real == 0))
    else:
        err.add(path + ["pi"], "pi must be 'full', 'zero' or a list of vectors")
        return None, None, None
    r = U.shape[1]
    param = sec.get("parametrization", "B" if kind in ("interval", "star") else "theta")
    if param not in ("B", "theta"):
        err.add(path + ["parametrization"], "parametrization must be 'B' or 'theta'")
        return None, None, None
    if param == "B" and kind not in ("interval", "star"):
        err.add(path + ["parametrization"], f"B parametrization needs a Dirichlet-to-Neumann matrix; {kind} has none")
        return None, None, None
    if "matrix" not in sec:
        mat = np.zeros((r, r), complex)
    else:
        mat = _matrix(sec["matrix"], err, path + ["matrix"])
        if mat is None:
            return None, None, None
        if mat.shape not in ((r, r), (m, m)):
            err.add(path + ["matrix"], f"matrix is {mat.shape[0]}x{mat.shape[0]}; expected {r}x{r} (rank of pi) or {m}x{m}")
            return None, None, None
        mat = _hermitian(mat, err, path + ["matrix"], warn)
        if mat is None:
            return None, None, None
        if mat.shape == (m, m) and r != m:
            mat = U.conj().T @ mat @ U
    return U, param, mat


def _tasks(sec, kind, err):
    path = ["tasks"]
    if not _check_keys(sec, set(_TASK_KEYS), err, path):
        return {}
    out = {}
    for name, body in sec.items():
        if name not in _TASK_KEYS:
            continue
        p = path + [name]
        if body is True or body is None:
            body = {}
        if body is False:
            continue
        if not _check_keys(body, _TASK_KEYS[name], err, p):
            continue
        try:
            out[name] = _task_body(name, body, kind)
        except (ValueError, TypeError, sympy.SympifyError) as exc:
            err.add(p, str(exc))
    if "render_bc" in out and kind not in ("interval", "star"):
        err.add(path + ["render_bc"], f"render_bc is only available for interval and star models, not {kind}")
    if "common_spectrum" in out and kind != "seba":
        err.add(path + ["common_spectrum"], "common_spectrum is only available for seba models")
    if not out:
        err.add(path, "no task requested")
    return out


def _pos_int(v, what):
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ValueError(f"{what} must be a positive integer, got {v!r}")
    return v


def _task_body(name, body, kind):
    if name == "preserve":
        lv = body.get("levels", "all" if kind == "seba" else 20)
        if lv == "all":
            return {"levels": "all"}
        if isinstance(lv, int) and not isinstance(lv, bool):
            return {"levels": list(range(1, _pos_int(lv, "levels") + 1))}
        if isinstance(lv, list):
            return {"levels": sorted({_pos_int(v, "level") for v in lv})}
        raise ValueError("levels must be 'all', a count or a list of 1-based indices")
    if name == "new_eigenvalues":
        ivs = body.get("intervals")
        if not isinstance(ivs, list) or not ivs:
            raise ValueError("intervals must be a non-empty list of [lo, hi] pairs")
        pairs = []
        for iv in ivs:
            if not (isinstance(iv, list) and len(iv) == 2):
                raise ValueError(f"interval {iv!r} is not a [lo, hi] pair")
            lo, hi = _real(iv[0]), _real(iv[1])
            if not lo < hi:
                raise ValueError(f"interval [{lo}, {hi}] is empty")
            pairs.append((lo, hi))
        return {
            "intervals": pairs,
            "boundary_search": bool(body.get("boundary_search", False)),
            "grid": _pos_int(body.get("grid", 64), "grid"),
        }
    if name == "pencil":
        iv = body.get("interval")
        if not (isinstance(iv, list) and len(iv) == 2):
            raise ValueError("interval must be a [lo, hi] pair")
        return {"interval": (_real(iv[0]), _real(iv[1])), "points": _pos_int(body.get("points", 200), "points")}
    if name == "resolvent":
        if "z" not in body:
            raise ValueError("resolvent needs z")
        z = complex(parse_number(body["z"]))
        phi = body.get("phi", [[1, 1, 1.0]])
        entries = []
        for item in phi:
            if not (isinstance(item, list) and len(item) == 3):
                raise ValueError("phi entries are [level, index, value] triples (1-based)")
            entries.append((_pos_int(item[0], "level"), _pos_int(item[1], "index"), complex(parse_number(item[2]))))
        return {"z": z, "phi": entries, "levels_out": _pos_int(body.get("levels_out", 10), "levels_out")}
    if name == "eigenfunction":
        source = body.get("source", "preserved")
        if source not in ("preserved", "new"):
            raise ValueError("source must be 'preserved' or 'new'")
        return {
            "source": source,
            "index": _pos_int(body.get("index", 1), "index"),
            "level": _pos_int(body.get("level", 1), "level"),
            "points": _pos_int(body.get("points", 101), "points"),
        }
    return {}


def parse_config(text) -> RunConfig:
    """Parse and validate configuration text; raises :class:`ConfigError`."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError([(mark.line + 1 if mark else None, f"syntax error: {exc}")]) from None
    if node is None:
        raise ConfigError([(None, "empty configuration")])
    tree = _Tree(node)
    data = tree.data
    err = _Errors(tree)
    warn = []
    if not isinstance(data, dict):
        raise ConfigError([(1, "top level must be a mapping")])
    _check_keys(data, _SECTIONS, err, [])
    if "model" not in data:
        err.add([], "missing section 'model'")
        raise ConfigError(err.items)
    res = _model(data["model"], err)
    if res[0] is None:
        raise ConfigError(err.items)
    kind, model, m = res
    U, param, mat = _extension(data.get("extension"), m, kind, err, warn)
    tasks = _tasks(data.get("tasks", {}), kind, err) if "tasks" in data else {}
    if "tasks" not in data:
        err.add([], "missing section 'tasks'")
    tol = data.get("tolerances", {})
    rank_tol = root_tol = 1e-9
    if _check_keys(tol, {"rank", "root"}, err, ["tolerances"]):
        try:
            rank_tol = _real(tol.get("rank", rank_tol))
            root_tol = _real(tol.get("root", root_tol))
        except (ValueError, sympy.SympifyError) as exc:
            err.add(["tolerances"], str(exc))
    out = data.get("output", {})
    out_dir = "out"
    if _check_keys(out, {"dir"}, err, ["output"]):
        out_dir = str(out.get("dir", out_dir))
    if err.items:
        raise ConfigError(err.items)
    return RunConfig(kind, model, m, U, param, mat, tasks, rank_tol, root_tol, out_dir, warn)
