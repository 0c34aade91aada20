"""TOML run configuration: parsing, validation, defaults and problem construction.

Layout::

    [problem]            preset = "damped-wave-free"  (or an inline [problem.coefficients] table)
    [problem.params]     rho = 2.0, h_scale = {t = [0, 1], values = [1, 1.5]}
    [mesh]               N = 100, quadrature = 2
    [time]               scheme = "implicit-euler", tau = 1e-3, T = 1.0
    [initial]            kind = "sine", mode = 1, amplitude = 1.0
    [forcing]            kind = "zero"
    [output]             dir = "out", snapshots = [0.5]
    [suite]              name = "solve", seed = 0, levels = 3

Matrix fields are written as a number, a row-major list of rows, ``{zeta = [C0,
C1, ...]}`` (polynomial in ``zeta``), ``{breakpoints = [...], pieces = [[C0,
C1, ...], ...]}`` (piecewise polynomial in ``t``) or ``{t = [...], values =
[...]}`` (piecewise-linear table).  Complex entries are strings such as
``"1+2j"``.
"""

from __future__ import annotations

import copy
import os
import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .analysis import manufactured_rhs
from .errors import ParseError, SemanticError, UnknownPreset
from .presets import PRESETS, preset, preset_solution
from .problem import MatrixField, ProblemSpec

__all__ = ["Config", "load_config", "loads_config", "dumps_config", "build_problem", "build_initial", "build_forcing"]

SUITES = ("solve", "verify", "converge", "opcheck")
SCHEMES = ("implicit-euler", "crank-nicolson")
INITIAL_KINDS = ("zero", "sine", "cosine", "constant", "poly", "manufactured")
FORCING_KINDS = ("zero", "constant", "manufactured")
COEFF_KEYS = ("n", "k", "r", "G", "F", "W_R", "P0", "P1", "S", "H")

_DEFAULTS = {
    "mesh": {"N": 100, "quadrature": 2},
    "time": {"scheme": "implicit-euler", "tau": 1e-3, "T": 1.0},
    "initial": {"kind": "sine", "mode": 1, "amplitude": 1.0},
    "forcing": {"kind": "zero"},
    "output": {"dir": "out", "snapshots": []},
    "suite": {"name": "solve", "seed": 0, "levels": 3},
}
_OPTIONAL = {"initial": {"coeffs"}, "forcing": {"value"}}


@dataclass(frozen=True)
class Config:
    """Validated configuration; every section is a plain dict with defaults filled."""

    problem: dict
    mesh: dict
    time: dict
    initial: dict
    forcing: dict
    output: dict
    suite: dict

    def to_dict(self) -> dict:
        return copy.deepcopy({s: getattr(self, s) for s in ("problem", "mesh", "time", "initial", "forcing", "output", "suite")})

    def with_updates(self, **sections) -> "Config":
        d = self.to_dict()
        for sec, vals in sections.items():
            d[sec].update(vals)
        return _validate(d)

    @property
    def preset(self) -> str | None:
        return self.problem.get("preset")


# ------------------------------------------------------------------ scalars
def _number(x, key, allow_complex=False):
    if isinstance(x, bool):
        raise SemanticError(f"{key}: expected a number, got a boolean", key)
    if isinstance(x, (int, float)):
        return x
    if allow_complex and isinstance(x, str):
        try:
            return complex(x.replace(" ", ""))
        except ValueError:
            pass
    raise SemanticError(f"{key}: expected a number, got {x!r}", key)


def _matrix(x, key, shape=None):
    if isinstance(x, list) and x and not isinstance(x[0], list):
        x = [x]  # a single row
    if not isinstance(x, list):
        x = [[x]]
    rows = []
    for i, row in enumerate(x):
        if not isinstance(row, list):
            raise SemanticError(f"{key}: matrix rows must be lists", key)
        rows.append([_number(v, f"{key}[{i}]", allow_complex=True) for v in row])
    if len({len(r) for r in rows}) > 1:
        raise SemanticError(f"{key}: ragged matrix", key)
    M = np.array(rows, dtype=complex)
    if M.size == 0 and shape is not None:
        M = np.zeros(shape, dtype=complex)
    if shape is not None and M.shape != tuple(shape):
        raise SemanticError(f"{key}: expected shape {tuple(shape)}, got {M.shape}", key)
    return M


def parse_field(x, key, shape=None) -> MatrixField:
    """Matrix field from its configuration form (see the module docstring)."""
    if isinstance(x, dict):
        keys = set(x)
        if keys == {"zeta"}:
            cs = [_matrix(c, f"{key}.zeta[{j}]", shape) for j, c in enumerate(_list(x["zeta"], f"{key}.zeta"))]
            if not cs:
                raise SemanticError(f"{key}.zeta: empty coefficient list", f"{key}.zeta")
            return MatrixField.zeta_polynomial(cs, name=key)
        if keys == {"breakpoints", "pieces"}:
            bps = [_number(b, f"{key}.breakpoints") for b in _list(x["breakpoints"], f"{key}.breakpoints")]
            pieces = [[_matrix(c, f"{key}.pieces[{i}]", shape) for c in _list(p, f"{key}.pieces[{i}]")]
                      for i, p in enumerate(_list(x["pieces"], f"{key}.pieces"))]
            if len(bps) != len(pieces) + 1 or any(b <= a for a, b in zip(bps[:-1], bps[1:])):
                raise SemanticError(f"{key}: need len(pieces)+1 increasing breakpoints", f"{key}.breakpoints")
            return MatrixField.piecewise_t(bps, pieces, name=key)
        if keys == {"t", "values"}:
            ts = [_number(b, f"{key}.t") for b in _list(x["t"], f"{key}.t")]
            vs = [_matrix(v, f"{key}.values[{i}]", shape) for i, v in enumerate(_list(x["values"], f"{key}.values"))]
            if len(ts) != len(vs) or len(ts) < 2 or any(b <= a for a, b in zip(ts[:-1], ts[1:])):
                raise SemanticError(f"{key}: need >= 2 increasing knots with one value each", f"{key}.t")
            return MatrixField.table(ts, vs, name=key)
        bad = sorted(keys - {"zeta", "breakpoints", "pieces", "t", "values"})
        raise SemanticError(f"{key}: unknown field form with keys {sorted(keys)}", f"{key}.{bad[0]}" if bad else key)
    return MatrixField.constant(_matrix(x, key, shape), shape, name=key)


def _list(x, key):
    if not isinstance(x, list):
        raise SemanticError(f"{key}: expected a list", key)
    return x


# ---------------------------------------------------------------- validation
def _check_keys(section, data, allowed):
    for key in data:
        if key not in allowed:
            raise SemanticError(f"unknown key {section}.{key}", f"{section}.{key}")


def _validate(raw: dict) -> Config:
    if not isinstance(raw, dict):
        raise SemanticError("configuration must be a table")
    sections = ("problem",) + tuple(_DEFAULTS)
    for sec in raw:
        if sec not in sections:
            raise SemanticError(f"unknown section [{sec}]", sec)
        if not isinstance(raw[sec], dict):
            raise SemanticError(f"[{sec}] must be a table", sec)
    out = {}
    for sec, defaults in _DEFAULTS.items():
        data = dict(raw.get(sec, {}))
        _check_keys(sec, data, set(defaults) | _OPTIONAL.get(sec, set()))
        merged = copy.deepcopy(defaults)
        merged.update(copy.deepcopy(data))
        out[sec] = merged

    m = out["mesh"]
    if not isinstance(m["N"], int) or isinstance(m["N"], bool) or m["N"] < 2:
        raise SemanticError(f"mesh.N must be an integer >= 2, got {m['N']!r}", "mesh.N")
    if m["quadrature"] not in (1, 2, 3) or isinstance(m["quadrature"], bool):
        raise SemanticError(f"mesh.quadrature must be 1, 2 or 3, got {m['quadrature']!r}", "mesh.quadrature")

    t = out["time"]
    if t["scheme"] not in SCHEMES:
        raise SemanticError(f"time.scheme must be one of {SCHEMES}, got {t['scheme']!r}", "time.scheme")
    for key in ("tau", "T"):
        if not _number(t[key], f"time.{key}") > 0:
            raise SemanticError(f"time.{key} must be positive", f"time.{key}")

    ini = out["initial"]
    if ini["kind"] not in INITIAL_KINDS:
        raise SemanticError(f"initial.kind must be one of {INITIAL_KINDS}", "initial.kind")
    if not isinstance(ini["mode"], int) or isinstance(ini["mode"], bool) or ini["mode"] < 0:
        raise SemanticError("initial.mode must be a non-negative integer", "initial.mode")
    amp = ini["amplitude"]
    for j, a in enumerate(amp if isinstance(amp, list) else [amp]):
        _number(a, f"initial.amplitude[{j}]" if isinstance(amp, list) else "initial.amplitude", allow_complex=True)
    if ini["kind"] == "poly" and "coeffs" not in ini:
        raise SemanticError("initial.kind = 'poly' needs initial.coeffs", "initial.coeffs")
    if "coeffs" in ini:
        for j, c in enumerate(_list(ini["coeffs"], "initial.coeffs")):
            for a in c if isinstance(c, list) else [c]:
                _number(a, f"initial.coeffs[{j}]", allow_complex=True)

    fo = out["forcing"]
    if fo["kind"] not in FORCING_KINDS:
        raise SemanticError(f"forcing.kind must be one of {FORCING_KINDS}", "forcing.kind")
    if fo["kind"] == "constant" and "value" not in fo:
        raise SemanticError("forcing.kind = 'constant' needs forcing.value", "forcing.value")

    o = out["output"]
    if not isinstance(o["dir"], str):
        raise SemanticError("output.dir must be a string", "output.dir")
    for s in _list(o["snapshots"], "output.snapshots"):
        _number(s, "output.snapshots")

    s = out["suite"]
    if s["name"] not in SUITES:
        raise SemanticError(f"suite.name must be one of {SUITES}", "suite.name")
    if not isinstance(s["seed"], int) or isinstance(s["seed"], bool) or not 0 <= s["seed"] < 2**64:
        raise SemanticError("suite.seed must be an unsigned 64-bit integer", "suite.seed")
    if not isinstance(s["levels"], int) or isinstance(s["levels"], bool) or s["levels"] < 3:
        raise SemanticError("suite.levels must be an integer >= 3", "suite.levels")

    prob = copy.deepcopy(raw.get("problem", {}))
    _check_keys("problem", prob, {"preset", "params", "coefficients"})
    if ("preset" in prob) == ("coefficients" in prob):
        raise SemanticError("[problem] needs exactly one of 'preset' or 'coefficients'", "problem.preset")
    if "params" in prob and not isinstance(prob["params"], dict):
        raise SemanticError("problem.params must be a table", "problem.params")
    cfg = Config(problem=prob, **out)
    if "coefficients" in prob:
        _check_keys("problem.coefficients", prob["coefficients"], set(COEFF_KEYS))
    if "preset" in prob:
        if prob["preset"] not in PRESETS:
            raise SemanticError(f"unknown preset {prob['preset']!r}", "problem.preset")
        prob.setdefault("params", {})
        _check_keys("problem.params", prob["params"], set(PRESETS[prob["preset"]].parameters))
        cfg = Config(problem=prob, **out)
    build_problem(cfg)  # surfaces field syntax and shape errors now
    return cfg


def loads_config(text: str) -> Config:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(str(exc), getattr(exc, "lineno", None), getattr(exc, "colno", None)) from exc
    return _validate(raw)


def load_config(path) -> Config:
    with open(os.fspath(path), "r", encoding="utf-8") as fh:
        return loads_config(fh.read())


def dumps_config(cfg: Config) -> str:
    return tomli_w.dumps(cfg.to_dict())


# ------------------------------------------------------------- construction
def build_problem(cfg: Config) -> ProblemSpec:
    p, T = cfg.problem, float(cfg.time["T"])
    if "preset" in p:
        params = {}
        for key, val in p.get("params", {}).items():
            f = parse_field(val, f"problem.params.{key}", (1, 1))
            params[key] = f if (f.time_dependent or f.zeta_dependent) else float(np.real(f.eval(0.0, 0.0)[0, 0]))
        try:
            return preset(p["preset"], T=T, **params)
        except UnknownPreset as exc:
            raise SemanticError(str(exc), "problem.preset") from exc
    c = p["coefficients"]
    for key in COEFF_KEYS:
        if key not in c and key not in ("F", "W_R", "P0", "P1"):
            raise SemanticError(f"problem.coefficients.{key} is required", f"problem.coefficients.{key}")
    n, k, r = (c.get(key) for key in ("n", "k", "r"))
    for key, v in (("n", n), ("k", k), ("r", r)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise SemanticError(f"problem.coefficients.{key} must be a non-negative integer", f"problem.coefficients.{key}")
    pre = "problem.coefficients."
    G = _matrix(c["G"], pre + "G", (n, k))
    F = _matrix(c.get("F", []), pre + "F", (2 * k, r)) if r else np.zeros((2 * k, 0))
    try:
        return ProblemSpec(
            n=n, k=k, r=r, G=G, F=F,
            W_R=parse_field(c.get("W_R", []), pre + "W_R", (r, r)),
            P0=parse_field(c.get("P0", [[0.0] * n] * n), pre + "P0", (n, n)),
            P1=parse_field(c.get("P1", [[0.0] * n] * n), pre + "P1", (n, n)),
            S=parse_field(c["S"], pre + "S", (k, k)),
            H=parse_field(c["H"], pre + "H", (n, n)),
            T=T, name="inline",
        )
    except SemanticError:
        raise
    except Exception as exc:  # shape / rank problems surfaced by ProblemSpec
        raise SemanticError(f"problem.coefficients: {exc}", "problem.coefficients") from exc


def _vec(x, n):
    vals = x if isinstance(x, list) else [x] * n
    if len(vals) != n:
        raise SemanticError(f"expected {n} components, got {len(vals)}", "initial.amplitude")
    return np.array([_number(v, "value", allow_complex=True) for v in vals], dtype=complex)


def build_initial(cfg: Config, spec: ProblemSpec):
    """Callable ``zeta -> (m, n)`` for the initial datum ``x0 = H(0) u(0)``."""
    ini, n = cfg.initial, spec.n
    kind = ini["kind"]
    if kind == "manufactured":
        if cfg.preset is None:
            raise SemanticError("initial.kind = 'manufactured' needs a preset", "initial.kind")
        sol = preset_solution(cfg.preset)
        return lambda z: sol.v(0.0, np.atleast_1d(z))
    amp = _vec(ini["amplitude"], n)
    mode = ini["mode"]
    if kind == "zero":
        return lambda z: np.zeros((np.size(z), n))
    if kind == "sine":
        return lambda z: np.sin(mode * np.pi * np.atleast_1d(z))[:, None] * amp[None, :]
    if kind == "cosine":
        return lambda z: np.cos(mode * np.pi * np.atleast_1d(z))[:, None] * amp[None, :]
    if kind == "constant":
        return lambda z: np.ones((np.size(z), 1)) * amp[None, :]
    coeffs = [_vec(c, n) for c in ini["coeffs"]]
    return lambda z: sum(np.atleast_1d(z)[:, None] ** j * c[None, :] for j, c in enumerate(coeffs))


def build_forcing(cfg: Config, spec: ProblemSpec) -> MatrixField:
    fo = cfg.forcing
    if fo["kind"] == "zero":
        return spec.forcing()
    if fo["kind"] == "constant":
        v = _vec(fo["value"], spec.n)
        return MatrixField.constant(v[:, None], name="f")
    if cfg.preset is None:
        raise SemanticError("forcing.kind = 'manufactured' needs a preset", "forcing.kind")
    return manufactured_rhs(spec, preset_solution(cfg.preset))
