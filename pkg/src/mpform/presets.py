"""Named problem instances: heat equation and damped wave with standard boundary sets.

Heat presets use ``n = k = 1``, ``G = 1``, ``P0 = P1 = 0``.  The damped wave
``rho w_tt - (E w_z)_z - (k w_tz)_z = 0`` is written for ``x = (rho w_t,
w_z)`` with ``H = diag(1/rho, E)``, ``P1 = [[0, 1], [1, 0]]``,
``G = (1, 0)^T`` and ``S = k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analysis import ManufacturedSolution
from .errors import UnknownPreset
from .problem import MatrixField, ProblemSpec

__all__ = ["PRESETS", "PresetInfo", "preset", "preset_names", "preset_solution", "scalar_field"]

_ISQ2 = 1.0 / np.sqrt(2.0)

# name -> (family, r, F, description)
_BOUNDARY = {
    "heat-dirichlet": ("heat", 0, np.zeros((2, 0)), "u(0) = u(1) = 0"),
    "heat-neumann": ("heat", 2, np.eye(2), "u'(0) = u'(1) = 0"),
    "heat-robin": ("heat", 2, np.eye(2), "S u'(1) + w u(1) = 0, -S u'(0) + w u(0) = 0"),
    "heat-periodic": ("heat", 1, _ISQ2 * np.ones((2, 1)), "u(0) = u(1), u'(0) = u'(1)"),
    "damped-wave-dirichlet": ("wave", 0, np.zeros((2, 0)), "w_t(0) = w_t(1) = 0"),
    "damped-wave-free": ("wave", 2, np.eye(2), "(k w_tz + E w_z)(0) = (k w_tz + E w_z)(1) = 0"),
    "damped-wave-periodic": ("wave", 1, _ISQ2 * np.ones((2, 1)), "w_t(0) = w_t(1), flux periodic"),
}

_DEFAULTS = {
    "heat": {"S": 1.0, "w": 1.0, "h_scale": 1.0},
    "wave": {"rho": 1.0, "E": 1.0, "k": 1.0, "h_scale": 1.0},
}


@dataclass(frozen=True)
class PresetInfo:
    name: str
    family: str
    r: int
    description: str
    parameters: tuple


PRESETS = {
    name: PresetInfo(name, fam, r, desc, tuple(sorted(_DEFAULTS[fam])))
    for name, (fam, r, _, desc) in _BOUNDARY.items()
}


def preset_names() -> list[str]:
    return list(_BOUNDARY)


def scalar_field(value, name: str = "") -> MatrixField:
    """``1 x 1`` field from a number, a callable of ``t`` or an existing field."""
    if isinstance(value, MatrixField):
        if value.shape != (1, 1):
            raise ValueError(f"{name or 'scalar'} field must be 1 x 1")
        return value
    if callable(value):
        fn: Callable = value
        return MatrixField.from_callable(lambda t, z: np.full((np.size(z), 1, 1), fn(t), dtype=complex), (1, 1),
                                         vectorized=True, zeta_dependent=False, name=name)
    return MatrixField.constant([[value]], name=name)


def _combine(parts: dict, build: Callable, shape, name: str) -> MatrixField:
    """Field ``build(values)`` from named ``1 x 1`` fields, constant whenever all parts are.

    ``build`` maps a dict of value arrays of shape ``(m,)`` to an ``(m, *shape)`` stack.
    """
    flds = {key: scalar_field(v, key) for key, v in parts.items()}
    if not any(f.time_dependent or f.zeta_dependent for f in flds.values()):
        const = build({key: f.eval(0.0, np.zeros(1))[:, 0, 0] for key, f in flds.items()})[0]
        return MatrixField.constant(const, shape, name=name)

    def value(t, z):
        return build({key: f.eval(t, z)[:, 0, 0] for key, f in flds.items()})

    zdep = any(f.zeta_dependent for f in flds.values())
    bps = tuple(sorted({b for f in flds.values() for b in f.t_breakpoints}))
    return MatrixField(
        shape=tuple(shape), func=value,
        dzeta=None if zdep else (lambda t, z: np.zeros((z.size,) + tuple(shape), dtype=complex)),
        t_breakpoints=bps, time_dependent=any(f.time_dependent for f in flds.values()),
        zeta_dependent=zdep, name=name,
    )


def _wave_h(v):
    out = np.zeros((v["h"].size, 2, 2), dtype=complex)
    out[:, 0, 0] = v["h"] / v["rho"]
    out[:, 1, 1] = v["h"] * v["E"]
    return out


def preset(name: str, T: float = 1.0, **params) -> ProblemSpec:
    """Problem for a named preset, parameters overriding the defaults.

    Heat: ``S`` (diffusion), ``w`` (Robin weight), ``h_scale``.  Damped wave:
    ``rho``, ``E``, ``k``, ``h_scale``.  Each parameter is a number, a callable
    of ``t`` or a ``1 x 1`` :class:`MatrixField`; ``h_scale`` multiplies ``H``.
    """
    if name not in _BOUNDARY:
        raise UnknownPreset(f"unknown preset {name!r}; known: {', '.join(_BOUNDARY)}")
    fam, r, F, _ = _BOUNDARY[name]
    p = dict(_DEFAULTS[fam])
    unknown = set(params) - set(p)
    if unknown:
        raise TypeError(f"preset {name!r} has no parameter(s) {sorted(unknown)}")
    p.update(params)
    if fam == "heat":
        w = p["w"] if name == "heat-robin" else 0.0
        return ProblemSpec(
            n=1, k=1, r=r, G=[[1.0]], F=F,
            W_R=_combine({"w": w}, lambda v: v["w"][:, None, None] * np.eye(r), (r, r), "W_R"),
            P0=MatrixField.constant([[0.0]], name="P0"),
            P1=MatrixField.constant([[0.0]], name="P1"),
            S=_combine({"S": p["S"]}, lambda v: v["S"][:, None, None], (1, 1), "S"),
            H=_combine({"h": p["h_scale"]}, lambda v: v["h"][:, None, None], (1, 1), "H"),
            T=T, name=name,
        )
    return ProblemSpec(
        n=2, k=1, r=r, G=[[1.0], [0.0]], F=F,
        W_R=MatrixField.constant(np.zeros((r, r)), (r, r), name="W_R"),
        P0=MatrixField.constant(np.zeros((2, 2)), name="P0"),
        P1=MatrixField.constant([[0.0, 1.0], [1.0, 0.0]], name="P1"),
        S=_combine({"k": p["k"]}, lambda v: v["k"][:, None, None], (1, 1), "S"),
        H=_combine({"h": p["h_scale"], "rho": p["rho"], "E": p["E"]},
                   _wave_h, (2, 2), "H"),
        T=T, name=name,
    )


def preset_solution(name: str, **params) -> ManufacturedSolution:
    """Smooth ``v = H u`` of the form ``e^{-t} phi(zeta)`` meeting the preset's boundary conditions."""
    if name not in _BOUNDARY:
        raise UnknownPreset(f"unknown preset {name!r}")
    fam = _BOUNDARY[name][0]
    p = dict(_DEFAULTS[fam])
    p.update(params)
    pi = np.pi
    g, gt = (lambda t: np.exp(-t)), (lambda t: -np.exp(-t))

    def col(*fs):
        return lambda z: np.stack([f(np.asarray(z, dtype=float)) for f in fs], axis=-1)

    sin, cos = np.sin, np.cos
    table = {
        "heat-dirichlet": (col(lambda z: sin(pi * z)), col(lambda z: pi * cos(pi * z)),
                           col(lambda z: -pi**2 * sin(pi * z))),
        "heat-neumann": (col(lambda z: cos(pi * z)), col(lambda z: -pi * sin(pi * z)),
                         col(lambda z: -pi**2 * cos(pi * z))),
        "heat-periodic": (col(lambda z: cos(2 * pi * z) + sin(2 * pi * z)),
                          col(lambda z: 2 * pi * (cos(2 * pi * z) - sin(2 * pi * z))),
                          col(lambda z: -4 * pi**2 * (cos(2 * pi * z) + sin(2 * pi * z)))),
        "damped-wave-dirichlet": (col(lambda z: sin(pi * z), lambda z: cos(pi * z)),
                                  col(lambda z: pi * cos(pi * z), lambda z: -pi * sin(pi * z)),
                                  col(lambda z: -pi**2 * sin(pi * z), lambda z: -pi**2 * cos(pi * z))),
        "damped-wave-free": (col(lambda z: cos(pi * z), lambda z: sin(pi * z)),
                             col(lambda z: -pi * sin(pi * z), lambda z: pi * cos(pi * z)),
                             col(lambda z: -pi**2 * cos(pi * z), lambda z: -pi**2 * sin(pi * z))),
        "damped-wave-periodic": (col(lambda z: cos(2 * pi * z), lambda z: cos(2 * pi * z)),
                                 col(lambda z: -2 * pi * sin(2 * pi * z), lambda z: -2 * pi * sin(2 * pi * z)),
                                 col(lambda z: -4 * pi**2 * cos(2 * pi * z), lambda z: -4 * pi**2 * cos(2 * pi * z))),
    }
    if name == "heat-robin":
        a = p["w"] / p["S"]
        table[name] = (col(lambda z: 1.0 + a * z * (1 - z)), col(lambda z: a * (1 - 2 * z)),
                       col(lambda z: np.full_like(z, -2 * a)))
    n = 1 if fam == "heat" else 2
    phi, phi_z, phi_zz = table[name]
    return ManufacturedSolution.separable(n, g, gt, phi, phi_z, phi_zz, name=f"{name}-manufactured")
