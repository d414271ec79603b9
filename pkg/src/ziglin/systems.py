"""Built-in systems: two Hamiltonian models and four closed-form oracles.

State orderings are fixed per entry because monodromy matrices depend on
the basis:

* ``henon_heiles``: ``(q1, q2, p1, p2)``
* ``satellite``: ``(psi, theta, p_psi, p_theta)``, angles ``psi`` and ``theta``
* ``oracle_harmonic``: ``(q, p)``
* the other oracles are one-dimensional.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .system import SystemDef, parse_system

__all__ = [
    "CatalogEntry", "CATALOG", "get_entry", "build", "henon_heiles", "satellite",
    "oracle_riccati", "oracle_cubic", "oracle_linear_pole", "oracle_harmonic",
]

HENON_HEILES = """\
system henon_heiles
param A = 0.25
param lambda = 1
coords q1 q2
momenta p1 p2
H = (p1^2 + p2^2)/2 - q2^2*(A + q1) - lambda/3*q1^3
"""

SATELLITE = """\
system satellite
coords psi theta
momenta p_psi p_theta
angles psi theta
H = p_psi^2/(2*sin(theta)^2) + p_theta^2/2 - p_psi + sin(psi)^2*sin(theta)^2/2
"""

RICCATI = """\
system oracle_riccati
# x = x0/(1 - x0*t): a simple pole, single-valued
state x
d x = x^2
"""

CUBIC = """\
system oracle_cubic
# x = x0/sqrt(1 - 2*x0^2*t): square-root branch point
state x
d x = x^3
"""

LINEAR_POLE = """\
system oracle_linear_pole
# xi = (t - c)^lambda: multiplier exp(2*pi*i*lambda) per loop around c
param lambda = 0.5
param c = 0
time t
state xi
d xi = lambda/(t - c)*xi
"""

HARMONIC = """\
system oracle_harmonic
coords q
momenta p
H = (p^2 + q^2)/2
"""


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    source: str
    params: Mapping[str, complex] = field(default_factory=dict)
    # reference or closed-form probe setup: x0, t0, candidates, ...
    reference: Mapping[str, object] = field(default_factory=dict)

    def build(self, **params) -> SystemDef:
        return parse_system(self.source, params)

    def schema(self) -> dict:
        def enc(v):
            v = complex(v)
            return v.real if v.imag == 0 else [v.real, v.imag]
        sysdef = self.build()
        return {
            "name": self.name,
            "description": self.description,
            "dimension": sysdef.n,
            "state": list(sysdef.state_symbols),
            "hamiltonian": sysdef.is_hamiltonian,
            "angles": [sysdef.state_symbols[k] for k in sorted(sysdef.angle_indices)],
            "parameters": {k: enc(v) for k, v in self.params.items()},
            "reference": jsonable(dict(self.reference)),
            "source": self.source,
        }


def jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, dict):
        return {k: jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    return v


def _complex_list(zs):
    return [complex(z) for z in zs]


CATALOG: dict[str, CatalogEntry] = {e.name: e for e in [
    CatalogEntry(
        "henon_heiles", "Henon-Heiles Hamiltonian with parameters A and lambda",
        HENON_HEILES, {"A": 0.25, "lambda": 1.0},
        {"x0": _complex_list([1, -0.4, -1.25, -0.3]), "t0": 1 + 0j,
         "candidates": _complex_list([0.2 + 2.5j, 0.2 - 2.5j]), "radius": 0.4}),
    CatalogEntry(
        "satellite", "symmetric satellite on a circular orbit, angles psi and theta",
        SATELLITE, {},
        {"x0": _complex_list([0, 1, 0.1, 0]), "t0": 0j,
         "candidates": _complex_list([4.8 + 0.8j, 4.8 - 0.8j]), "traversals": 2,
         "domain": [3.0, 6.0, -1.5, 1.5], "grid": [7, 5]}),
    CatalogEntry(
        "oracle_riccati", "x' = x^2, simple pole at t = 1/x0", RICCATI, {},
        {"x0": _complex_list([1]), "t0": 0j, "candidates": _complex_list([1])}),
    CatalogEntry(
        "oracle_cubic", "x' = x^3, order-2 branch point at t = 1/(2 x0^2)", CUBIC, {},
        {"x0": _complex_list([1]), "t0": 0j, "candidates": _complex_list([0.5]),
         "traversals": 2}),
    CatalogEntry(
        "oracle_linear_pole", "xi' = lambda/(t - c) xi, multiplier exp(2 pi i lambda)",
        LINEAR_POLE, {"lambda": 0.5, "c": 0.0},
        {"x0": _complex_list([0]), "t0": 1 + 0j, "candidates": _complex_list([0])}),
    CatalogEntry(
        "oracle_harmonic", "harmonic oscillator, entire flow", HARMONIC, {},
        {"x0": _complex_list([1, 0]), "t0": 0j, "candidates": _complex_list([1 + 1j])}),
]}


def get_entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {', '.join(CATALOG)}") from None


def build(name: str, **params) -> SystemDef:
    return get_entry(name).build(**params)


def henon_heiles(A: float = 0.25, lam: float = 1.0) -> SystemDef:
    return build("henon_heiles", A=A, **{"lambda": lam})


def satellite() -> SystemDef:
    return build("satellite")


def oracle_riccati() -> SystemDef:
    return build("oracle_riccati")


def oracle_cubic() -> SystemDef:
    return build("oracle_cubic")


def oracle_linear_pole(lam: complex = 0.5, c: complex = 0) -> SystemDef:
    return build("oracle_linear_pole", c=c, **{"lambda": lam})


def oracle_harmonic() -> SystemDef:
    return build("oracle_harmonic")


BUILDERS: dict[str, Callable[..., SystemDef]] = {
    "henon_heiles": henon_heiles, "satellite": satellite, "oracle_riccati": oracle_riccati,
    "oracle_cubic": oracle_cubic, "oracle_linear_pole": oracle_linear_pole,
    "oracle_harmonic": oracle_harmonic,
}
