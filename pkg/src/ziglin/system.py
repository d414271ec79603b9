"""ODE system definitions: vector field, Jacobian and metadata.

Systems are written either as Python calls (:func:`vector_field`,
:func:`hamilton_equations`) or in a small line-oriented text format::

    system henon_heiles
    param A = 0.25
    param lambda = 1
    coords q1 q2
    momenta p1 p2
    H = (p1^2 + p2^2)/2 - q2^2*(A + q1) - lambda/3*q1^3

or, for a general field (``time`` is optional and makes it non-autonomous)::

    system linear_pole
    param lambda = 0.5
    param c = 0
    time t
    state xi
    d xi = lambda/(t - c)*xi

``angles psi theta`` marks coordinates that are periodic with period 2*pi.
"""
from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernel
from .expr import (
    Const, Expr, compile_program, diff, evaluate, free_symbols, parse, render, substitute,
)

__all__ = [
    "SystemDef", "SystemSyntaxError", "vector_field", "hamilton_equations",
    "jacobian", "parse_system", "symplectic_form",
]

# register name for time when the system is autonomous
_TIME_PLACEHOLDER = "__time__"


class SystemSyntaxError(ValueError):
    pass


def symplectic_form(n: int) -> np.ndarray:
    """``J = ((0, I), (-I, 0))`` for the q-block-then-p-block ordering."""
    if n % 2:
        raise ValueError("symplectic form needs an even dimension")
    k = n // 2
    J = np.zeros((n, n))
    J[:k, k:] = np.eye(k)
    J[k:, :k] = -np.eye(k)
    return J


@dataclass(frozen=True, eq=False)
class SystemDef:
    """An ``n``-dimensional complex ODE ``x' = v(x[, t])`` with its Jacobian."""
    name: str
    state_symbols: tuple[str, ...]
    rhs: tuple[Expr, ...]
    jacobian: tuple[tuple[Expr, ...], ...]
    angle_indices: frozenset[int] = frozenset()
    is_hamiltonian: bool = False
    time_symbol: str | None = None
    hamiltonian: Expr | None = None
    source: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.state_symbols)
        if n == 0:
            raise ValueError("a system needs at least one state variable")
        if len(set(self.state_symbols)) != n:
            raise ValueError("state symbols must be distinct")
        if len(self.rhs) != n or len(self.jacobian) != n or any(len(r) != n for r in self.jacobian):
            raise ValueError("rhs/jacobian shape does not match the state dimension")
        if self.is_hamiltonian and n % 2:
            raise ValueError("a Hamiltonian system has even dimension")
        if any(not 0 <= k < n for k in self.angle_indices):
            raise ValueError("angle index out of range")
        allowed = set(self.state_symbols) | ({self.time_symbol} if self.time_symbol else set())
        for e in self.rhs:
            extra = free_symbols(e) - allowed
            if extra:
                raise ValueError(f"unbound symbols in right-hand side: {sorted(extra)}")
        object.__setattr__(self, "angle_indices", frozenset(self.angle_indices))

    @property
    def n(self) -> int:
        return len(self.state_symbols)

    @property
    def dimension(self) -> int:
        return self.n

    def _env(self, x, t=0.0) -> dict:
        env = {s: complex(v) for s, v in zip(self.state_symbols, x)}
        if self.time_symbol:
            env[self.time_symbol] = complex(t)
        return env

    def v(self, x, t: complex = 0.0) -> np.ndarray:
        """Vector field at ``x`` by tree evaluation (reference path)."""
        env = self._env(x, t)
        return np.array([evaluate(e, env) for e in self.rhs], dtype=complex)

    def A(self, x, t: complex = 0.0) -> np.ndarray:
        """Jacobian ``dv/dx`` at ``x`` by tree evaluation."""
        env = self._env(x, t)
        return np.array([[evaluate(e, env) for e in row] for row in self.jacobian], dtype=complex)

    def energy(self, x) -> complex:
        if self.hamiltonian is None:
            raise ValueError(f"{self.name} has no Hamiltonian")
        return evaluate(self.hamiltonian, self._env(x))

    @property
    def program(self):
        with self._lock:
            if "program" not in self._cache:
                exprs = list(self.rhs) + [e for row in self.jacobian for e in row]
                inputs = list(self.state_symbols) + [self.time_symbol or _TIME_PLACEHOLDER]
                self._cache["program"] = compile_program(exprs, inputs)
            return self._cache["program"]

    def prepared(self, backend=None):
        """Kernel-ready form of the augmented field for ``backend``."""
        mod = kernel.get_backend(backend)
        program = self.program
        with self._lock:
            key = ("prepared", mod.NAME)
            if key not in self._cache:
                self._cache[key] = mod.prepare(program, self.n)
            return self._cache[key]

    def canonical_text(self) -> str:
        lines = [f"name {self.name}", "state " + " ".join(self.state_symbols)]
        if self.time_symbol:
            lines.append(f"time {self.time_symbol}")
        lines.append("angles " + " ".join(str(k) for k in sorted(self.angle_indices)))
        lines.append(f"hamiltonian {self.is_hamiltonian}")
        lines += [f"d {s} = {render(e)}" for s, e in zip(self.state_symbols, self.rhs)]
        return "\n".join(lines)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "hash": self.hash,
            "dimension": self.n,
            "state": list(self.state_symbols),
            "time": self.time_symbol,
            "angle_indices": sorted(self.angle_indices),
            "hamiltonian": self.is_hamiltonian,
            "rhs": [render(e) for e in self.rhs],
            "source": self.source,
        }


def jacobian(rhs: Sequence[Expr], state: Sequence[str]) -> tuple[tuple[Expr, ...], ...]:
    return tuple(tuple(diff(e, s) for s in state) for e in rhs)


def vector_field(state: Sequence[str], rhs: Sequence[Expr | str], name: str = "system",
                 angles: Sequence[int] = (), time: str | None = None,
                 source: str = "") -> SystemDef:
    exprs = tuple(parse(e) if isinstance(e, str) else e for e in rhs)
    state = tuple(state)
    return SystemDef(name=name, state_symbols=state, rhs=exprs,
                     jacobian=jacobian(exprs, state), angle_indices=frozenset(angles),
                     time_symbol=time, source=source)


def hamilton_equations(H: Expr | str, coords: Sequence[str], momenta: Sequence[str],
                       name: str = "hamiltonian", angles: Sequence[int] = (),
                       source: str = "", time: str | None = None) -> SystemDef:
    """Hamilton's equations, state ordered ``(q_1..q_k, p_1..p_k)``.

    ``time`` names the time symbol of an explicitly time-dependent ``H``.
    """
    H = parse(H) if isinstance(H, str) else H
    coords, momenta = tuple(coords), tuple(momenta)
    if len(coords) != len(momenta):
        raise ValueError("coordinates and momenta must pair up")
    if set(coords) & set(momenta) or len(set(coords)) != len(coords) \
            or len(set(momenta)) != len(momenta):
        raise ValueError("symbol collision between coordinates and momenta")
    extra = free_symbols(H) - set(coords) - set(momenta) - ({time} if time else set())
    if extra:
        raise ValueError(f"Hamiltonian has unbound symbols: {sorted(extra)}")
    rhs = tuple(diff(H, p) for p in momenta) + tuple(-diff(H, q) for q in coords)
    state = coords + momenta
    return SystemDef(name=name, state_symbols=state, rhs=rhs, jacobian=jacobian(rhs, state),
                     angle_indices=frozenset(angles), is_hamiltonian=True, hamiltonian=H,
                     time_symbol=time, source=source)


def parse_system(text: str, params: Mapping[str, complex] | None = None) -> SystemDef:
    """Build a system from the text format; ``params`` override defaults."""
    params = dict(params or {})
    name = "system"
    defaults: dict[str, Expr] = {}
    coords = momenta = state = None
    time = None
    H = None
    rhs: dict[str, Expr] = {}
    angles: list[str] = []

    def fail(lineno, msg):
        raise SystemSyntaxError(f"line {lineno}: {msg}")

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "system":
                name = rest
            elif head == "param":
                key, eq, val = rest.partition("=")
                if not eq:
                    fail(lineno, "expected 'param NAME = VALUE'")
                defaults[key.strip()] = parse(val)
            elif head == "coords":
                coords = rest.split()
            elif head == "momenta":
                momenta = rest.split()
            elif head == "state":
                state = rest.split()
            elif head == "time":
                time = rest
            elif head == "angles":
                angles = rest.split()
            elif head == "H" or line.startswith("H="):
                H = parse(line.partition("=")[2])
            elif head == "d":
                sym, eq, val = rest.partition("=")
                if not eq:
                    fail(lineno, "expected 'd NAME = EXPR'")
                rhs[sym.strip()] = parse(val)
            else:
                fail(lineno, f"unknown directive {head!r}")
        except SystemSyntaxError:
            raise
        except ValueError as exc:
            fail(lineno, str(exc))

    unknown = set(params) - set(defaults)
    if unknown:
        raise SystemSyntaxError(f"unknown parameters: {sorted(unknown)}")
    resolved: dict[str, Expr] = {}
    for k, default in defaults.items():
        if k in params:
            v = params[k]
            val = v if isinstance(v, Expr) else parse(v) if isinstance(v, str) else Const(v)
        else:
            val = default
        resolved[k] = substitute(val, resolved)

    if H is not None:
        if coords is None or momenta is None:
            raise SystemSyntaxError("a Hamiltonian needs 'coords' and 'momenta'")
        order = list(coords) + list(momenta)
        _check_angles(angles, order)
        return hamilton_equations(substitute(H, resolved), coords, momenta, name=name,
                                  angles=[order.index(a) for a in angles], source=text,
                                  time=time)
    if state is None:
        raise SystemSyntaxError("no 'state' or Hamiltonian given")
    missing = [s for s in state if s not in rhs]
    if missing or set(rhs) - set(state):
        raise SystemSyntaxError(f"'d' lines do not match the state: missing {missing}")
    _check_angles(angles, state)
    exprs = [substitute(rhs[s], resolved) for s in state]
    return vector_field(state, exprs, name=name, angles=[state.index(a) for a in angles],
                        time=time, source=text)


def _check_angles(angles, order):
    bad = [a for a in angles if a not in order]
    if bad:
        raise SystemSyntaxError(f"angles refer to unknown coordinates: {bad}")
