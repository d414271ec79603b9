"""Pure-Python integration kernel (fallback when the extension is absent).

Mirrors ``_kernel.pyx`` step for step; the two must agree to rounding.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from .expr import (
    OP_ADD, OP_CONST, OP_COS, OP_COSH, OP_DIV, OP_EXP, OP_LOG, OP_MUL, OP_NEG,
    OP_POW, OP_POWI, OP_SIN, OP_SINH, OP_SQRT, OP_SUB, OP_TAN, SINGULAR_EPS,
    Program,
)

NAME = "python"

STATUS_OK = 0
STATUS_SINGULAR = 1
STATUS_OVERFLOW = 2
STATUS_MAX_STEPS = 3

# Dormand-Prince 5(4)
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)

SAFE = 0.9
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75
FAC_MIN = 0.2   # largest shrink per step is 1/FAC_MIN
FAC_MAX = 10.0


class _Singular(Exception):
    pass


def _powi(z, k):
    if k < 0:
        if abs(z) <= SINGULAR_EPS:
            raise _Singular()
        return 1.0 / _powi(z, -k)
    r = 1.0 + 0j
    while k:
        if k & 1:
            r *= z
        z *= z
        k >>= 1
    return r


def _pow(z, w):
    if z == 0:
        if w.real > 0:
            return 0j
        raise _Singular()
    return cmath.exp(w * cmath.log(z))


def _div(a, b):
    if abs(b) <= SINGULAR_EPS:
        raise _Singular()
    return a / b


def _log(z):
    if abs(z) <= SINGULAR_EPS:
        raise _Singular()
    return cmath.log(z)


def _tan(z):
    return _div(cmath.sin(z), cmath.cos(z))


_UNARY = {
    OP_SIN: "_sin", OP_COS: "_cos", OP_TAN: "_tan", OP_SINH: "_sinh",
    OP_COSH: "_cosh", OP_EXP: "_exp", OP_LOG: "_log", OP_SQRT: "_sqrt",
}


def _generate(program: Program):
    """Turn a register program into a Python function of the inputs."""
    nin = program.n_inputs
    args = ", ".join(f"r{k}" for k in range(nin))
    lines = [f"def _f({args}):"]
    for k, (op, a, b) in enumerate(zip(program.ops.tolist(), program.arg0.tolist(),
                                       program.arg1.tolist())):
        r = f"r{nin + k}"
        if op == OP_CONST:
            rhs = f"_c[{a}]"
        elif op == OP_ADD:
            rhs = f"r{a} + r{b}"
        elif op == OP_SUB:
            rhs = f"r{a} - r{b}"
        elif op == OP_MUL:
            rhs = f"r{a} * r{b}"
        elif op == OP_DIV:
            rhs = f"_div(r{a}, r{b})"
        elif op == OP_NEG:
            rhs = f"-r{a}"
        elif op == OP_POWI:
            rhs = f"r{a} * r{a}" if b == 2 else f"_powi(r{a}, {b})"
        elif op == OP_POW:
            rhs = f"_pow(r{a}, r{b})"
        else:
            rhs = f"{_UNARY[op]}(r{a})"
        lines.append(f"    {r} = {rhs}")
    outs = ", ".join("0j" if o < 0 else f"r{o}" for o in program.outputs.tolist())
    lines.append(f"    return ({outs}{',' if len(program.outputs) == 1 else ''})")
    ns = {
        "_c": [complex(c) for c in program.consts], "_div": _div, "_powi": _powi,
        "_pow": _pow, "_log": _log, "_tan": _tan, "_sin": cmath.sin, "_cos": cmath.cos,
        "_sinh": cmath.sinh, "_cosh": cmath.cosh, "_exp": cmath.exp, "_sqrt": cmath.sqrt,
    }
    exec(compile("\n".join(lines), "<ziglin-program>", "exec"), ns)
    return ns["_f"]


class Prepared:
    """A program bound to a state dimension, ready for the stepper."""

    def __init__(self, program: Program, n: int):
        if len(program.outputs) != n + n * n or program.n_inputs != n + 1:
            raise ValueError("program does not match an augmented system of dimension n")
        self.n = n
        self.func = _generate(program)

    def evaluate(self, x, t):
        """Outputs ``(v, A)`` at state ``x`` and time ``t``."""
        vals = self.func(*[complex(z) for z in x], complex(t))
        n = self.n
        return np.array(vals[:n], dtype=complex), np.array(vals[n:], dtype=complex).reshape(n, n)


def prepare(program: Program, n: int) -> Prepared:
    return Prepared(program, n)


def _path_point(kind, p0, p1, radius, theta0, sweep, u):
    if kind == 0:
        return p0 + (p1 - p0) * u, p1 - p0
    e = cmath.exp(1j * (theta0 + sweep * u))
    return p0 + radius * e, 1j * sweep * radius * e


def integrate_interval(prep: Prepared, kind: int, p0: complex, p1: complex, radius: float,
                       theta0: float, sweep: float, u0: float, u1: float, y: np.ndarray,
                       h: float, rtol: float, atol: float, hmin: float, max_steps: int):
    """Integrate the augmented system over ``u0 -> u1`` of one path piece.

    ``y`` holds ``x`` followed by the row-major ``Xi`` and is overwritten with
    the last accepted state.  Returns ``(status, u, h_next, accepted,
    rejected, min_h, err_sum)``.
    """
    n = prep.n
    func = prep.func

    def f(u, yy):
        t, dt = _path_point(kind, p0, p1, radius, theta0, sweep, u)
        try:
            vals = func(*yy[:n].tolist(), t)
        except (_Singular, ZeroDivisionError, OverflowError, ValueError):
            return None
        v = np.array(vals[:n], dtype=complex)
        A = np.array(vals[n:], dtype=complex).reshape(n, n)
        out = np.empty_like(yy)
        out[:n] = v * dt
        out[n:] = (A @ yy[n:].reshape(n, n)).ravel() * dt
        if not np.isfinite(out).all():
            return None
        return out

    u = u0
    span = u1 - u0
    if span <= 0:
        return STATUS_OK, u, h, 0, 0, math.inf, 0.0
    h = min(h if h > 0 else 0.01, span)
    k1 = f(u, y)
    if k1 is None:
        return STATUS_OVERFLOW, u, h, 0, 0, math.inf, 0.0
    facold = 1e-4
    n_acc = n_rej = 0
    min_h = math.inf
    err_sum = 0.0
    last_rejected = False
    while True:
        remaining = u1 - u
        if remaining <= 1e-15 * max(1.0, abs(u1)):
            break
        if n_acc + n_rej >= max_steps:
            return STATUS_MAX_STEPS, u, h, n_acc, n_rej, min_h, err_sum
        clipped = h >= remaining
        if clipped:
            h = remaining
        elif h < hmin:
            return STATUS_SINGULAR, u, h, n_acc, n_rej, min_h, err_sum
        ynew = None
        k2 = f(u + C2 * h, y + h * (A21 * k1))
        if k2 is not None:
            k3 = f(u + C3 * h, y + h * (A31 * k1 + A32 * k2))
            if k3 is not None:
                k4 = f(u + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
                if k4 is not None:
                    k5 = f(u + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
                    if k5 is not None:
                        k6 = f(u + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4
                                               + A65 * k5))
                        if k6 is not None:
                            ynew = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5
                                            + A76 * k6)
                            unew = u1 if clipped else u + h
                            k7 = f(unew, ynew)
                            if k7 is None:
                                ynew = None
        if ynew is None:
            n_rej += 1
            last_rejected = True
            h *= FAC_MIN
            continue
        errv = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        sc = np.maximum(atol, rtol * np.maximum(np.abs(y), np.abs(ynew)))
        aerr = np.abs(errv)
        err = float(np.max(aerr / sc))
        fac11 = err ** EXPO1
        if err <= 1.0:
            facold = max(err, 1e-4)
            fac = fac11 / facold ** BETA
            fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFE))
            hnew = h / fac
            if last_rejected:
                hnew = min(hnew, h)
            last_rejected = False
            n_acc += 1
            min_h = min(min_h, h)
            err_sum += float(np.max(aerr))
            u = unew
            y[:] = ynew
            k1 = k7
            h = hnew
        else:
            n_rej += 1
            last_rejected = True
            h = h / min(1.0 / FAC_MIN, fac11 / SAFE)
    return STATUS_OK, u, h, n_acc, n_rej, min_h, err_sum
