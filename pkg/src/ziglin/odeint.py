"""Integration of the state together with its variational matrix along a path.

The augmented field is ``x' = v(x, t)``, ``Xi' = A(x, t) Xi`` with ``t`` moving
along a :class:`~ziglin.cpath.CPath`.  Each piece is integrated in its own
parameter ``u`` in ``[0, 1]``; the kernel multiplies by ``dt/du``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel
from .cpath import Arc, CPath

__all__ = [
    "IntegratorOptions", "AugmentedState", "TraceResult", "VariationalTrace",
    "integrate_augmented", "dense_checkpoints",
]

ABORT_REASONS = {1: "singularity_proximity", 2: "overflow", 3: "max_steps"}


@dataclass(frozen=True)
class IntegratorOptions:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 10**7
    # spacing in the global path parameter s; None records only the endpoints
    checkpoint_stride: float | None = None
    # accepted steps shorter than this fraction of the path length abort the run
    min_step_fraction: float = 1e-13
    backend: str | None = None

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.checkpoint_stride is not None and not 0 < self.checkpoint_stride <= 1:
            raise ValueError("checkpoint_stride must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {"rel_tol": self.rel_tol, "abs_tol": self.abs_tol, "max_steps": self.max_steps,
                "checkpoint_stride": self.checkpoint_stride,
                "min_step_fraction": self.min_step_fraction}


@dataclass(frozen=True)
class AugmentedState:
    x: np.ndarray
    Xi: np.ndarray

    @classmethod
    def from_vector(cls, y: np.ndarray, n: int) -> "AugmentedState":
        return cls(y[:n].copy(), y[n:].reshape(n, n).copy())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.Xi.ravel()]).astype(complex)


@dataclass
class TraceResult:
    end_state: AugmentedState
    est_global_error: float
    min_step_taken: float
    rejected_steps: int
    accepted_steps: int = 0
    aborted: str | None = None
    abort_position: complex | None = None
    s_reached: float = 1.0
    checkpoints: list = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.aborted is None


VariationalTrace = TraceResult


def _piece_args(piece):
    if isinstance(piece, Arc):
        return 1, complex(piece.center), 0j, float(piece.radius), float(piece.angle_start), \
            float(piece.angle_sweep)
    return 0, complex(piece.start), complex(piece.end), 0.0, 0.0, 0.0


def _checkpoint_grid(stride: float | None) -> list[float]:
    if stride is None:
        return [1.0]
    m = max(1, int(round(1.0 / stride)))
    return [k / m for k in range(1, m + 1)]


def integrate_augmented(sys, path: CPath, x0, xi0=None,
                        opts: IntegratorOptions | None = None) -> TraceResult:
    """Continue ``(x, Xi)`` from ``(x0, xi0)`` along ``path``.

    ``xi0`` defaults to the identity.  The path start plays the role of the
    initial time.  A failed run keeps the last accepted state and records
    the reason (``singularity_proximity``, ``overflow`` or ``max_steps``).
    """
    opts = opts or IntegratorOptions()
    n = sys.n
    x0 = np.asarray(x0, dtype=complex)
    if x0.shape != (n,):
        raise ValueError(f"initial state must have length {n}")
    xi0 = np.eye(n, dtype=complex) if xi0 is None else np.asarray(xi0, dtype=complex)
    if xi0.shape != (n, n):
        raise ValueError(f"initial variational matrix must be {n}x{n}")

    backend = kernel.get_backend(opts.backend)
    prep = sys.prepared(opts.backend)
    y = np.ascontiguousarray(np.concatenate([x0, xi0.ravel()]), dtype=np.complex128)
    checkpoints = [(0.0, AugmentedState.from_vector(y, n))]
    total = path.length
    result = TraceResult(AugmentedState.from_vector(y, n), 0.0, math.inf, 0, 0,
                         s_reached=0.0, checkpoints=checkpoints)
    if total == 0.0:
        result.s_reached = 1.0
        return result

    targets = _checkpoint_grid(opts.checkpoint_stride)
    breaks = path.breakpoints()
    h_t = 0.0          # step carried across pieces, in units of |dt|
    steps_left = opts.max_steps
    err_sum = 0.0
    for k, piece in enumerate(path.pieces):
        L = piece.length
        if L == 0.0:
            continue
        s_a, s_b = breaks[k], breaks[k + 1]
        kind, p0, p1, radius, theta0, sweep = _piece_args(piece)
        hmin = opts.min_step_fraction * total / L
        stops = [(s - s_a) / (s_b - s_a) for s in targets if s_a < s < s_b]
        stops.append(1.0)
        u = 0.0
        h = h_t / L if h_t > 0 else 0.0
        for u_stop in stops:
            status, u, h, acc, rej, min_h, es = backend.integrate_interval(
                prep, kind, p0, p1, radius, theta0, sweep, u, u_stop, y, h,
                opts.rel_tol, opts.abs_tol, hmin, steps_left)
            steps_left -= acc + rej
            err_sum += es
            result.accepted_steps += acc
            result.rejected_steps += rej
            if acc:
                result.min_step_taken = min(result.min_step_taken, min_h * L)
            s_now = s_a + u * (s_b - s_a)
            if status != backend.STATUS_OK:
                result.aborted = ABORT_REASONS.get(status, f"status_{status}")
                result.abort_position = piece.point(u)
                result.s_reached = s_now
                break
            if u_stop < 1.0:
                checkpoints.append((s_now, AugmentedState.from_vector(y, n)))
            elif any(abs(s - s_b) <= 1e-12 for s in targets):
                checkpoints.append((s_b, AugmentedState.from_vector(y, n)))
        if result.aborted:
            break
        h_t = h * L
    else:
        result.s_reached = 1.0
    result.end_state = AugmentedState.from_vector(y, n)
    result.est_global_error = err_sum
    return result


def dense_checkpoints(result: TraceResult) -> list[tuple[float, AugmentedState]]:
    """Recorded ``(s, state)`` pairs, increasing in ``s``.

    Always contains the initial state; further entries sit every
    ``checkpoint_stride`` in ``s`` and stop at the abort point of a failed run.
    """
    return list(result.checkpoints)
