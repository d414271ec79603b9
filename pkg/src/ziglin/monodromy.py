"""Probing candidate singularities with loops and collecting monodromy generators.

A probe circles a candidate point ``c`` from the base time ``t0``.  After
each lap the state is carried back to ``t0`` and compared with the initial
state; once it returns, the accumulated variational matrix is the monodromy
matrix of the loop traversed that many times.
"""
from __future__ import annotations

import datetime as _dt
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .cpath import CPath, PathError, loop_around
from .obstruction import check_symplectic
from .odeint import IntegratorOptions, integrate_augmented

__all__ = [
    "Classification", "ProbeOptions", "MonodromyGenerator", "ProbeOutcome", "ScanReport",
    "return_distance", "probe", "probe_many", "probe_report", "scan", "grid_nodes",
    "loop_matrix", "DEFAULT_PROBE_RADIUS", "RADIUS_GRID_FRACTION",
]

DEFAULT_PROBE_RADIUS = 0.4
RADIUS_GRID_FRACTION = 0.45


class Classification(str, Enum):
    TRIVIAL = "Trivial"
    GENERATOR = "Generator"
    NON_RETURNING = "NonReturning"
    ABORTED = "Aborted"
    SKIPPED = "Skipped"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ProbeOptions:
    # None: 0.4 for single probes, 0.45 x grid spacing in a scan
    radius: float | None = None
    orientation: int = 1
    waypoints: tuple[complex, ...] = ()
    max_traversals: int = 12
    return_tol: float = 1e-6
    matrix_tol: float = 1e-6
    integrator: IntegratorOptions = field(default_factory=IntegratorOptions)

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if self.max_traversals < 1:
            raise ValueError("max_traversals must be at least 1")
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "waypoints", tuple(complex(w) for w in self.waypoints))

    def to_dict(self) -> dict:
        return {
            "radius": self.radius, "orientation": self.orientation,
            "waypoints": [_pair(w) for w in self.waypoints],
            "max_traversals": self.max_traversals, "return_tol": self.return_tol,
            "matrix_tol": self.matrix_tol, "integrator": self.integrator.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeOptions":
        d = dict(d)
        integ = IntegratorOptions(**d.pop("integrator", {}))
        d["waypoints"] = tuple(_unpair(w) for w in d.get("waypoints", ()))
        return cls(integrator=integ, **d)


def _pair(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _unpair(p) -> complex:
    return complex(p[0], p[1])


def _matrix_to_list(M: np.ndarray) -> list:
    return [[_pair(z) for z in row] for row in M]


def _matrix_from_list(rows) -> np.ndarray:
    M = np.array([[_unpair(z) for z in row] for row in rows], dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    return M


@dataclass
class MonodromyGenerator:
    matrix: np.ndarray
    loop: CPath
    traversals: int
    base_point: complex
    initial_x: np.ndarray
    candidate: complex
    return_residual: float
    det_residual: float
    symplectic_residual: float | None = None
    est_error: float = 0.0

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def to_dict(self) -> dict:
        return {
            "candidate": _pair(self.candidate),
            "matrix": _matrix_to_list(self.matrix),
            "traversals": self.traversals,
            "base_point": _pair(self.base_point),
            "initial_x": [_pair(z) for z in self.initial_x],
            "residuals": {"return_residual": self.return_residual,
                          "det_residual": self.det_residual,
                          "symplectic_residual": self.symplectic_residual},
            "est_error": self.est_error,
            "loop": self.loop.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MonodromyGenerator":
        M = _matrix_from_list(d["matrix"])
        x = np.array([_unpair(z) for z in d["initial_x"]], dtype=complex)
        if x.shape[0] != M.shape[0]:
            raise ValueError("generator matrix does not match the state dimension")
        res = d.get("residuals", {})
        return cls(matrix=M, loop=CPath.from_dict(d["loop"]), traversals=int(d["traversals"]),
                   base_point=_unpair(d["base_point"]), initial_x=x,
                   candidate=_unpair(d["candidate"]),
                   return_residual=float(res.get("return_residual", 0.0)),
                   det_residual=float(res.get("det_residual", 0.0)),
                   symplectic_residual=res.get("symplectic_residual"),
                   est_error=float(d.get("est_error", 0.0)))


@dataclass
class ProbeOutcome:
    candidate: complex
    classification: Classification
    generator: MonodromyGenerator | None = None
    traversals_used: int = 0
    return_residual: float = math.inf
    abort_reason: str | None = None
    matrix_deviation: float | None = None
    det_residual: float | None = None
    symplectic_residual: float | None = None
    radius: float | None = None
    est_error: float = 0.0
    steps: int = 0

    def to_dict(self) -> dict:
        return {
            "candidate": _pair(self.candidate),
            "classification": self.classification.value,
            "traversals": self.traversals_used,
            "return_residual": _finite_or_none(self.return_residual),
            "matrix_deviation": self.matrix_deviation,
            "det_residual": self.det_residual,
            "symplectic_residual": self.symplectic_residual,
            "abort_reason": self.abort_reason,
            "radius": self.radius,
            "est_error": self.est_error,
            "steps": self.steps,
            "generator": self.generator.to_dict() if self.generator else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeOutcome":
        rr = d.get("return_residual")
        return cls(candidate=_unpair(d["candidate"]),
                   classification=Classification(d["classification"]),
                   generator=MonodromyGenerator.from_dict(d["generator"]) if d.get("generator")
                   else None,
                   traversals_used=int(d.get("traversals", 0)),
                   return_residual=math.inf if rr is None else float(rr),
                   abort_reason=d.get("abort_reason"),
                   matrix_deviation=d.get("matrix_deviation"),
                   det_residual=d.get("det_residual"),
                   symplectic_residual=d.get("symplectic_residual"),
                   radius=d.get("radius"), est_error=float(d.get("est_error", 0.0)),
                   steps=int(d.get("steps", 0)))


def _finite_or_none(v):
    return v if v is not None and math.isfinite(v) else None


def return_distance(a, b, angle_indices=()) -> float:
    """Max-norm distance with angle coordinates compared modulo ``2*pi``.

    Only the real part of an angle difference is reduced; the imaginary part
    is compared as is.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("vectors differ in length")
    d = b - a
    for k in angle_indices:
        d[k] = complex(math.remainder(d[k].real, 2 * math.pi), d[k].imag)
    return float(np.max(np.abs(d))) if d.size else 0.0


def _diagnostics(sys, T: np.ndarray):
    det_res = float(abs(np.linalg.det(T) - 1.0))
    sym_res = check_symplectic(T) if sys.is_hamiltonian else None
    return det_res, sym_res


def _split_loop(t0, candidate, radius, orientation, waypoints):
    loop = loop_around(t0, candidate, radius, orientation, waypoints)
    m = len(waypoints) + 1
    approach = CPath(loop.pieces[:m])
    circle = CPath(loop.pieces[m:m + 1])
    back = CPath(loop.pieces[m + 1:])
    return approach, circle, back


def probe(sys, x0, t0: complex, candidate: complex,
          opts: ProbeOptions | None = None) -> ProbeOutcome:
    """Circle ``candidate`` from ``t0`` until ``x`` returns, then classify.

    Raises :class:`~ziglin.cpath.PathError` when the loop cannot be built
    (candidate equal to ``t0``, base inside the disk, ...).  Integration
    failures come back as ``Aborted`` outcomes.
    """
    opts = opts or ProbeOptions()
    t0, candidate = complex(t0), complex(candidate)
    x0 = np.asarray(x0, dtype=complex)
    if candidate == t0:
        raise PathError("candidate coincides with the base point")
    radius = opts.radius if opts.radius is not None else DEFAULT_PROBE_RADIUS
    approach, circle, back = _split_loop(t0, candidate, radius, opts.orientation, opts.waypoints)
    iopts = opts.integrator
    angles = sys.angle_indices
    n = sys.n
    out = ProbeOutcome(candidate, Classification.ABORTED, radius=radius)

    def account(res):
        out.est_error += res.est_global_error
        out.steps += res.accepted_steps + res.rejected_steps
        if not res.ok:
            out.abort_reason = f"{res.aborted} near t={_fmt(res.abort_position)}"
            return False
        return True

    res = integrate_augmented(sys, approach, x0, np.eye(n, dtype=complex), iopts)
    if not account(res):
        return out
    x_e, xi_e = res.end_state.x, res.end_state.Xi
    for k in range(1, opts.max_traversals + 1):
        res = integrate_augmented(sys, circle, x_e, xi_e, iopts)
        out.traversals_used = k
        if not account(res):
            return out
        x_e, xi_e = res.end_state.x, res.end_state.Xi
        res = integrate_augmented(sys, back, x_e, xi_e, iopts)
        if not account(res):
            return out
        x_b, T = res.end_state.x, res.end_state.Xi
        out.return_residual = return_distance(x0, x_b, angles)
        if out.return_residual <= opts.return_tol:
            break
    else:
        out.classification = Classification.NON_RETURNING
        return out

    dev = float(np.linalg.norm(T - np.eye(n)))
    out.matrix_deviation = dev
    out.det_residual, out.symplectic_residual = _diagnostics(sys, T)
    if dev <= opts.matrix_tol:
        out.classification = Classification.TRIVIAL
        return out
    out.classification = Classification.GENERATOR
    out.generator = MonodromyGenerator(
        matrix=T, loop=loop_around(t0, candidate, radius, opts.orientation * k, opts.waypoints),
        traversals=k, base_point=t0, initial_x=x0.copy(), candidate=candidate,
        return_residual=out.return_residual, det_residual=out.det_residual,
        symplectic_residual=out.symplectic_residual, est_error=out.est_error)
    return out


def loop_matrix(sys, x0, loop: CPath, opts: IntegratorOptions | None = None):
    """Integrate along a closed ``loop`` from ``Xi = id``.

    Returns ``(T, x_end, trace)`` without any return test, for arbitrary
    composed loops.
    """
    if not loop.is_closed:
        raise PathError("loop_matrix needs a closed path")
    res = integrate_augmented(sys, loop, x0, None, opts)
    if not res.ok:
        raise ArithmeticError(f"integration aborted: {res.aborted} near {res.abort_position}")
    return res.end_state.Xi, res.end_state.x, res


def _fmt(z) -> str:
    if z is None:
        return "?"
    z = complex(z)
    return f"{z.real:.6g}{z.imag:+.6g}i"


def grid_nodes(domain: Sequence[float], grid: Sequence[int]) -> tuple[list[complex], float]:
    """Row-major nodes of a rectangle ``(re_min, re_max, im_min, im_max)``.

    Rows run in increasing imaginary part, each row in increasing real part.
    Also returns the node spacing used for the default probe radius.
    """
    re0, re1, im0, im1 = (float(v) for v in domain)
    nx, ny = (int(v) for v in grid)
    if nx < 1 or ny < 1:
        raise ValueError("grid dimensions must be at least 1")
    if not (re1 > re0 and im1 > im0):
        raise ValueError("domain rectangle must have positive width and height")
    xs = np.linspace(re0, re1, nx) if nx > 1 else np.array([(re0 + re1) / 2])
    ys = np.linspace(im0, im1, ny) if ny > 1 else np.array([(im0 + im1) / 2])
    steps = []
    if nx > 1:
        steps.append((re1 - re0) / (nx - 1))
    if ny > 1:
        steps.append((im1 - im0) / (ny - 1))
    spacing = min(steps) if steps else min(re1 - re0, im1 - im0)
    return [complex(x, y) for y in ys for x in xs], spacing


@dataclass
class ScanReport:
    system: dict
    x0: np.ndarray
    t0: complex
    options: ProbeOptions
    outcomes: list[ProbeOutcome]
    domain: tuple[float, float, float, float] | None = None
    grid: tuple[int, int] | None = None
    verdict: dict | None = None
    config: dict | None = None
    version: str = ""
    timestamp: str = ""

    @property
    def generators(self) -> list[MonodromyGenerator]:
        return [o.generator for o in self.outcomes if o.generator is not None]

    def counts(self) -> dict[str, int]:
        c = {k.value: 0 for k in Classification}
        for o in self.outcomes:
            c[o.classification.value] += 1
        return c

    def to_dict(self) -> dict:
        return {
            "tool": "ziglin", "version": self.version, "timestamp": self.timestamp,
            "system": self.system,
            "x0": [_pair(z) for z in self.x0], "t0": _pair(self.t0),
            "domain": list(self.domain) if self.domain else None,
            "grid": list(self.grid) if self.grid else None,
            "options": self.options.to_dict(),
            "config": self.config,
            "counts": self.counts(),
            "outcomes": [o.to_dict() for o in self.outcomes],
            "verdict": self.verdict,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScanReport":
        x0 = np.array([_unpair(z) for z in d["x0"]], dtype=complex)
        outcomes = [ProbeOutcome.from_dict(o) for o in d["outcomes"]]
        n = len(x0)
        for o in outcomes:
            if o.generator is not None and o.generator.n != n:
                raise ValueError("generator dimension differs from the state dimension")
        return cls(system=d.get("system", {}), x0=x0, t0=_unpair(d["t0"]),
                   options=ProbeOptions.from_dict(d.get("options", {})), outcomes=outcomes,
                   domain=tuple(d["domain"]) if d.get("domain") else None,
                   grid=tuple(d["grid"]) if d.get("grid") else None,
                   verdict=d.get("verdict"), config=d.get("config"),
                   version=d.get("version", ""), timestamp=d.get("timestamp", ""))


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _version() -> str:
    from . import __version__
    return __version__


def probe_many(sys, x0, t0, candidates: Sequence[complex], opts: ProbeOptions | None = None,
               jobs: int = 1, skip_invalid: bool = False) -> list[ProbeOutcome]:
    """Probe each candidate; results keep the input order.

    With ``skip_invalid`` candidates whose loop cannot be built are reported
    as ``Skipped`` instead of raising.
    """
    opts = opts or ProbeOptions()
    x0 = np.asarray(x0, dtype=complex)
    radius = opts.radius if opts.radius is not None else DEFAULT_PROBE_RADIUS

    def one(c):
        try:
            return probe(sys, x0, t0, c, opts)
        except PathError as exc:
            if not skip_invalid:
                raise
            return ProbeOutcome(complex(c), Classification.SKIPPED, abort_reason=str(exc),
                                radius=radius)

    if jobs <= 1 or len(candidates) <= 1:
        return [one(c) for c in candidates]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, candidates))


def scan(sys, x0, t0: complex, domain: Sequence[float], grid: Sequence[int],
         opts: ProbeOptions | None = None, jobs: int = 1) -> ScanReport:
    """Probe every node of a rectangular grid.

    Nodes whose probe disk would contain ``t0`` (or whose approach route is
    blocked) are ``Skipped``.  The report is in row-major node order whatever
    the completion order of parallel probes.
    """
    opts = opts or ProbeOptions()
    nodes, spacing = grid_nodes(domain, grid)
    if opts.radius is None:
        opts = replace(opts, radius=RADIUS_GRID_FRACTION * spacing)
    outcomes = probe_many(sys, x0, t0, nodes, opts, jobs=jobs, skip_invalid=True)
    return ScanReport(system=sys.to_dict(), x0=np.asarray(x0, dtype=complex), t0=complex(t0),
                      options=opts, outcomes=outcomes,
                      domain=tuple(float(v) for v in domain),
                      grid=tuple(int(v) for v in grid), version=_version(), timestamp=_now())


def probe_report(sys, x0, t0: complex, candidates: Sequence[complex],
                 opts: ProbeOptions | None = None, jobs: int = 1) -> ScanReport:
    """A report for an explicit candidate list."""
    opts = opts or ProbeOptions()
    if opts.radius is None:
        opts = replace(opts, radius=DEFAULT_PROBE_RADIUS)
    outcomes = probe_many(sys, x0, t0, list(candidates), opts, jobs=jobs, skip_invalid=True)
    return ScanReport(system=sys.to_dict(), x0=np.asarray(x0, dtype=complex), t0=complex(t0),
                      options=opts, outcomes=outcomes, version=_version(), timestamp=_now())
