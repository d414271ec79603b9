"""Piecewise paths in the complex time plane.

A :class:`CPath` is a chain of straight segments and circular arcs.  The
global parameter ``s`` runs over ``[0, 1]`` proportionally to arc length;
each piece also has its own local parameter ``u`` in ``[0, 1]``, which is
what the integrator steps in.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence, Union

__all__ = [
    "Segment", "Arc", "CPath", "PathError",
    "loop_around", "compose", "point_at", "winding_number",
]

JOIN_TOL = 1e-12
ON_PATH_TOL = 1e-9


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    kind = "segment"

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def point(self, u: float) -> complex:
        return self.start + (self.end - self.start) * u

    def derivative(self, u: float) -> complex:
        return self.end - self.start

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)

    def distance(self, z: complex) -> float:
        d = self.end - self.start
        if d == 0:
            return abs(z - self.start)
        u = ((z - self.start) * d.conjugate()).real / abs(d) ** 2
        u = min(1.0, max(0.0, u))
        return abs(z - self.point(u))

    def winding_angle(self, z: complex) -> float:
        return cmath.phase((self.end - z) / (self.start - z))

    def to_dict(self) -> dict:
        return {"kind": "segment", "start": _pair(self.start), "end": _pair(self.end)}


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    angle_start: float
    angle_sweep: float

    kind = "arc"

    def __post_init__(self):
        if not self.radius > 0:
            raise PathError("arc radius must be positive")

    @property
    def start(self) -> complex:
        return self.point(0.0)

    @property
    def end(self) -> complex:
        return self.point(1.0)

    @property
    def length(self) -> float:
        return self.radius * abs(self.angle_sweep)

    def point(self, u: float) -> complex:
        return self.center + self.radius * cmath.exp(1j * (self.angle_start + self.angle_sweep * u))

    def derivative(self, u: float) -> complex:
        return 1j * self.angle_sweep * self.radius * cmath.exp(
            1j * (self.angle_start + self.angle_sweep * u))

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.angle_start + self.angle_sweep, -self.angle_sweep)

    def distance(self, z: complex) -> float:
        w = z - self.center
        if abs(self.angle_sweep) >= 2 * math.pi:
            return abs(abs(w) - self.radius)
        # angle of z measured from the arc start, in the sweep direction
        rel = (cmath.phase(w) - self.angle_start) * math.copysign(1.0, self.angle_sweep)
        rel %= 2 * math.pi
        if w != 0 and rel <= abs(self.angle_sweep):
            return abs(abs(w) - self.radius)
        return min(abs(z - self.start), abs(z - self.end))

    def winding_angle(self, z: complex) -> float:
        # sub-arcs of at most a quarter turn; chord + lens correction is exact
        nsub = max(1, math.ceil(abs(self.angle_sweep) / (math.pi / 2)))
        step = self.angle_sweep / nsub
        inside = abs(z - self.center) < self.radius
        total = 0.0
        for k in range(nsub):
            a = self.point(k / nsub)
            b = self.point((k + 1) / nsub)
            total += cmath.phase((b - z) / (a - z))
            if inside:
                # z sits in the lens iff it lies beyond the chord, away from the center
                mid_dir = cmath.exp(1j * (self.angle_start + step * (k + 0.5)))
                chord_offset = self.radius * math.cos(step / 2)
                if ((z - self.center) * mid_dir.conjugate()).real > chord_offset:
                    total += math.copysign(2 * math.pi, step)
        return total

    def to_dict(self) -> dict:
        return {"kind": "arc", "center": _pair(self.center), "radius": self.radius,
                "angle_start": self.angle_start, "angle_sweep": self.angle_sweep}


Piece = Union[Segment, Arc]


def _pair(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _unpair(p) -> complex:
    return complex(p[0], p[1])


@dataclass(frozen=True)
class CPath:
    """A continuous chain of pieces.  An empty chain is a constant path at
    ``origin``."""
    pieces: tuple[Piece, ...]
    origin: complex = 0j

    def __post_init__(self):
        pieces = tuple(self.pieces)
        object.__setattr__(self, "pieces", pieces)
        for a, b in zip(pieces, pieces[1:]):
            if abs(a.end - b.start) > JOIN_TOL:
                raise PathError(f"pieces do not join: gap {abs(a.end - b.start):.3g}")
        if pieces:
            object.__setattr__(self, "origin", complex(pieces[0].start))

    @classmethod
    def constant(cls, z: complex) -> "CPath":
        return cls((), complex(z))

    @classmethod
    def polyline(cls, points: Sequence[complex]) -> "CPath":
        pts = [complex(p) for p in points]
        return cls(tuple(Segment(a, b) for a, b in zip(pts, pts[1:])), pts[0])

    @property
    def start(self) -> complex:
        return self.pieces[0].start if self.pieces else self.origin

    @property
    def end(self) -> complex:
        return self.pieces[-1].end if self.pieces else self.origin

    @property
    def length(self) -> float:
        return sum(p.length for p in self.pieces)

    @property
    def is_closed(self) -> bool:
        return abs(self.end - self.start) <= JOIN_TOL

    def breakpoints(self) -> list[float]:
        """Global ``s`` value at the start of every piece, plus 1.0."""
        total = self.length
        out, acc = [], 0.0
        for p in self.pieces:
            out.append(acc / total if total > 0 else 0.0)
            acc += p.length
        out.append(1.0)
        return out

    def locate(self, s: float) -> tuple[int, float]:
        """Map global ``s`` to ``(piece index, local u)``."""
        if not 0.0 <= s <= 1.0:
            raise PathError(f"path parameter {s} outside [0, 1]")
        total = self.length
        if not self.pieces:
            return -1, 0.0
        target = s * total
        acc = 0.0
        for k, p in enumerate(self.pieces):
            L = p.length
            if target <= acc + L or k == len(self.pieces) - 1:
                u = (target - acc) / L if L > 0 else 0.0
                return k, min(1.0, max(0.0, u))
            acc += L
        raise AssertionError("unreachable")

    def point_at(self, s: float) -> complex:
        k, u = self.locate(s)
        if k < 0:
            return self.origin
        if s == 1.0:
            return self.pieces[-1].end
        return self.pieces[k].point(u)

    def reverse(self) -> "CPath":
        return CPath(tuple(p.reversed() for p in reversed(self.pieces)), self.end)

    def then(self, other: "CPath") -> "CPath":
        return compose(self, other)

    def distance(self, z: complex) -> float:
        if not self.pieces:
            return abs(z - self.origin)
        return min(p.distance(z) for p in self.pieces)

    def to_dict(self) -> dict:
        return {"origin": _pair(self.origin), "pieces": [p.to_dict() for p in self.pieces]}

    @classmethod
    def from_dict(cls, d: dict) -> "CPath":
        pieces = []
        for p in d["pieces"]:
            if p["kind"] == "segment":
                pieces.append(Segment(_unpair(p["start"]), _unpair(p["end"])))
            elif p["kind"] == "arc":
                pieces.append(Arc(_unpair(p["center"]), float(p["radius"]),
                                  float(p["angle_start"]), float(p["angle_sweep"])))
            else:
                raise PathError(f"unknown piece kind {p['kind']!r}")
        return cls(tuple(pieces), _unpair(d.get("origin", [0.0, 0.0])))


def compose(a: CPath, b: CPath) -> CPath:
    """Traverse ``a`` then ``b``."""
    if abs(a.end - b.start) > JOIN_TOL:
        raise PathError(f"cannot compose: end {a.end} != start {b.start}")
    return CPath(a.pieces + b.pieces, a.start)


def point_at(path: CPath, s: float) -> complex:
    return path.point_at(s)


def loop_around(base: complex, center: complex, radius: float, turns: int = 1,
                waypoints: Sequence[complex] = ()) -> CPath:
    """Closed path from ``base`` that circles ``center`` ``turns`` times.

    The approach runs base -> waypoints -> nearest point of the circle and is
    retraced in reverse after the circles.  Positive ``turns`` go
    counterclockwise.
    """
    base, center = complex(base), complex(center)
    if not radius > 0:
        raise PathError("loop radius must be positive")
    if turns == 0 or int(turns) != turns:
        raise PathError("turns must be a non-zero integer")
    if abs(base - center) <= radius:
        raise PathError("base point lies inside the loop disk")
    pts = [base] + [complex(w) for w in waypoints]
    for w in pts[1:]:
        if abs(w - center) <= radius:
            raise PathError(f"waypoint {w} lies inside the loop disk")
    for a, b in zip(pts, pts[1:]):
        if Segment(a, b).distance(center) <= radius:
            raise PathError("approach route crosses the loop disk")
    theta = cmath.phase(pts[-1] - center)
    entry = center + radius * cmath.exp(1j * theta)
    approach = CPath.polyline(pts + [entry])
    circle = Arc(center, radius, theta, 2 * math.pi * int(turns))
    return CPath(approach.pieces + (circle,) + approach.reverse().pieces, base)


def winding_number(path: CPath, z: complex) -> int:
    """Winding number of a closed path about ``z``."""
    z = complex(z)
    if not path.is_closed:
        raise PathError("winding number needs a closed path")
    if path.distance(z) <= ON_PATH_TOL:
        raise PathError(f"point {z} lies on the path")
    total = sum(p.winding_angle(z) for p in path.pieces)
    return int(round(total / (2 * math.pi)))
