"""Numerical monodromy generators for complexified ODEs.

Integrate a system together with its variational equations around loops in
complex time, collect the monodromy matrices and test whether they commute.
"""
__version__ = "0.1.0"

from .cpath import CPath, Arc, Segment, PathError, compose, loop_around, point_at, winding_number
from .expr import Expr, diff, evaluate, parse, render
from .kernel import available_backends, default_backend
from .monodromy import (
    Classification, MonodromyGenerator, ProbeOptions, ProbeOutcome, ScanReport,
    probe, probe_report, return_distance, scan,
)
from .obstruction import (
    Conclusion, ObstructionVerdict, VerdictOptions, check_symplectic, commutator,
    eigen_reciprocal_pairs, noncommuting_pairs, nonresonant, verdict,
)
from .odeint import AugmentedState, IntegratorOptions, TraceResult, integrate_augmented
from .system import SystemDef, hamilton_equations, parse_system, vector_field

__all__ = [
    "__version__", "CPath", "Arc", "Segment", "PathError", "compose", "loop_around",
    "point_at", "winding_number", "Expr", "diff", "evaluate", "parse", "render",
    "available_backends", "default_backend", "Classification", "MonodromyGenerator",
    "ProbeOptions", "ProbeOutcome", "ScanReport", "probe", "probe_report",
    "return_distance", "scan", "Conclusion", "ObstructionVerdict", "VerdictOptions",
    "check_symplectic", "commutator", "eigen_reciprocal_pairs", "noncommuting_pairs",
    "nonresonant", "verdict", "AugmentedState", "IntegratorOptions", "TraceResult",
    "integrate_augmented", "SystemDef", "hamilton_equations", "parse_system", "vector_field",
]
