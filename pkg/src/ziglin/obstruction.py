"""Commutator test over monodromy generators plus symplectic diagnostics.

Non-commuting generators witness a non-abelian monodromy group, which is the
obstruction to meromorphic integrability this package looks for.  The
eigenvalue pairing and non-resonance checks are reported alongside as
diagnostics; they do not gate the conclusion.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "Conclusion", "VerdictOptions", "Witness", "EigenPairing", "ObstructionVerdict",
    "commutator", "noncommuting_pairs", "check_symplectic", "eigen_reciprocal_pairs",
    "choose_multipliers", "nonresonant", "nonresonant_multipliers", "verdict",
]


class Conclusion(str, Enum):
    OBSTRUCTION_FOUND = "ObstructionFound"
    NO_OBSTRUCTION_FOUND = "NoObstructionFound"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class VerdictOptions:
    comm_tol: float = 1e-4
    pair_tol: float = 1e-4
    k_max: int = 6
    resonance_tol: float = 1e-8

    def to_dict(self) -> dict:
        return {"comm_tol": self.comm_tol, "pair_tol": self.pair_tol, "k_max": self.k_max,
                "resonance_tol": self.resonance_tol}


def _as_matrix(T) -> np.ndarray:
    M = getattr(T, "matrix", T)
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    return M


def commutator(T1, T2) -> np.ndarray:
    """``T1 T2 - T2 T1``."""
    A, B = _as_matrix(T1), _as_matrix(T2)
    if A.shape != B.shape:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return A @ B - B @ A


@dataclass
class Witness:
    i: int
    j: int
    norm: float
    relative: float
    commutator: np.ndarray = field(repr=False)


def noncommuting_pairs(generators: Sequence, tol: float = 1e-4) -> list[Witness]:
    """Unordered pairs whose commutator clears ``tol * (1 + |T1| |T2|)``.

    Norms are Frobenius.  The list is sorted by decreasing commutator norm.
    """
    mats = [_as_matrix(g) for g in generators]
    out = []
    for i, j in itertools.combinations(range(len(mats)), 2):
        C = commutator(mats[i], mats[j])
        norm = float(np.linalg.norm(C))
        scale = 1.0 + float(np.linalg.norm(mats[i]) * np.linalg.norm(mats[j]))
        if norm > tol * scale:
            out.append(Witness(i, j, norm, norm / scale, C))
    out.sort(key=lambda w: (-w.norm, w.i, w.j))
    return out


def _J(n: int) -> np.ndarray:
    if n % 2:
        raise ValueError("symplectic check needs an even dimension")
    k = n // 2
    J = np.zeros((n, n))
    J[:k, k:] = np.eye(k)
    J[k:, :k] = -np.eye(k)
    return J


def check_symplectic(T) -> float:
    """Frobenius residual ``|T^T J T - J|`` (plain transpose, no conjugation)."""
    T = _as_matrix(T)
    J = _J(T.shape[0])
    return float(np.linalg.norm(T.T @ J @ T - J))


@dataclass
class EigenPairing:
    pairs: list[tuple[complex, complex]]
    leftovers: list[complex]

    @property
    def complete(self) -> bool:
        return not self.leftovers


def eigen_reciprocal_pairs(T, tol: float = 1e-4) -> EigenPairing:
    """Greedy pairing of eigenvalues with reciprocals, ``|lam*mu - 1| <= tol``.

    Eigenvalues are visited from the largest modulus down; each takes the
    best unused partner.
    """
    T = _as_matrix(T)
    if T.shape[0] % 2:
        raise ValueError("reciprocal pairing needs an even dimension")
    lams = np.linalg.eigvals(T)
    order = sorted(range(len(lams)), key=lambda k: (-abs(lams[k]), k))
    used = set()
    pairs, leftovers = [], []
    for a in order:
        if a in used:
            continue
        used.add(a)
        best, best_err = None, np.inf
        for b in order:
            if b in used:
                continue
            err = abs(lams[a] * lams[b] - 1.0)
            if err < best_err:
                best, best_err = b, err
        if best is not None and best_err <= tol:
            used.add(best)
            pairs.append((complex(lams[a]), complex(lams[best])))
        else:
            leftovers.append(complex(lams[a]))
    return EigenPairing(pairs, leftovers)


def choose_multipliers(pairing: EigenPairing) -> list[complex]:
    """One eigenvalue per pair: modulus at least 1, ties broken by larger argument."""
    out = []
    for a, b in pairing.pairs:
        if abs(abs(a) - abs(b)) > 1e-12 * max(abs(a), abs(b)):
            out.append(a if abs(a) > abs(b) else b)
        else:
            out.append(a if np.angle(a) >= np.angle(b) else b)
    return out


def nonresonant_multipliers(lams: Sequence[complex], k_max: int = 6,
                            tol: float = 1e-8) -> tuple[bool, tuple[int, ...] | None]:
    """Search ``|k_i| <= k_max`` for ``prod lam_i^k_i = 1``.

    Returns ``(True, None)`` when no relation exists, otherwise ``(False, k)``
    with the canonical witness: first non-zero entry positive, smallest
    ``sum |k_i|``, then lexicographically smallest.
    """
    lams = [complex(v) for v in lams]
    p = len(lams)
    best = None
    for k in itertools.product(range(-k_max, k_max + 1), repeat=p):
        nz = next((v for v in k if v), 0)
        if nz <= 0:
            continue
        prod = 1.0 + 0j
        for lam, e in zip(lams, k):
            if e:
                if lam == 0:
                    prod = np.inf
                    break
                prod *= lam ** e
        if abs(prod - 1.0) <= tol:
            key = (sum(abs(v) for v in k), k)
            if best is None or key < best:
                best = key
    if best is None:
        return True, None
    return False, best[1]


def nonresonant(T, k_max: int = 6, tol: float = 1e-8,
                pair_tol: float = 1e-4) -> tuple[bool, tuple[int, ...] | None]:
    """Non-resonance of a symplectic matrix through its chosen multipliers."""
    pairing = eigen_reciprocal_pairs(T, pair_tol)
    if pairing.leftovers:
        raise ValueError("eigenvalues do not split into reciprocal pairs")
    return nonresonant_multipliers(choose_multipliers(pairing), k_max, tol)


@dataclass
class ObstructionVerdict:
    conclusion: Conclusion
    witnesses: list[Witness]
    notes: list[str]
    diagnostics: list[dict] = field(default_factory=list)
    options: VerdictOptions = field(default_factory=VerdictOptions)

    def to_dict(self) -> dict:
        def pair(z):
            return [float(np.real(z)), float(np.imag(z))]
        return {
            "conclusion": self.conclusion.value,
            "witnesses": [{"pair": [w.i, w.j], "norm": w.norm, "relative": w.relative,
                           "commutator": [[pair(z) for z in row] for row in w.commutator]}
                          for w in self.witnesses],
            "notes": list(self.notes),
            "generators": self.diagnostics,
            "options": self.options.to_dict(),
        }


def _generator_diagnostics(T, opts: VerdictOptions) -> dict:
    n = T.shape[0]
    d = {"det_residual": float(abs(np.linalg.det(T) - 1.0))}
    if n % 2:
        return d
    d["symplectic_residual"] = check_symplectic(T)
    pairing = eigen_reciprocal_pairs(T, opts.pair_tol)
    d["unpaired_eigenvalues"] = len(pairing.leftovers)
    if pairing.complete:
        ok, wit = nonresonant_multipliers(choose_multipliers(pairing), opts.k_max,
                                          opts.resonance_tol)
        d["nonresonant"] = ok
        d["resonance"] = list(wit) if wit else None
    return d


def verdict(report, opts: VerdictOptions | None = None) -> ObstructionVerdict:
    """Pairwise commutators of the report's generators.

    ``ObstructionFound`` needs at least one non-commuting pair.  Otherwise a
    non-returning or aborted probe makes the result ``Inconclusive``, since
    the loop may hide a logarithmic branch point with no matrix to compare.
    """
    opts = opts or VerdictOptions()
    gens = list(report.generators)
    mats = [_as_matrix(g) for g in gens]
    witnesses = noncommuting_pairs(mats, opts.comm_tol)
    classes = [str(o.classification) for o in report.outcomes]
    notes = []
    diags = []
    for k, (g, M) in enumerate(zip(gens, mats)):
        d = {"index": k, **_generator_diagnostics(M, opts)}
        cand = getattr(g, "candidate", None)
        if cand is not None:
            d["candidate"] = [complex(cand).real, complex(cand).imag]
        diags.append(d)
    n_nonret = classes.count("NonReturning")
    n_abort = classes.count("Aborted")
    if n_nonret:
        notes.append(f"{n_nonret} probe(s) never returned: possible logarithmic branching, "
                     "no monodromy matrix for those loops")
    if n_abort:
        notes.append(f"{n_abort} probe(s) aborted during integration")
    if witnesses:
        conclusion = Conclusion.OBSTRUCTION_FOUND
        w = witnesses[0]
        notes.append(f"generators {w.i} and {w.j} do not commute (|[T_i, T_j]| = {w.norm:.6g})")
    elif n_nonret or n_abort:
        conclusion = Conclusion.INCONCLUSIVE
    else:
        conclusion = Conclusion.NO_OBSTRUCTION_FOUND
        notes.append("all generators commute; retry with different initial data "
                     "or a larger domain")
    return ObstructionVerdict(conclusion, witnesses, notes, diags, opts)
