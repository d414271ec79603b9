import json
import math

import numpy as np
import pytest

from ziglin.cpath import PathError, compose, loop_around, winding_number
from ziglin.monodromy import (
    Classification, ProbeOptions, ProbeOutcome, ScanReport, grid_nodes, loop_matrix, probe,
    probe_report, return_distance, scan,
)
from ziglin.odeint import IntegratorOptions
from ziglin.systems import (
    henon_heiles, oracle_cubic, oracle_harmonic, oracle_linear_pole, oracle_riccati,
)
from ziglin.system import vector_field

from ziglin.obstruction import check_symplectic, eigen_reciprocal_pairs

from fuchsian import hamiltonian_fuchsian, random_fuchsian

T0 = 0.1 + 0.05j
X0 = [0, 0]
SEEDS = [11, 23, 37, 41, 59]


def popts(backend=None, **kw):
    return ProbeOptions(integrator=IntegratorOptions(backend=backend), **kw)


# ------------------------------------------------------------------ return distance

def test_return_distance_examples():
    assert return_distance([1, 2], [1, 2]) == 0
    assert return_distance([0.1], [0.1 + 2 * math.pi], {0}) < 1e-15
    assert return_distance([0], [0.5]) == 0.5


def test_return_distance_angles_reduce_real_part_only():
    d = return_distance([0.1, 1.0], [0.1 + 4 * math.pi + 0.2j, 1.0], {0})
    assert d == pytest.approx(0.2)
    assert return_distance([0.0, 0.0], [2 * math.pi, 0.0], ()) == pytest.approx(2 * math.pi)
    with pytest.raises(ValueError):
        return_distance([1, 2], [1])


# ------------------------------------------------------------------ probes

def test_harmonic_probe_is_trivial(backend):
    for c in (1 + 1j, -2 + 0.5j, 3j):
        o = probe(oracle_harmonic(), [1, 0], 0, c, popts(backend))
        assert o.classification is Classification.TRIVIAL and o.traversals_used == 1
        assert o.generator is None


def test_cubic_branch_point_needs_two_laps(backend):
    o = probe(oracle_cubic(), [1], 0, 0.5, popts(backend))
    assert o.classification is Classification.TRIVIAL
    assert o.traversals_used == 2 and o.matrix_deviation <= 1e-7


def test_cubic_single_lap_is_not_enough(backend):
    o = probe(oracle_cubic(), [1], 0, 0.5, popts(backend, max_traversals=1))
    assert o.classification is Classification.NON_RETURNING and o.traversals_used == 1
    assert o.return_residual == pytest.approx(2, rel=1e-6)  # x -> -x after one lap


def test_riccati_pole_probe(backend):
    o = probe(oracle_riccati(), [1], 0, 1, popts(backend))
    assert o.classification is Classification.TRIVIAL and o.return_residual <= 1e-8


def test_linear_pole_generator(backend):
    o = probe(oracle_linear_pole(1 / 3, 0), [0], 1, 0, popts(backend))
    assert o.classification is Classification.GENERATOR
    g = o.generator
    assert g.traversals == 1 and g.matrix.shape == (1, 1)
    assert abs(g.matrix[0, 0] - np.exp(2j * math.pi / 3)) <= 1e-8
    assert winding_number(g.loop, 0) == 1


def test_linear_pole_state_returns_after_three_laps(backend):
    o = probe(oracle_linear_pole(1 / 3, 0), [1], 1, 0, popts(backend))
    assert o.classification is Classification.TRIVIAL and o.traversals_used == 3


def test_log_branching_never_returns(backend):
    s = vector_field(["x", "y"], ["1", "1/x"])  # y = log(x): logarithmic branch
    o = probe(s, [1, 0], 0, -1, popts(backend, max_traversals=4))
    assert o.classification is Classification.NON_RETURNING and o.traversals_used == 4
    assert o.return_residual == pytest.approx(8 * math.pi, rel=1e-8)


def test_probe_aborts_when_the_loop_hits_a_pole(backend):
    # the circle of radius 0.5 about 1.5 passes through the pole at t = 1
    o = probe(oracle_riccati(), [1], 0, 1.5, popts(backend, radius=0.5))
    assert o.classification is Classification.ABORTED
    assert "singularity_proximity" in o.abort_reason


def test_probe_precondition_errors():
    with pytest.raises(PathError):
        probe(oracle_riccati(), [1], 0, 0)
    with pytest.raises(PathError):
        probe(oracle_riccati(), [1], 0, 0.3, ProbeOptions(radius=0.5))


def test_hamiltonian_generator_residuals(backend):
    s = hamiltonian_fuchsian()
    for c in (2 + 1j, 2 - 1j):
        o = probe(s, [0, 0], 0, c, popts(backend))
        assert o.classification is Classification.GENERATOR
        g = o.generator
        assert g.det_residual <= 1e-6 and g.symplectic_residual <= 1e-5
        assert check_symplectic(g.matrix) == pytest.approx(g.symplectic_residual)
        assert eigen_reciprocal_pairs(g.matrix, 1e-4).complete


# ------------------------------------------------------------------ laws (Fuchsian oracle)

@pytest.mark.parametrize("seed", SEEDS)
def test_homotopy_invariance(seed):
    s, c1, _ = random_fuchsian(seed)
    a = probe(s, X0, T0, c1, ProbeOptions(radius=0.4)).generator.matrix
    b = probe(s, X0, T0, c1, ProbeOptions(radius=0.2)).generator.matrix
    assert np.all(np.abs(a - b) <= 1e-5 * (1 + np.abs(a)))


@pytest.mark.parametrize("seed", SEEDS)
def test_inverse_law(seed):
    s, c1, _ = random_fuchsian(seed)
    ccw = probe(s, X0, T0, c1, ProbeOptions()).generator.matrix
    cw = probe(s, X0, T0, c1, ProbeOptions(orientation=-1)).generator.matrix
    assert np.linalg.norm(ccw @ cw - np.eye(2)) <= 1e-5


@pytest.mark.parametrize("seed", SEEDS)
def test_composition_law(seed):
    s, c1, c2 = random_fuchsian(seed)
    g1 = probe(s, X0, T0, c1, ProbeOptions()).generator
    g2 = probe(s, X0, T0, c2, ProbeOptions()).generator
    T, x_end, _ = loop_matrix(s, X0, compose(g1.loop, g2.loop))  # g1 first
    assert np.linalg.norm(T - g2.matrix @ g1.matrix) <= 1e-5 * (1 + np.linalg.norm(T))
    # the other order is genuinely different: the generators do not commute
    assert np.linalg.norm(T - g1.matrix @ g2.matrix) > 1e-3


def test_fuchsian_local_monodromy_eigenvalues():
    s, c1, _ = random_fuchsian(5)
    A1 = np.array([[s.A([0, 0], t=c1 + 1e-3)[i, j] for j in range(2)] for i in range(2)]) * 1e-3
    T = probe(s, X0, T0, c1, ProbeOptions(radius=0.1)).generator.matrix
    # the local exponents are the eigenvalues of the residue A1 (no resonance here)
    expected = np.sort_complex(np.exp(2j * math.pi * np.linalg.eigvals(A1)))
    assert np.allclose(np.sort_complex(np.linalg.eigvals(T)), expected, atol=1e-2)


def test_accumulation_multiplies_on_the_left():
    # two laps around the cubic branch point equal two single-lap loops composed
    s = oracle_cubic()
    two = loop_around(0, 0.5, 0.4, 2)
    T2, x2, _ = loop_matrix(s, [1], two)
    o = probe(s, [1], 0, 0.5)
    assert abs(x2[0] - 1) < 1e-8
    assert abs(T2[0, 0] - 1) < 1e-8 and o.traversals_used == 2


# ------------------------------------------------------------------ scans

def test_grid_nodes_row_major():
    nodes, spacing = grid_nodes((0, 2, -1, 1), (3, 2))
    assert nodes == [0 - 1j, 1 - 1j, 2 - 1j, 0 + 1j, 1 + 1j, 2 + 1j]
    assert spacing == 1
    nodes, spacing = grid_nodes((0, 1, 0, 2), (1, 1))
    assert nodes == [0.5 + 1j] and spacing == 1
    with pytest.raises(ValueError):
        grid_nodes((0, 0, 0, 1), (2, 2))
    with pytest.raises(ValueError):
        grid_nodes((0, 1, 0, 1), (0, 2))


def test_linear_scan_all_trivial():
    s = vector_field(["x", "y"], ["0.3*x - y", "2*x + 0.1*y"])
    r = scan(s, [1, 1j], 0.5 + 0.5j, (-2, 2, -2, 2), (5, 5), jobs=2)
    assert len(r.outcomes) == 25
    assert all(o.classification is Classification.TRIVIAL for o in r.outcomes)
    assert r.options.radius == pytest.approx(0.45)


def test_riccati_scan_with_node_on_pole():
    r = scan(oracle_riccati(), [1], 0.25 + 0.3j, (0.5, 1.5, -0.5, 0.5), (3, 3))
    assert any(abs(o.candidate - 1) < 1e-12 for o in r.outcomes)
    assert all(o.classification is Classification.TRIVIAL for o in r.outcomes)


def test_scan_skips_nodes_near_base():
    r = scan(oracle_harmonic(), [1, 0], 0, (-1, 1, -1, 1), (3, 3))
    by_node = {o.candidate: o.classification for o in r.outcomes}
    assert by_node[0j] is Classification.SKIPPED
    assert sum(c is Classification.SKIPPED for c in by_node.values()) == 1


def test_scan_order_independent_of_jobs():
    s = oracle_cubic()
    a = scan(s, [1], 0, (0.2, 0.8, -0.3, 0.3), (3, 3), jobs=1)
    b = scan(s, [1], 0, (0.2, 0.8, -0.3, 0.3), (3, 3), jobs=4)
    da, db = a.to_dict(), b.to_dict()
    da.pop("timestamp"), db.pop("timestamp")
    assert json.dumps(da) == json.dumps(db)


# ------------------------------------------------------------------ serialization

def test_report_round_trip():
    r = probe_report(oracle_linear_pole(0.25 + 0.1j, 0), [0], 1, [0, 3j])
    d = json.loads(json.dumps(r.to_dict()))
    back = ScanReport.from_dict(d)
    assert [o.classification for o in back.outcomes] == [o.classification for o in r.outcomes]
    assert np.array_equal(back.generators[0].matrix, r.generators[0].matrix)
    assert back.generators[0].loop == r.generators[0].loop
    assert json.dumps(back.to_dict()) == json.dumps(d)
    m = d["outcomes"][0]["generator"]["matrix"]
    assert isinstance(m[0][0], list) and len(m[0][0]) == 2


def test_report_rejects_dimension_mismatch():
    r = probe_report(oracle_linear_pole(0.5, 0), [0], 1, [0])
    d = r.to_dict()
    d["outcomes"][0]["generator"]["matrix"] = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]
    with pytest.raises(ValueError):
        ScanReport.from_dict(d)


def test_outcome_invariants_hold():
    r = scan(oracle_cubic(), [1], 0, (0.2, 0.8, -0.3, 0.3), (3, 3))
    opts = r.options
    for o in r.outcomes:
        if o.classification is Classification.GENERATOR:
            assert o.generator and o.return_residual <= opts.return_tol
            assert o.matrix_deviation > opts.matrix_tol
        elif o.classification is Classification.TRIVIAL:
            assert o.return_residual <= opts.return_tol
            assert o.matrix_deviation <= opts.matrix_tol
        elif o.classification is Classification.NON_RETURNING:
            assert o.traversals_used == opts.max_traversals


def test_probe_outcome_dict_round_trip():
    o = ProbeOutcome(1 + 2j, Classification.ABORTED, abort_reason="overflow near t=1")
    assert ProbeOutcome.from_dict(json.loads(json.dumps(o.to_dict()))) == o
