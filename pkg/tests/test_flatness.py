import pytest

from artifact.anchored import quantum_hamiltonian
from artifact.cycles import Cycle, classify_cycle, imd_total
from artifact.flatness import (FlatnessError, ResourceLimit, check_classical_flatness,
                               check_connection, check_family, check_quantum_flatness, class_name,
                               evaluate_algebra, evaluate_element, imd_cycles, intersection_census,
                               intersection_key, random_assignment)
from artifact.quiver import build_graph, cyclic_orientation, default_symplectic
from artifact.reductions import u_commutator, u_gen
from artifact.weyl import WeylAlgebra

from helpers import bipartite, star


def test_intersection_key():
    c3 = Cycle.from_nodes([1, 2, 3])
    c2 = Cycle.from_nodes([1, 2])
    assert class_name(intersection_key(c3, c2)) == "3x2/1"
    assert intersection_key(c3, Cycle.from_nodes([1, 2, 3])) is None
    d1, d2 = Cycle.from_nodes([2, 1, 2, 3]), Cycle.from_nodes([2, 3, 2, 4])
    assert class_name(intersection_key(d1, d2)) == "D4xD4/2/same-centre"


# frozen from the enumeration, cross-checked by hand against the cycle shapes
CENSUS_2111 = {
    "3x2/1": (True, True), "3x3/1": (True, True), "3x3/3": (True, False),
    "D4x2/2": (False, False), "D4x3/1": (True, False), "D4xN4/2": (True, False),
    "N4x2/1": (True, True), "N4x3/1": (True, True), "N4x3/2": (True, False),
    "N4xN4/2": (True, False), "N4xN4/4": (True, False),
}


def test_census_2111_classes():
    r = intersection_census(build_graph([2, 1, 1, 1]))
    assert {x["class"]: (x["nonzero"], x["antiparallel_free"]) for x in r["classes"]} == CENSUS_2111


def test_census_2111_has_no_degenerate_pairs():
    # one part of size two: every degenerate 4-cycle is i -> j -> m -> j -> i with {i, m} that
    # part, so no two distinct ones share a centre
    g = build_graph([2, 1, 1, 1])
    d4 = [c for c in imd_cycles(g) if classify_cycle(c).kind == "degenerate_four"]
    centres = [classify_cycle(c).center for c in d4]
    assert d4 and len(set(centres)) == len(centres)
    assert all(set(c.nodes()) >= {1, 2} for c in d4)


def test_census_321():
    r = intersection_census(build_graph([3, 2, 1]))
    assert (r["total"], r["nonzero"], r["antiparallel_free"]) == (15, 13, 5)


def test_classical_flatness_report():
    r = check_classical_flatness(build_graph([1, 1, 1]))
    assert r["summary"]["all_zero"] and r["summary"]["pairs"] == 3
    assert r["pairs"][0]["intersections"]


def test_unit_constants_are_not_flat_on_generic_graphs():
    g = build_graph([1, 1, 1])
    for orient in (None, cyclic_orientation(g)):
        r = check_classical_flatness(g, default_symplectic(g, "unit", orient))
        assert not r["summary"]["all_zero"]


def test_generic_quantum_flatness():
    r = check_quantum_flatness(build_graph([2, 1, 1]))
    assert r["summary"]["all_zero"] and r["summary"]["exact"]


def test_resource_limit_and_fallback():
    g = star(2)
    with pytest.raises(ResourceLimit) as e:
        check_quantum_flatness(g, max_terms=5)
    assert "fallback" in e.value.suggestion
    r = check_quantum_flatness(g, max_terms=5, fallback=True, seed=3)
    assert r["summary"]["all_zero"] and not r["summary"]["exact"]
    assert {p["status"] for p in r["pairs"]} == {"pass_random"}


def test_random_fallback_detects_failure():
    g = bipartite()
    s = default_symplectic(g)
    alg = WeylAlgebra(s)
    bad = quantum_hamiltonian(g, alg, 3) + quantum_hamiltonian(g, alg, 1)
    r = check_connection(g, s, {3: bad}, max_terms=1, fallback=True)
    assert not r["summary"]["all_zero"]


def test_connection_with_own_hamiltonians_is_flat():
    g = bipartite()
    s = default_symplectic(g)
    alg = WeylAlgebra(s)
    r = check_connection(g, s, {3: quantum_hamiltonian(g, alg, 3)})
    assert r["summary"]["all_zero"]


def test_connection_errors():
    g = star(2)
    s = default_symplectic(g)
    alg = WeylAlgebra(s)
    with pytest.raises(FlatnessError):
        check_connection(g, s, {1: alg.one()})
    other = WeylAlgebra(s)
    with pytest.raises(FlatnessError):
        check_connection(g, s, {2: alg.one(), 3: other.one()})


def test_check_family_validates_time_names():
    with pytest.raises(FlatnessError):
        check_family({1: u_gen(1, 1, 1), 2: u_gen(1, 2, 2)}, {1: "(t1)", 2: "t2"}, u_commutator)


def test_evaluation_helpers():
    g = build_graph([1, 1, 1])
    s = default_symplectic(g)
    alg = WeylAlgebra(s)
    h = quantum_hamiltonian(g, alg, 1)
    names = {"a1", "a2", "a3", "t1", "t2", "t3"}
    point = random_assignment(names, seed=1)
    assert random_assignment(names, seed=1) == point
    ev = evaluate_algebra(alg, point)
    x = evaluate_element(h, point, ev)
    assert x.alg is ev and all(v.is_constant() for v in x.terms.values())
    assert len(x) <= len(h)


def test_curl_uses_graph_times():
    g = build_graph([2, 1, 1])
    assert imd_total(g, 1).terms
    assert all(p["curl_residue"] == "0" for p in check_classical_flatness(g)["pairs"])
