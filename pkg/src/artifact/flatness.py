"""Strong flatness checks: curl identities and pairwise commutation.

Every residue is exact, so a pass means a syntactic zero.  Large quantum
instances may instead be checked at a seeded random rational point, which
can certify failure but only gives probabilistic evidence of success.
"""

from collections import Counter
from fractions import Fraction
import itertools
import random

from .anchored import quantum_hamiltonian
from .cycles import (classify_cycle, has_antiparallel_pair, imd_potential,
                     imd_total, necklace_bracket, poisson_bracket_oracle, trace)
from .quiver import SymplecticData, default_symplectic
from .scalars import PoleHit, Scalar
from .weyl import WeylAlgebra, WeylElement, weyl_commutator


class FlatnessError(Exception):
    pass


class ResourceLimit(FlatnessError):
    def __init__(self, message, suggestion="rerun with the random-evaluation fallback"):
        super().__init__(message)
        self.suggestion = suggestion


# intersection classes

def imd_cycles(g):
    """All cycles in the support of some IMD potential of g."""
    out = set()
    for i in g.nodes:
        for w in imd_potential(g, i):
            out.update(w.terms)
    return out


def intersection_key(c1, c2):
    """Coarse class of a pair of IMD cycles, or None if they share no antiparallel pair."""
    b = set(c2.word)
    shared = sum(1 for a in c1.word if a.star in b)
    if not shared:
        return None
    t1, t2 = classify_cycle(c1), classify_cycle(c2)
    same_centre = None
    if t1.kind == t2.kind == "degenerate_four":
        same_centre = t1.center == t2.center
    return tuple(sorted([t1.kind, t2.kind])) + (shared, same_centre)


_SHORT = {"two_cycle": "2", "three_cycle": "3", "degenerate_four": "D4", "nondegenerate_four": "N4"}


def class_name(key):
    a, b, shared, centre = key
    name = f"{_SHORT[a]}x{_SHORT[b]}/{shared}"
    if centre is not None:
        name += "/same-centre" if centre else "/different-centres"
    return name


def intersection_census(g, s=None):
    """Enumerate the classes of nontrivial intersections of IMD cycles on g.

    A class is nonzero when its representative has a nonzero necklace
    bracket, and antiparallel-free when that bracket is a combination of
    cycles without antiparallel pairs.
    """
    s = s or default_symplectic(g)
    classes = {}
    for c1, c2 in itertools.combinations(sorted(imd_cycles(g)), 2):
        key = intersection_key(c1, c2)
        if key is None or key in classes:
            continue
        br = necklace_bracket(c1, c2, s)
        nonzero = not br.is_zero()
        free = nonzero and not any(has_antiparallel_pair(c.word) for c in br.terms)
        classes[key] = {"class": class_name(key), "nonzero": nonzero,
                        "antiparallel_free": free, "example": [repr(c1), repr(c2)]}
    rows = sorted(classes.values(), key=lambda r: r["class"])
    return {
        "classes": rows,
        "total": len(rows),
        "nonzero": sum(r["nonzero"] for r in rows),
        "antiparallel_free": sum(r["antiparallel_free"] for r in rows),
    }


def _breakdown(w1, w2):
    counts = Counter()
    for c1 in w1.terms:
        for c2 in w2.terms:
            key = intersection_key(c1, c2)
            if key is not None:
                counts[class_name(key)] += 1
    return dict(sorted(counts.items()))


# reports

def _pair(i, j, curl, comm, method="symbolic", breakdown=None):
    ok = curl.is_zero() and comm.is_zero()
    if method == "random" and ok:
        status = "pass_random"
    else:
        status = "pass" if ok else "fail"
    out = {"i": i, "j": j, "curl_residue": repr(curl) if not curl.is_zero() else "0",
           "commutator_residue": repr(comm) if not comm.is_zero() else "0",
           "status": status, "method": method}
    if breakdown is not None:
        out["intersections"] = breakdown
    return out


def _summary(pairs, mode):
    failed = sum(p["status"] == "fail" for p in pairs)
    return {"pairs": pairs,
            "summary": {"mode": mode, "pairs": len(pairs), "passed": len(pairs) - failed,
                        "failed": failed, "all_zero": failed == 0,
                        "exact": all(p["method"] == "symbolic" for p in pairs)}}


def check_classical_flatness(g, s=None):
    """Curl and Poisson-commutation of the classical Hamiltonians."""
    s = s or default_symplectic(g)
    nodes = g.dynamical_nodes()
    W = {i: imd_total(g, i) for i in nodes}
    H = {i: trace(W[i], g) for i in nodes}
    pairs = []
    for i, j in itertools.combinations(nodes, 2):
        curl = H[j].partial(g.time_name(i)) - H[i].partial(g.time_name(j))
        comm = poisson_bracket_oracle(H[i], H[j], s)
        pairs.append(_pair(i, j, curl, comm, breakdown=_breakdown(W[i], W[j])))
    return _summary(pairs, "classical")


def random_assignment(names, seed=0, avoid=()):
    """Seeded random rationals for the given symbol names."""
    rng = random.Random(seed)
    return {n: Fraction(rng.randint(-97, 97), rng.randint(1, 13)) for n in sorted(names)}


def evaluate_algebra(alg, assignment):
    """The Weyl algebra with its structure constants evaluated at a point."""
    s = alg.symp
    const = {a: Scalar(c.evaluate(assignment)) for a, c in s.const.items()}
    return WeylAlgebra(SymplecticData(s.graph, s.positive, const, s.convention))


def evaluate_element(x, assignment, alg=None):
    """Evaluate the coefficients; alg is the evaluated algebra (same normal words)."""
    alg = alg or evaluate_algebra(x.alg, assignment)
    return WeylElement(alg, {w: v.evaluate(assignment) for w, v in x.terms.items()})


def _free_symbols(elements):
    out = set()
    for x in elements:
        for v in x.terms.values():
            out |= v.free_symbols()
    return out


def _check_battery(g, H, max_terms, seed, fallback, breakdowns, mode):
    nodes = sorted(H)
    point = None
    pairs = []
    for i, j in itertools.combinations(nodes, 2):
        curl = H[i].partial(g.time_name(j)) - H[j].partial(g.time_name(i))
        size = len(H[i]) * len(H[j])
        method = "symbolic"
        if max_terms is not None and size > max_terms:
            if not fallback:
                raise ResourceLimit(f"commutator of nodes {i}, {j} needs {size} term products "
                                    f"(budget {max_terms})")
            if point is None:
                point = _random_point(H.values(), seed)
                point_alg = evaluate_algebra(H[i].alg, point)
            comm = weyl_commutator(evaluate_element(H[i], point, point_alg),
                                   evaluate_element(H[j], point, point_alg))
            method = "random"
        else:
            comm = weyl_commutator(H[i], H[j])
        pairs.append(_pair(i, j, curl, comm, method, breakdowns.get((i, j))))
    return _summary(pairs, mode)


def _random_point(elements, seed):
    elements = list(elements)
    names = _free_symbols(elements)
    for x in elements[:1]:
        for c in x.alg.symp.const.values():
            names |= c.free_symbols()
    for attempt in range(50):
        point = random_assignment(names, seed + attempt)
        try:
            for x in elements:
                for v in x.terms.values():
                    v.evaluate(point)
                for c in x.alg.symp.const.values():
                    if c.evaluate(point) == 0:
                        raise PoleHit("degenerate structure constant")
        except PoleHit:
            continue
        return point
    raise FlatnessError("no pole-free random point found")


def check_quantum_flatness(g, s=None, max_terms=None, seed=0, fallback=False):
    """Curl and commutation of the quantum Hamiltonians in normal form.

    When a pair needs more than max_terms products of terms, ResourceLimit
    is raised unless fallback is set, in which case the commutator is taken
    at a seeded random rational point.
    """
    s = s or default_symplectic(g)
    alg = WeylAlgebra(s)
    nodes = g.dynamical_nodes()
    H = {i: quantum_hamiltonian(g, alg, i) for i in nodes}
    W = {i: imd_total(g, i) for i in nodes}
    breakdowns = {(i, j): _breakdown(W[i], W[j]) for i, j in itertools.combinations(nodes, 2)}
    return _check_battery(g, H, max_terms, seed, fallback, breakdowns, "quantum")


def check_connection(g, s=None, overrides=None, max_terms=None, seed=0, fallback=False):
    """The quantum battery on user Hamiltonians.

    overrides maps nodes to WeylElements; every other node carrying a time
    keeps its quantum Hamiltonian, built in the overrides' algebra.
    """
    overrides = dict(overrides or {})
    nodes = g.dynamical_nodes()
    for n in overrides:
        if n not in nodes:
            raise FlatnessError(f"node {n} carries no Hamiltonian")
    algs = {id(x.alg): x.alg for x in overrides.values()}
    if len(algs) > 1:
        raise FlatnessError("overrides live in different Weyl algebras")
    alg = next(iter(algs.values())) if algs else WeylAlgebra(s or default_symplectic(g))
    H = {i: overrides[i] if i in overrides else quantum_hamiltonian(g, alg, i) for i in nodes}
    return _check_battery(g, H, max_terms, seed, fallback, {}, "connection")


def check_family(hamiltonians, time_names, commutator):
    """The curl and commutator battery on any family of elements.

    hamiltonians and time_names are dicts keyed alike; elements need
    partial(name), is_zero() and the given commutator.
    """
    keys = sorted(hamiltonians)
    for k in keys:
        name = time_names[k]
        if not (isinstance(name, str) and name.isidentifier()):
            raise FlatnessError(f"time name {name!r} is not a symbol name")
    pairs = []
    for i, j in itertools.combinations(keys, 2):
        hi, hj = hamiltonians[i], hamiltonians[j]
        curl = hi.partial(time_names[j]) - hj.partial(time_names[i])
        pairs.append(_pair(i, j, curl, commutator(hi, hj)))
    return _summary(pairs, "family")
