import itertools

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from artifact.cycles import TracePolynomial
from artifact.quiver import Arrow, build_graph, default_symplectic
from artifact.scalars import ONE, symbol
from artifact.weyl import (WeylAlgebra, WeylError, ZeroElement, element_from_json, filtration_order,
                           rees_homogenize, semiclassical_limit, weyl_commutator)

from helpers import apply_weyl

G = build_graph([1, 1, 1], [2, 1, 1])
S = default_symplectic(G, "phi")
A = WeylAlgebra(S)


def test_generator_count():
    # arrows between parts of dims 2,1,1: 2*(2 + 2 + 1) entries each way
    assert len(A) == 10


def test_canonical_commutators():
    for n, key in enumerate(A.gens):
        x = A.gen(*key)
        for m, other in enumerate(A.gens):
            y = A.gen(*other)
            c = weyl_commutator(x, y)
            if m == A.partner[n]:
                assert c == A.scalar(S.c(Arrow(key[0], key[1])))
            else:
                assert c.is_zero()


def test_normal_form_of_reversed_pair():
    # X^{2->1} X^{1->2} = X^{1->2} X^{2->1} - c(1->2) with 1->2 positive
    p, q = A.gen(1, 2, 1, 1), A.gen(2, 1, 1, 1)
    assert q * p == p * q - A.scalar(S.c(Arrow(1, 2)))
    assert len(p * q) == 1


def test_order_and_symbol():
    p, q = A.gen(1, 2, 1, 1), A.gen(2, 1, 1, 1)
    x = q * p * p + A.scalar(3)
    assert filtration_order(x) == 3
    assert semiclassical_limit(x) == TracePolynomial({((1, 2, 1, 1), (1, 2, 1, 1), (2, 1, 1, 1)): ONE})
    parts = rees_homogenize(x)
    assert sorted(parts) == [0, 1, 3]
    with pytest.raises(ZeroElement):
        A.zero().order()


def test_trace_word_requires_closed_path():
    with pytest.raises(WeylError):
        A.trace_word([Arrow(1, 2), Arrow(1, 3)])


def test_json_round_trip():
    x = A.trace_word([Arrow(2, 1), Arrow(3, 2), Arrow(1, 3)]).scale(symbol("a1"))
    assert element_from_json(A, x.to_json()) == x


def test_time_derivative():
    t = symbol("t1")
    x = A.gen(1, 2, 1, 1).scale(t * t)
    assert x.partial("t1") == A.gen(1, 2, 1, 1).scale(2 * t)


# random elements of a small algebra

SMALL = build_graph([1, 1], [2, 1])
SS = default_symplectic(SMALL, "unit")
SA = WeylAlgebra(SS)


@st.composite
def elements(draw, alg=SA):
    x = alg.zero()
    for _ in range(draw(st.integers(1, 3))):
        letters = draw(st.lists(st.integers(0, len(alg) - 1), max_size=3))
        c = draw(st.integers(-3, 3))
        x = x + type(x)(alg, alg.ordered_product(letters)).scale(c)
    return x


@settings(max_examples=40, deadline=None)
@given(elements(), elements(), elements())
def test_associativity(x, y, z):
    assert (x * y) * z == x * (y * z)


@settings(max_examples=40, deadline=None)
@given(elements(), elements(), elements())
def test_jacobi(x, y, z):
    c = weyl_commutator
    assert (c(x, c(y, z)) + c(y, c(z, x)) + c(z, c(x, y))).is_zero()


@settings(max_examples=30, deadline=None)
@given(elements(), elements())
def test_product_acts_as_composition(x, y):
    syms = [sympy.Symbol(f"x_{t}_{h}_{k}_{l}") for t, h, k, l in SA.gens
            if SS.is_positive(Arrow(t, h))]
    p = sympy.expand(sum(s ** 2 for s in syms) * syms[0] + syms[-1])
    assert apply_weyl(x * y, p) == sympy.expand(apply_weyl(x, apply_weyl(y, p)))


@settings(max_examples=30, deadline=None)
@given(elements(), elements())
def test_symbol_of_product(x, y):
    if x.is_zero() or y.is_zero() or (x * y).is_zero():
        return
    assert semiclassical_limit(x * y) == semiclassical_limit(x) * semiclassical_limit(y)


def test_commutator_lowers_order_by_two():
    for a, b in itertools.product(SA.gens, repeat=2):
        x = SA.gen(*a) * SA.gen(*b)
        y = SA.gen(*b[:2][::-1], *b[2:][::-1]) * SA.gen(*a[:2][::-1], *a[2:][::-1])
        c = weyl_commutator(x, y)
        assert c.is_zero() or c.order() <= 2
