"""Shared graphs, oracles and the acceptance registry."""

import json
import os

import sympy

from artifact.cycles import Cycle
from artifact.quiver import Arrow
from artifact.quiver import build_graph, graph_from_json

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "examples", "tour", "configs")

# criterion number -> (title, passed, detail, seconds)
ACCEPTANCE = {}


def record(n, title, passed, detail, seconds):
    ACCEPTANCE[n] = (title, passed, detail, seconds)


def acceptance_lines():
    lines = []
    for n in sorted(ACCEPTANCE):
        title, ok, detail, sec = ACCEPTANCE[n]
        lines.append(f"ACCEPTANCE {n:2d} {'PASS' if ok else 'FAIL'}  {title} ({sec:.1f} s) {detail}")
    return lines


def config(name):
    with open(os.path.join(CONFIGS, name)) as fh:
        return graph_from_json(json.load(fh))


def star(m, centre_dim=2):
    """Centre read at 0, m legs read at infinity."""
    return build_graph([1, m], [centre_dim] + [1] * m, ["0", "inf"])


def dual_star(legs=3, centre_dim=2):
    """Centre read at infinity, legs read at 0."""
    return build_graph([1, legs], [centre_dim] + [1] * legs, ["inf", "0"])


def bipartite(n_inf=2, n_zero=2):
    return build_graph([n_inf, n_zero], None, ["inf", "0"])


def suite_graphs():
    """Every supported graph the acceptance suite touches."""
    return {
        "(1,1,2) dims 2,1,2,1": build_graph([1, 1, 2], [2, 1, 2, 1]),
        "(2,1,1)": build_graph([2, 1, 1]),
        "triangle": build_graph([1, 1, 1]),
        "star m=3": star(3),
        "star m=2": star(2),
        "dual star": dual_star(),
        "bipartite 2x2": bipartite(),
        "(2,1,1,1)": build_graph([2, 1, 1, 1]),
        "(3,2,1)": build_graph([3, 2, 1]),
    }


def cycles_upto(g, length):
    """All oriented cycles of length 2..length, by depth-first walks."""
    out = set()
    arrows = g.arrows()

    def walk(path):
        if len(path) >= 2 and path[-1].head == path[0].tail:
            out.add(Cycle(path))
        if len(path) == length:
            return
        for a in arrows:
            if a.tail == path[-1].head:
                walk(path + [a])

    for a in arrows:
        walk([a])
    return sorted(out)


# an oracle that shares no code with the package: sympy matrices

class MatrixModel:
    """Entry symbols, matrix traces and the canonical bracket, all in sympy."""

    def __init__(self, g, s):
        self.g = g
        self.s = s
        self.mats = {}
        for a in g.arrows():
            rows, cols = g.dim(a.head), g.dim(a.tail)
            self.mats[a] = sympy.Matrix(rows, cols, lambda k, l: sympy.Symbol(f"x_{a.tail}_{a.head}_{k + 1}_{l + 1}"))

    def trace(self, cycle):
        # traversal order word[0], word[1], ...: the operator is word[-1] ... word[0]
        m = sympy.eye(self.g.dim(cycle.word[0].tail))
        for a in cycle.word:
            m = self.mats[a] * m
        return sympy.expand(m.trace())

    def bracket(self, f, h):
        out = 0
        for a in self.g.arrows():
            c = self.s.c(a).to_sympy()
            ma, mb = self.mats[a], self.mats[a.star]
            for k in range(ma.rows):
                for l in range(ma.cols):
                    # {X^a_kl, X^a*_lk} = c(a)
                    out += c * sympy.diff(f, ma[k, l]) * sympy.diff(h, mb[l, k])
        return sympy.expand(out)

    def to_sympy(self, poly):
        out = 0
        for mono, v in poly.terms.items():
            term = v.to_sympy()
            for t, h, k, l in mono:
                term *= sympy.Symbol(f"x_{t}_{h}_{k}_{l}")
            out += term
        return sympy.expand(out)


def apply_weyl(x, expr):
    """Act with a WeylElement on a sympy polynomial in the positive positions.

    X^a for a positive arrow multiplies by its entry symbol; X^{a*} acts as
    -c(a) times the derivative in X^a, so [X^a, X^{a*}] = c(a).
    """
    alg = x.alg
    s = alg.symp
    out = 0
    for w, v in x.terms.items():
        y = expr
        for n in reversed(w):
            t, h, k, l = alg.gens[n]
            a = Arrow(t, h)
            if s.is_positive(a):
                y = sympy.Symbol(f"x_{t}_{h}_{k}_{l}") * y
            else:
                y = -s.c(a.star).to_sympy() * sympy.diff(y, sympy.Symbol(f"x_{h}_{t}_{l}_{k}"))
        out += v.to_sympy() * y
    return sympy.expand(out)


def apply_u(x, expr):
    """Act with a UEnvElement on a sympy polynomial: e^(i)_jk is x_ij d/dx_ik."""
    out = 0
    for w, v in x.terms.items():
        y = expr
        for i, j, k in reversed(w):
            y = sympy.Symbol(f"y_{i}_{j}") * sympy.diff(y, sympy.Symbol(f"y_{i}_{k}"))
        out += v.to_sympy() * y
    return sympy.expand(out)
