"""The U(gl) side: PBW quantisation, KZ/DMT/FMTV/JMMS, moment maps, reduction.

Generators of U(gl_d)^{(x)m} are triples (i, j, k): factor i, matrix entry
(j, k).  Words are kept in PBW normal form, nondecreasing in the triple
order.  Unlike the Weyl algebra the commutator of two generators is linear,
not central, so moving a letter into place recurses (see _u_insert).

Moment maps only make sense on bipartite graphs read at {inf, 0}.  The
factors are the nodes of the infinite part; the matrix indices run over a
basis of W^0, the direct sum of the spaces at the nodes read at 0.
"""

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
import itertools
import math
import re

import sympy
from sympy.utilities.iterables import multiset_permutations

from .cycles import TracePolynomial, poisson_bracket_oracle
from .quiver import Arrow, opposite, with_positive
from .scalars import Scalar, ZERO, ONE, const, symbol, parse
from .weyl import WeylAlgebra, WeylElement, weyl_commutator
from .anchored import AnchoredCycle, quantum_hamiltonian, quantum_trace


class ReductionError(Exception):
    pass


class BadDimension(ReductionError):
    pass


class DimensionMismatch(ReductionError):
    pass


class NotInvariant(ReductionError):
    pass


class OrientationMismatch(ReductionError):
    pass


def _ename(x):
    return f"e({x[0]},{x[1]},{x[2]})"


_EPAT = re.compile(r"e\((\d+),(\d+),(\d+)\)")


# commutative side

class SymElement(TracePolynomial):
    """Commutative polynomial in the variables e^(i)_jk = (i, j, k)."""

    __slots__ = ()

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms):
            mono = "*".join(_ename(x) for x in m) or "1"
            parts.append(f"{self.terms[m]}*{mono}")
        return " + ".join(parts)

    def to_json(self):
        return [{"word": [_ename(x) for x in m], "coeff": str(v)}
                for m, v in sorted(self.terms.items())]


def sym_var(i, j, k):
    return SymElement({((i, j, k),): ONE})


# enveloping algebra

def _bracket(y, x):
    """[e_y, e_x] as a tuple of (generator, int)."""
    i, j, k = y
    n, l, m = x
    if i != n:
        return ()
    out = []
    if k == l:
        out.append(((i, j, m), 1))
    if m == j:
        out.append(((i, l, k), -1))
    return tuple(out)


@lru_cache(maxsize=200000)
def _u_insert(word, x):
    """Normal form of word * e_x as a tuple of (word, int)."""
    if not word or word[-1] <= x:
        return ((word + (x,), 1),)
    y, u = word[-1], word[:-1]
    acc = defaultdict(int)
    # u y x = (u x) y + u [y, x]
    for w, c in _u_insert(u, x):
        for w2, c2 in _u_insert(w, y):
            acc[w2] += c * c2
    for z, c in _bracket(y, x):
        for w2, c2 in _u_insert(u, z):
            acc[w2] += c * c2
    return tuple((w, c) for w, c in acc.items() if c)


def _u_mul_words(u, v):
    cur = {u: 1}
    for x in v:
        nxt = defaultdict(int)
        for w, c in cur.items():
            for w2, c2 in _u_insert(w, x):
                nxt[w2] += c * c2
        cur = {w: c for w, c in nxt.items() if c}
    return cur


class UEnvElement:
    """Element of U(gl_d)^{(x)m} in PBW normal form."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for w, v in (terms or {}).items():
            v = Scalar(v)
            if not v.is_zero():
                self.terms[tuple(w)] = v

    @classmethod
    def ordered(cls, letters, coeff=ONE):
        """The product e_{letters[0]} e_{letters[1]} ... in normal form."""
        coeff = Scalar(coeff)
        return cls({w: coeff * c for w, c in _u_mul_words((), tuple(letters)).items()})

    def _acc(self, w, v):
        x = self.terms.get(w, ZERO) + v
        if x.is_zero():
            self.terms.pop(w, None)
        else:
            self.terms[w] = x

    def __add__(self, other):
        if not isinstance(other, UEnvElement):
            other = u_scalar(other)
        out = UEnvElement()
        out.terms = dict(self.terms)
        for w, v in other.terms.items():
            out._acc(w, v)
        return out

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-ONE)

    def __sub__(self, other):
        if not isinstance(other, UEnvElement):
            other = u_scalar(other)
        return self + (-other)

    def scale(self, s):
        s = Scalar(s)
        out = UEnvElement()
        if not s.is_zero():
            out.terms = {w: v * s for w, v in self.terms.items()}
        return out

    def __mul__(self, other):
        if not isinstance(other, UEnvElement):
            return self.scale(other)
        acc = defaultdict(lambda: ZERO)
        for u, a in self.terms.items():
            for v, b in other.terms.items():
                ab = a * b
                for w, c in _u_mul_words(u, v).items():
                    acc[w] = acc[w] + ab * c
        return UEnvElement(acc)

    def __rmul__(self, other):
        return self.scale(other)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, UEnvElement) and self.terms == other.terms

    def __len__(self):
        return len(self.terms)

    def order(self):
        if not self.terms:
            raise ReductionError("the zero element has no filtration order")
        return max(len(w) for w in self.terms)

    def partial(self, name):
        return UEnvElement({w: v.partial(name) for w, v in self.terms.items()})

    def generators(self):
        return {x for w in self.terms for x in w}

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (len(t[0]), t[0]))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for w, v in self.sorted_terms():
            mono = "*".join(_ename(x) for x in w)
            parts.append(f"{v}*{mono}" if mono else str(v))
        return " + ".join(parts)

    def to_json(self):
        return [{"word": [_ename(x) for x in w], "coeff": str(v)} for w, v in self.sorted_terms()]

    @classmethod
    def from_json(cls, data):
        out = cls()
        for t in data:
            letters = []
            for name in t["word"]:
                m = _EPAT.fullmatch(name)
                if not m:
                    raise ReductionError(f"bad generator name {name!r}")
                letters.append(tuple(int(z) for z in m.groups()))
            out = out + cls.ordered(letters, parse(t["coeff"]))
        return out


def u_gen(i, j, k):
    return UEnvElement({((i, j, k),): ONE})


def u_scalar(v):
    v = Scalar(v)
    return UEnvElement({(): v} if not v.is_zero() else {})


def u_commutator(x, y):
    return x * y - y * x


def u_symbol(x):
    """Semiclassical limit: the top-order part read commutatively."""
    top = x.order()
    out = SymElement()
    for w, v in x.terms.items():
        if len(w) == top:
            out._acc(tuple(sorted(w)), v)
    return out


def pbw_quantise(x):
    """Symmetrisation Sym -> U, x_1...x_n -> (1/n!) sum over orderings."""
    out = UEnvElement()
    for mono, v in x.terms.items():
        perms = list(multiset_permutations(list(mono)))
        weight = v / len(perms)
        for p in perms:
            out = out + UEnvElement.ordered(p, weight)
    return out


def casimir_omega(d, factor=1):
    """Omega = sum_jk e_jk e_kj on one factor of U(gl_d)."""
    if d < 1:
        raise BadDimension("d must be positive")
    out = UEnvElement()
    for j in range(1, d + 1):
        for k in range(1, d + 1):
            out = out + UEnvElement.ordered([(factor, j, k), (factor, k, j)])
    return out


def omega_ij(d, i, j):
    """Omega_ij = sum_kl e^(i)_kl e^(j)_lk."""
    out = UEnvElement()
    for k in range(1, d + 1):
        for l in range(1, d + 1):
            out = out + UEnvElement.ordered([(i, k, l), (j, l, k)])
    return out


def trace_rr(d, i, j):
    """Tr(R_i R_j) = sum_kl e^(i)_kl e^(j)_lk as a SymElement."""
    out = SymElement()
    for k in range(1, d + 1):
        for l in range(1, d + 1):
            out._acc(tuple(sorted([(i, k, l), (j, l, k)])), ONE)
    return out


# named Hamiltonians

@dataclass(frozen=True)
class NamedHamiltonian:
    system: str
    kind: str  # "t" for single-time systems, "inf" or "zero" for jmms/fmtv
    index: int
    time: Scalar
    element: object

    def to_json(self):
        return {"system": self.system, "kind": self.kind, "index": self.index,
                "time": str(self.time), "element": self.element.to_json()}


SYSTEMS = ("schlesinger", "kz", "dual_schlesinger", "dmt", "jmms", "fmtv")


def _times(given, n, stem):
    if given is None:
        return [symbol(f"{stem}{i}") for i in range(1, n + 1)]
    given = [parse(t) if isinstance(t, str) else Scalar(t) for t in given]
    if len(given) != n:
        raise BadDimension(f"expected {n} times, got {len(given)}")
    return given


def _sym(mono, coeff):
    return SymElement({tuple(sorted(mono)): coeff})


def named_hamiltonians(system, m=1, d=2, times=None, times_inf=None, times_zero=None):
    """The Hamiltonians of a named system.

    schlesinger, kz: one per factor i = 1..m, times t_i.
    dual_schlesinger, dmt: a single factor, one per index j = 1..d.
    jmms, fmtv: kind "inf" for i = 1..m (times tinf_i) and kind "zero" for
    j = 1..d (times tzero_j).
    """
    if system not in SYSTEMS:
        raise ReductionError(f"unknown system {system!r}")
    if m < 1 or d < 1:
        raise BadDimension("m and d must be positive")
    if system in ("dual_schlesinger", "dmt", "jmms", "fmtv") and d < 2:
        raise BadDimension(f"{system} needs d >= 2")
    out = []
    if system in ("schlesinger", "kz"):
        t = _times(times, m, "t")
        for i in range(1, m + 1):
            h = SymElement() if system == "schlesinger" else UEnvElement()
            for j in range(1, m + 1):
                if j == i:
                    continue
                w = ONE / (t[i - 1] - t[j - 1])
                h = h + (trace_rr(d, i, j) if system == "schlesinger" else omega_ij(d, i, j)).scale(w)
            out.append(NamedHamiltonian(system, "t", i, t[i - 1], h))
        return out
    if system in ("dual_schlesinger", "dmt"):
        if m != 1:
            raise BadDimension(f"{system} lives on a single factor")
        t = _times(times, d, "t")
        half = const("1/2")
        for j in range(1, d + 1):
            h = SymElement() if system == "dual_schlesinger" else UEnvElement()
            for k in range(1, d + 1):
                if k == j:
                    continue
                w = ONE / (t[j - 1] - t[k - 1])
                if system == "dual_schlesinger":
                    h = h + _sym([(1, j, k), (1, k, j)], w)
                else:
                    h = h + (UEnvElement.ordered([(1, j, k), (1, k, j)])
                             + UEnvElement.ordered([(1, k, j), (1, j, k)])).scale(half * w)
            out.append(NamedHamiltonian(system, "t", j, t[j - 1], h))
        return out
    ti = _times(times_inf, m, "tinf")
    tz = _times(times_zero, d, "tzero")
    quantum = system == "fmtv"
    for i in range(1, m + 1):
        h = UEnvElement() if quantum else SymElement()
        for k in range(1, m + 1):
            if k == i:
                continue
            w = ONE / (ti[i - 1] - ti[k - 1])
            h = h + (omega_ij(d, i, k) if quantum else trace_rr(d, i, k)).scale(w)
        for j in range(1, d + 1):
            h = h + (u_gen(i, j, j) if quantum else sym_var(i, j, j)).scale(tz[j - 1])
        out.append(NamedHamiltonian(system, "inf", i, ti[i - 1], h))
    for j in range(1, d + 1):
        h = UEnvElement() if quantum else SymElement()
        for k in range(1, d + 1):
            if k == j:
                continue
            w = ONE / (tz[j - 1] - tz[k - 1])
            for i in range(1, m + 1):
                for n in range(1, m + 1):
                    if quantum:
                        h = h + UEnvElement.ordered([(i, j, k), (n, k, j)], w)
                    else:
                        h = h + _sym([(i, j, k), (n, k, j)], w)
        for i in range(1, m + 1):
            h = h + (u_gen(i, j, j) if quantum else sym_var(i, j, j)).scale(ti[i - 1])
        out.append(NamedHamiltonian(system, "zero", j, tz[j - 1], h))
    return out


def fmtv_jmms_difference(m, d, times_inf=None, times_zero=None):
    """Per j: (FMTV-II_j - Q(JMMS-0_j), the expected order-one element).

    The expected element is sum_i sum_{k != j} (e^(i)_jj - e^(i)_kk)/(2(t_j - t_k)),
    i.e. Q(JMMS-0_j) = FMTV-II_j + sum (e_kk - e_jj)/(2(t_j - t_k)).
    """
    f = [h for h in named_hamiltonians("fmtv", m, d, times_inf=times_inf, times_zero=times_zero)
         if h.kind == "zero"]
    jm = [h for h in named_hamiltonians("jmms", m, d, times_inf=times_inf, times_zero=times_zero)
          if h.kind == "zero"]
    out = []
    for hf, hj in zip(f, jm):
        j = hf.index
        tz = [h.time for h in f]
        diff = hf.element - pbw_quantise(hj.element)
        expected = UEnvElement()
        for k in range(1, d + 1):
            if k == j:
                continue
            w = ONE / (2 * (tz[j - 1] - tz[k - 1]))
            for i in range(1, m + 1):
                expected = expected + (u_gen(i, j, j) - u_gen(i, k, k)).scale(w)
        out.append((j, diff, expected))
    return out


def dmt_fmtv_difference(d, times=None):
    """Per j at m = 1: (DMT_j - FMTV-II_j, sum_k (e_kk - e_jj)/(2(t_j - t_k))).

    A single finite pole can be translated to 0, so t^inf_1 = 0 here.
    """
    t = _times(times, d, "t")
    dm = named_hamiltonians("dmt", 1, d, times=t)
    fm = [h for h in named_hamiltonians("fmtv", 1, d, times_inf=[0], times_zero=t) if h.kind == "zero"]
    out = []
    for hd, hf in zip(dm, fm):
        j = hd.index
        expected = UEnvElement()
        for k in range(1, d + 1):
            if k != j:
                expected = expected + (u_gen(1, k, k) - u_gen(1, j, j)).scale(ONE / (2 * (t[j - 1] - t[k - 1])))
        out.append((j, hd.element - hf.element, expected))
    return out


# moment maps on bipartite graphs

class MomentData:
    """Coordinates Q, P and the moment maps of a bipartite graph read at {inf, 0}.

    Q_{(j,a),(i,n)} is the entry X^{i->j}_{a,n} and P_{(i,n),(j,a)} the entry
    X^{j->i}_{n,a}, for i at infinity and j at 0.  The quantum moment is a
    morphism into the Weyl algebra with the opposite structure, which is the
    algebra held in self.alg.
    """

    def __init__(self, g, s):
        r = g.reading
        inf = r.infinite_part()
        if g.k != 2 or inf is None:
            raise DimensionMismatch("moment maps need a bipartite graph with a part at infinity")
        zero = 1 - inf
        v = r.values[zero]
        if not (isinstance(v, Scalar) and v.is_zero()):
            raise DimensionMismatch("the finite part must be read at 0")
        self.graph = g
        self.symp = s
        self.inf_nodes = g.members(inf)
        self.zero_nodes = g.members(zero)
        self.basis0 = [(j, a) for j in self.zero_nodes for a in range(1, g.dim(j) + 1)]
        self.m = len(self.inf_nodes)
        self.d = len(self.basis0)
        self.alg = WeylAlgebra(opposite(s))
        self._e = {}
        self._f = {}

    def factor_node(self, i):
        return self.inf_nodes[i - 1]

    def q_key(self, r, i, n):
        j, a = self.basis0[r - 1]
        return (self.factor_node(i), j, a, n)

    def p_key(self, i, n, c):
        j, a = self.basis0[c - 1]
        return (j, self.factor_node(i), n, a)

    def _check(self, i, r, c):
        if not (1 <= i <= self.m and 1 <= r <= self.d and 1 <= c <= self.d):
            raise DimensionMismatch(f"e({i},{r},{c}) does not fit m = {self.m}, d = {self.d}")

    def e_classical(self, i, r, c):
        self._check(i, r, c)
        out = TracePolynomial()
        for n in range(1, self.graph.dim(self.factor_node(i)) + 1):
            out._acc(tuple(sorted([self.q_key(r, i, n), self.p_key(i, n, c)])), ONE)
        return out

    def e_image(self, i, r, c):
        """mu_0(e^(i)_rc) = sum_n Q_{r,(i,n)} P_{(i,n),c}."""
        key = (i, r, c)
        if key not in self._e:
            self._check(i, r, c)
            acc = defaultdict(lambda: ZERO)
            for n in range(1, self.graph.dim(self.factor_node(i)) + 1):
                letters = [self.alg.index[self.q_key(r, i, n)], self.alg.index[self.p_key(i, n, c)]]
                for w, v in self.alg.ordered_product(letters).items():
                    acc[w] = acc[w] + v
            self._e[key] = WeylElement(self.alg, acc)
        return self._e[key]

    def f_image(self, i, n, n2):
        """mu_inf(f^(i)_{n n2}) = sum_r P_{(i,n),r} Q_{r,(i,n2)}."""
        key = (i, n, n2)
        if key not in self._f:
            acc = defaultdict(lambda: ZERO)
            for r in range(1, self.d + 1):
                letters = [self.alg.index[self.p_key(i, n, r)], self.alg.index[self.q_key(r, i, n2)]]
                for w, v in self.alg.ordered_product(letters).items():
                    acc[w] = acc[w] + v
            self._f[key] = WeylElement(self.alg, acc)
        return self._f[key]

    def f_classical(self, i, n, n2):
        out = TracePolynomial()
        for r in range(1, self.d + 1):
            out._acc(tuple(sorted([self.p_key(i, n, r), self.q_key(r, i, n2)])), ONE)
        return out

    def e_generators(self):
        return [(i, r, c) for i in range(1, self.m + 1)
                for r in range(1, self.d + 1) for c in range(1, self.d + 1)]

    def f_generators(self):
        out = []
        for i in range(1, self.m + 1):
            v = self.graph.dim(self.factor_node(i))
            out += [(i, n, n2) for n in range(1, v + 1) for n2 in range(1, v + 1)]
        return out

    def hamiltonian(self, node):
        """The quantum Hamiltonian of a node, built in the target algebra."""
        return quantum_hamiltonian(self.graph, self.alg, node)

    def times_inf(self):
        return [self.graph.time(n) for n in self.inf_nodes]

    def times_zero(self):
        if any(self.graph.dim(j) != 1 for j in self.zero_nodes):
            raise DimensionMismatch("per-index times need dimension one at every node read at 0")
        return [self.graph.time(j) for j in self.zero_nodes]


def classical_moment_pullback(x, md):
    """Substitute (R_i)_rc by sum_n Q P; a ring homomorphism into TracePolynomial."""
    out = TracePolynomial()
    for mono, v in x.terms.items():
        term = TracePolynomial.constant(v)
        for gen in mono:
            term = term * md.e_classical(*gen)
        out = out + term
    return out


def quantum_moment_pullback(x, md):
    """Extend e^(i)_rc -> sum_n Q P multiplicatively, keeping the order."""
    out = md.alg.zero()
    for w, v in x.terms.items():
        term = md.alg.scalar(v)
        for gen in w:
            term = term * md.e_image(*gen)
        out = out + term
    return out


def howe_commutation_check(md):
    """All commutators [mu_0(e), mu_inf(f)] on generators."""
    nonzero = []
    count = 0
    for e in md.e_generators():
        for f in md.f_generators():
            count += 1
            c = weyl_commutator(md.e_image(*e), md.f_image(*f))
            if not c.is_zero():
                nonzero.append({"e": _ename(e), "f": "f({},{},{})".format(*f), "residue": repr(c)})
    return {"pairs": count, "nonzero": nonzero, "all_zero": not nonzero}


def howe_classical_check(md):
    """Poisson brackets of the classical generator images."""
    nonzero = []
    count = 0
    for e in md.e_generators():
        for f in md.f_generators():
            count += 1
            b = poisson_bracket_oracle(md.e_classical(*e), md.f_classical(*f), md.symp)
            if not b.is_zero():
                nonzero.append({"e": _ename(e), "f": "f({},{},{})".format(*f), "residue": repr(b)})
    return {"pairs": count, "nonzero": nonzero, "all_zero": not nonzero}


def graph_hamiltonians(system, md):
    """Named Hamiltonians with the graph's own times and dimensions."""
    if system in ("schlesinger", "kz"):
        return named_hamiltonians(system, md.m, md.d, times=md.times_inf())
    if system in ("dual_schlesinger", "dmt"):
        if md.m != 1:
            raise DimensionMismatch(f"{system} needs a single node at infinity")
        return named_hamiltonians(system, 1, md.d, times=md.times_zero())
    return named_hamiltonians(system, md.m, md.d, times_inf=md.times_inf(), times_zero=md.times_zero())


def hamiltonian_node(h, md):
    """The graph node carrying a named Hamiltonian."""
    if h.kind == "zero" or h.system in ("dual_schlesinger", "dmt"):
        return md.zero_nodes[h.index - 1]
    return md.factor_node(h.index)


# quantum Hamiltonian reduction

@dataclass
class ReductionResult:
    element: WeylElement
    remainder: WeylElement
    order_cap: int

    @property
    def in_ideal(self):
        return self.remainder.is_zero()


def _lead(terms):
    return max(terms, key=lambda w: (len(w), w))


def quantum_reduction_project(x, md, ideal_generators=(), order_cap=6):
    """Check invariance of x and reduce it modulo the left ideal A * mu_inf(I).

    ideal_generators are UEnvElements in the generators f^(i)_{n n2} of the
    infinite side, written e(i,n,n2).  Membership is decided by linear
    algebra among the products w * mu_inf(g) of filtration order at most
    order_cap.
    """
    for f in md.f_generators():
        if not weyl_commutator(md.f_image(*f), x).is_zero():
            raise NotInvariant(f"x does not commute with the image of f({f[0]},{f[1]},{f[2]})")
    images = []
    for gen in ideal_generators:
        img = md.alg.zero()
        for w, v in gen.terms.items():
            term = md.alg.scalar(v)
            for f in w:
                term = term * md.f_image(*f)
            img = img + term
        if not img.is_zero():
            images.append(img)
    pivots = {}

    def reduce(terms):
        terms = dict(terms)
        done = {}
        while terms:
            w = _lead(terms)
            v = terms.pop(w)
            if w in pivots:
                row = pivots[w]
                for u, c in row.items():
                    if u == w:
                        continue
                    y = terms.get(u, ZERO) - v * c
                    if y.is_zero():
                        terms.pop(u, None)
                    else:
                        terms[u] = y
            else:
                done[w] = v
        return done

    n = len(md.alg)
    for img in images:
        top = img.order()
        for deg in range(0, order_cap - top + 1):
            for w in itertools.combinations_with_replacement(range(n), deg):
                prod = WeylElement(md.alg, {w: ONE}) * img
                if prod.is_zero() or prod.order() > order_cap:
                    continue
                row = reduce(prod.terms)
                if not row:
                    continue
                lw = _lead(row)
                lc = row[lw]
                pivots[lw] = {u: c / lc for u, c in row.items()}
    if x.terms and x.order() > order_cap:
        raise ReductionError(f"x has order {x.order()} above the cap {order_cap}")
    rem = WeylElement(md.alg, reduce(x.terms))
    return ReductionResult(x, rem, order_cap)


# corrections

def _dmt_prime(md):
    """H'_j = mu_0(sum_k e_jk e_kj/(t_j - t_k)), the centre-free anchoring."""
    t = md.times_zero()
    out = []
    for j in range(1, md.d + 1):
        h = UEnvElement()
        for k in range(1, md.d + 1):
            if k != j:
                h = h + UEnvElement.ordered([(1, j, k), (1, k, j)], ONE / (t[j - 1] - t[k - 1]))
        out.append((md.zero_nodes[j - 1], quantum_moment_pullback(h, md)))
    return out


def primed_hamiltonians(case, md):
    """The reduced-side Hamiltonians H'_node as (node, WeylElement)."""
    if case == "dual_star":
        if md.m != 1:
            raise DimensionMismatch("the dual star has a single node at infinity")
        return _dmt_prime(md)
    if case == "bipartite":
        return [(hamiltonian_node(h, md), quantum_moment_pullback(h.element, md))
                for h in graph_hamiltonians("fmtv", md)]
    raise ReductionError(f"unknown case {case!r}")


def reduced_dual_star(md):
    """pi(H_j) = sum_k (e_jk e_kj + e_kk + dim V_inf)/(t_j - t_k) on the dual star.

    Its image under the quantum moment is exactly the centre-anchored H_j.
    """
    if md.m != 1:
        raise DimensionMismatch("the dual star has a single node at infinity")
    t = md.times_zero()
    dim_inf = md.graph.dim(md.factor_node(1))
    out = []
    for j in range(1, md.d + 1):
        h = UEnvElement()
        for k in range(1, md.d + 1):
            if k != j:
                num = UEnvElement.ordered([(1, j, k), (1, k, j)]) + u_gen(1, k, k) + u_scalar(dim_inf)
                h = h + num.scale(ONE / (t[j - 1] - t[k - 1]))
        out.append((md.zero_nodes[j - 1], h))
    return out


def dual_star_correction(md):
    """sum_{k != j} c(Q_k) Tr(P_k Q_k)/(t_j - t_k) per leg j of the dual star.

    Here Q_k is the arrow from the centre to leg k and P_k its reverse; the
    constant c(Q_k) is read in the target algebra of the moment map.
    """
    if md.m != 1:
        raise DimensionMismatch("the dual star has a single node at infinity")
    centre = md.factor_node(1)
    legs = md.zero_nodes
    t = md.times_zero()
    c = md.alg.symp.c
    out = []
    for a, j in enumerate(legs):
        acc = md.alg.zero()
        for b, k in enumerate(legs):
            if k == j:
                continue
            q, p = Arrow(centre, k), Arrow(k, centre)
            tr = quantum_trace(AnchoredCycle.from_written([p, q]), md.alg)
            acc = acc + tr.scale(c(q) / (t[a] - t[b]))
        out.append((j, acc))
    return out


def correction_difference(case, md):
    """H'_node - H_node for every node carrying a Hamiltonian."""
    out = []
    for node, hp in primed_hamiltonians(case, md):
        if node not in md.graph.dynamical_nodes():
            continue
        out.append((node, hp - md.hamiltonian(node)))
    return out


# differential operators

def _qname(v):
    t, h, k, l = v
    return f"q({h},{t})" if (k, l) == (1, 1) else f"q({h},{t})[{k},{l}]"


def _dname(v):
    t, h, k, l = v
    return f"d({h},{t})" if (k, l) == (1, 1) else f"d({h},{t})[{k},{l}]"


def _counts(mono):
    out = defaultdict(int)
    for v in mono:
        out[v] += 1
    return out


def _expand(counts):
    return tuple(sorted(v for v, e in counts.items() for _ in range(e)))


class DiffOp:
    """Normal-ordered differential operator: sum of c * q^A * d^B.

    A variable is the key (tail, head, k, l) of a position generator; q(i,j)
    is the position attached to the arrow j -> i.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for (a, b), v in (terms or {}).items():
            self._acc((tuple(sorted(a)), tuple(sorted(b))), Scalar(v))

    def _acc(self, key, v):
        x = self.terms.get(key, ZERO) + v
        if x.is_zero():
            self.terms.pop(key, None)
        else:
            self.terms[key] = x

    @classmethod
    def scalar(cls, v):
        return cls({((), ()): v})

    def __add__(self, other):
        out = DiffOp()
        out.terms = dict(self.terms)
        for k, v in other.terms.items():
            out._acc(k, v)
        return out

    def __neg__(self):
        return self.scale(-ONE)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        s = Scalar(s)
        out = DiffOp()
        if not s.is_zero():
            out.terms = {k: v * s for k, v in self.terms.items()}
        return out

    def __mul__(self, other):
        """Composition self o other."""
        out = DiffOp()
        for (qa, da), va in self.terms.items():
            for (qb, db), vb in other.terms.items():
                dc, qc = _counts(da), _counts(qb)
                shared = [v for v in dc if v in qc]
                ranges = [range(0, min(dc[v], qc[v]) + 1) for v in shared]
                for ks in itertools.product(*ranges):
                    coeff = 1
                    q2, d2 = dict(qc), dict(dc)
                    for v, k in zip(shared, ks):
                        coeff *= math.comb(dc[v], k) * math.perm(qc[v], k)
                        q2[v] -= k
                        d2[v] -= k
                    key = (tuple(sorted(qa + _expand(q2))), tuple(sorted(_expand(d2) + db)))
                    out._acc(key, va * vb * coeff)
        return out

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, DiffOp) and self.terms == other.terms

    def support(self):
        return set(self.terms)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (len(t[0][0]) + len(t[0][1]), t[0]))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (a, b), v in self.sorted_terms():
            mono = "*".join([_qname(x) for x in a] + [_dname(x) for x in b])
            parts.append(f"{v}*{mono}" if mono else str(v))
        return " + ".join(parts)

    def to_json(self):
        return [{"word": [_qname(x) for x in a] + [_dname(x) for x in b], "coeff": str(v)}
                for (a, b), v in self.sorted_terms()]


def weyl_to_diffop(x, positions):
    """Represent x on polynomials in the positions.

    A position arrow a acts by multiplication by q_a; its partner X^{a*}
    acts by -c(a) d/dq_a, so that [X^a, X^{a*}] = c(a) holds.
    """
    positions = frozenset(positions)
    alg = x.alg
    s = alg.symp
    images = {}
    for n, key in enumerate(alg.gens):
        a = Arrow(key[0], key[1])
        if a in positions and a.star not in positions:
            images[n] = DiffOp({((key,), ()): ONE})
        elif a.star in positions and a not in positions:
            partner = alg.gens[alg.partner[n]]
            images[n] = DiffOp({((), (partner,)): -s.c(a.star)})
        else:
            raise OrientationMismatch(f"exactly one of {a} and {a.star} must be a position")
    out = DiffOp()
    for w, v in x.terms.items():
        term = DiffOp.scalar(v)
        for n in w:
            term = term * images[n]
        out = out + term
    return out


def diffop_apply(d, p):
    """Apply a DiffOp to a polynomial in the positions (a TracePolynomial)."""
    out = TracePolynomial()
    for (qa, da), va in d.terms.items():
        need = _counts(da)
        for mono, vp in p.terms.items():
            have = _counts(mono)
            coeff = 1
            for v, e in need.items():
                if have.get(v, 0) < e:
                    coeff = 0
                    break
                coeff *= math.perm(have[v], e)
                have[v] -= e
            if coeff:
                out._acc(tuple(sorted(qa + _expand(have))), va * vp * coeff)
    return out


def transport(x, alg):
    """Re-express x in another Weyl algebra on the same generators."""
    acc = defaultdict(lambda: ZERO)
    for w, v in x.terms.items():
        letters = [alg.index[x.alg.gens[n]] for n in w]
        for u, c in alg.ordered_product(letters).items():
            acc[u] = acc[u] + v * c
    return WeylElement(alg, acc)


def weyl_module_action(x, positions, p):
    """x acting on p in A / A*(momenta), computed inside the Weyl algebra."""
    alg = WeylAlgebra(with_positive(x.alg.symp, positions))
    y = transport(x, alg)
    pw = alg.zero()
    for mono, v in p.terms.items():
        pw = pw + WeylElement(alg, alg.ordered_product([alg.index[g] for g in mono])).scale(v)
    prod = y * pw
    out = TracePolynomial()
    pos = frozenset(positions)
    for w, v in prod.terms.items():
        keys = [alg.gens[n] for n in w]
        if all(Arrow(k[0], k[1]) in pos for k in keys):
            out._acc(tuple(sorted(keys)), v)
    return out


def position_monomials(positions, g, degree):
    """All monomials of total degree <= degree in the position entries."""
    keys = sorted((a.tail, a.head, k, l) for a in positions
                  for k in range(1, g.dim(a.head) + 1) for l in range(1, g.dim(a.tail) + 1))
    out = []
    for deg in range(degree + 1):
        for mono in itertools.combinations_with_replacement(keys, deg):
            out.append(TracePolynomial({mono: ONE}))
    return out


_QPAT = re.compile(r"q_(\d+)_(\d+)(?:_(\d+)_(\d+))?")


def parse_polynomial(text):
    """Parse a polynomial in symbols q_i_j (or q_i_j_k_l) into a TracePolynomial.

    q_i_j is the position of the arrow j -> i.
    """
    expr = sympy.expand(sympy.sympify(text, rational=True))
    syms = sorted(expr.free_symbols, key=lambda s: s.name)
    keys = []
    for s in syms:
        m = _QPAT.fullmatch(s.name)
        if not m:
            raise ReductionError(f"unknown variable {s.name!r}")
        i, j, k, l = m.groups()
        keys.append((int(j), int(i), int(k or 1), int(l or 1)))
    out = TracePolynomial()
    if not syms:
        r = sympy.Rational(expr)
        return TracePolynomial.constant(Fraction(int(r.p), int(r.q)))
    poly = sympy.Poly(expr, *syms)
    for exps, c in poly.terms():
        mono = tuple(sorted(k for k, e in zip(keys, exps) for _ in range(e)))
        out._acc(mono, Scalar(Fraction(int(c.p), int(c.q))))
    return out


def polynomial_to_text(p):
    if not p.terms:
        return "0"
    parts = []
    for mono, v in sorted(p.terms.items()):
        names = []
        for t, h, k, l in mono:
            names.append(f"q_{h}_{t}" if (k, l) == (1, 1) else f"q_{h}_{t}_{k}_{l}")
        parts.append("*".join([f"({v})"] + names))
    return " + ".join(parts)


def triangle_positions(g):
    """Positions q_12, q_23, q_31 on a triangle: the arrows 2->1, 3->2, 1->3."""
    if g.k != 3 or len(list(g.nodes)) != 3:
        raise OrientationMismatch("triangle positions need three single-node parts")
    n = [g.members(j)[0] for j in range(3)]
    return frozenset({Arrow(n[1], n[0]), Arrow(n[2], n[1]), Arrow(n[0], n[2])})


def triangle_shape(g):
    """The expected support of the triangle H_1 (node of part 0) in normal order."""
    n = [g.members(j)[0] for j in range(3)]
    q12, q23, q31 = (n[1], n[0], 1, 1), (n[2], n[1], 1, 1), (n[0], n[2], 1, 1)
    return {
        (tuple(sorted([q31, q23, q12])), ()),
        ((), tuple(sorted([q12, q23, q31]))),
        ((q12,), (q12,)),
        ((q31,), (q31,)),
        ((), ()),
    }
