"""Classical cycle calculus.

A cycle is stored in traversal order: word[0] is the first arrow walked,
so head(word[p]) == tail(word[p + 1]).  The written form of the same
cycle runs right to left, alpha_n ... alpha_1 with alpha_1 == word[0].
"""

from collections import defaultdict
from dataclasses import dataclass
import itertools

from .quiver import Arrow
from .scalars import Scalar, ZERO, ONE


class CycleError(Exception):
    pass


class NotComposable(CycleError):
    pass


class UnsupportedDegenerateReading(CycleError):
    pass


def _check_word(word):
    if not word:
        raise NotComposable("empty word")
    n = len(word)
    for p in range(n):
        if word[p].head != word[(p + 1) % n].tail:
            raise NotComposable(f"{word[p]} is not followed by {word[(p + 1) % n]}")


def _rotate(word, r):
    return word[r:] + word[:r]


def _key(word):
    return tuple((a.tail, a.head) for a in word)


class Cycle:
    """An oriented cycle modulo rotation, kept as its minimal rotation."""

    __slots__ = ("word",)

    def __init__(self, word):
        word = tuple(Arrow(*a) if not isinstance(a, Arrow) else a for a in word)
        _check_word(word)
        best = min((_rotate(word, r) for r in range(len(word))), key=_key)
        object.__setattr__(self, "word", best)

    def __setattr__(self, name, value):
        raise AttributeError("Cycle is immutable")

    @classmethod
    def from_nodes(cls, nodes):
        """Cycle through nodes[0] -> nodes[1] -> ... -> nodes[0]."""
        n = len(nodes)
        return cls([Arrow(nodes[p], nodes[(p + 1) % n]) for p in range(n)])

    def __len__(self):
        return len(self.word)

    def __eq__(self, other):
        return isinstance(other, Cycle) and self.word == other.word

    def __lt__(self, other):
        return (len(self), _key(self.word)) < (len(other), _key(other.word))

    def __hash__(self):
        return hash(self.word)

    def nodes(self):
        return [a.tail for a in self.word]

    def __repr__(self):
        return "Cycle(" + " ".join(str(a) for a in self.word) + ")"

    def ids(self):
        return [str(a) for a in self.word]


@dataclass(frozen=True)
class CycleType:
    kind: str  # two_cycle, three_cycle, nondegenerate_four, degenerate_four, other
    center: int = None
    length: int = 0


def classify_cycle(c):
    word = c.word if isinstance(c, Cycle) else tuple(c)
    n = len(word)
    touched = {a.tail for a in word}
    if n == 2:
        return CycleType("two_cycle", length=2)
    if n == 3 and len(touched) == 3:
        return CycleType("three_cycle", length=3)
    if n == 4 and len(touched) == 4:
        return CycleType("nondegenerate_four", length=4)
    if n == 4 and len(touched) == 3:
        visits = defaultdict(int)
        for a in word:
            visits[a.tail] += 1
        center = next(v for v, m in visits.items() if m == 2)
        return CycleType("degenerate_four", center=center, length=4)
    return CycleType("other", length=n)


def is_imd_cycle(c):
    return classify_cycle(c).kind != "other"


def has_antiparallel_pair(word):
    s = set(word)
    return any(a.star in s for a in word)


class Potential:
    """Finite formal sum of cycles with Scalar coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        if terms:
            for c, v in (terms.items() if isinstance(terms, dict) else terms):
                c = c if isinstance(c, Cycle) else Cycle(c)
                v = clean.get(c, ZERO) + v
                if v.is_zero():
                    clean.pop(c, None)
                else:
                    clean[c] = v
        self.terms = clean

    @classmethod
    def single(cls, cycle, coeff=ONE):
        return cls({cycle: Scalar(coeff)})

    def __add__(self, other):
        out = dict(self.terms)
        for c, v in other.terms.items():
            w = out.get(c, ZERO) + v
            if w.is_zero():
                out.pop(c, None)
            else:
                out[c] = w
        p = Potential()
        p.terms = out
        return p

    def __neg__(self):
        return self.scale(-ONE)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        s = Scalar(s)
        return Potential({c: v * s for c, v in self.terms.items()})

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, Potential) and self.terms == other.terms

    def __iter__(self):
        return iter(sorted(self.terms.items()))

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        if not self.terms:
            return "Potential(0)"
        return "Potential(" + " + ".join(f"{v}*{c!r}" for c, v in self) + ")"

    def to_json(self):
        return [{"cycle": c.ids(), "coeff": str(v)} for c, v in self]

    @classmethod
    def from_json(cls, data):
        from .scalars import parse
        return cls({Cycle([Arrow.parse(a) for a in t["cycle"]]): parse(t["coeff"]) for t in data})


# commutative trace polynomials

class TracePolynomial:
    """Commutative polynomial in the entry variables X^alpha_kl.

    A variable is (tail, head, k, l) with k a row index at the head and l a
    column index at the tail.  Monomials are sorted tuples of variables.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        if terms:
            for m, v in terms.items():
                self._acc(tuple(sorted(m)), Scalar(v))

    def _acc(self, m, v):
        w = self.terms.get(m)
        w = v if w is None else w + v
        if w.is_zero():
            self.terms.pop(m, None)
        else:
            self.terms[m] = w

    @classmethod
    def constant(cls, v):
        return cls({(): v}) if not Scalar(v).is_zero() else cls()

    def __add__(self, other):
        out = type(self)()
        out.terms = dict(self.terms)
        for m, v in other.terms.items():
            out._acc(m, v)
        return out

    def __neg__(self):
        out = type(self)()
        out.terms = {m: -v for m, v in self.terms.items()}
        return out

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        s = Scalar(s)
        out = type(self)()
        if s.is_zero():
            return out
        out.terms = {m: v * s for m, v in self.terms.items()}
        return out

    def __mul__(self, other):
        if not isinstance(other, TracePolynomial):
            return self.scale(other)
        out = type(self)()
        for m1, v1 in self.terms.items():
            for m2, v2 in other.terms.items():
                out._acc(tuple(sorted(m1 + m2)), v1 * v2)
        return out

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        return isinstance(other, TracePolynomial) and self.terms == other.terms

    def degree(self):
        return max((len(m) for m in self.terms), default=-1)

    def partial(self, name):
        out = type(self)()
        for m, v in self.terms.items():
            out._acc(m, v.partial(name))
        return out

    def __len__(self):
        return len(self.terms)

    def to_json(self):
        return [{"monomial": [f"X[{t}->{h}]({k},{l})" for t, h, k, l in m], "coeff": str(v)}
                for m, v in sorted(self.terms.items())]

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for m in sorted(self.terms):
            mono = "*".join(f"X[{t}->{h}]({k},{l})" for t, h, k, l in m) or "1"
            parts.append(f"{self.terms[m]}*{mono}")
        return " + ".join(parts)


def trace(obj, g):
    """Tr of a cycle or potential as a commutative polynomial."""
    if isinstance(obj, Potential):
        out = TracePolynomial()
        for c, v in obj.terms.items():
            out = out + trace(c, g).scale(v)
        return out
    word = obj.word if isinstance(obj, Cycle) else tuple(obj)
    # index at the head of word[p], with idx[n - 1] closing the loop
    ranges = [range(1, g.dim(a.head) + 1) for a in word]
    out = TracePolynomial()
    for idx in itertools.product(*ranges):
        mono = []
        for p, a in enumerate(word):
            mono.append((a.tail, a.head, idx[p], idx[p - 1]))
        out._acc(tuple(sorted(mono)), ONE)
    return out


def poisson_bracket_oracle(f, g, s):
    """Canonical bracket {X^a_kl, X^a*_mn} = c(a) d_kn d_lm, by Leibniz."""
    out = TracePolynomial()
    for m1, v1 in f.terms.items():
        for m2, v2 in g.terms.items():
            coeff = v1 * v2
            for x in set(m1):
                y = (x[1], x[0], x[3], x[2])
                e2 = m2.count(y)
                if not e2:
                    continue
                e1 = m1.count(x)
                c = s.c(Arrow(x[0], x[1]))
                r1 = list(m1)
                r1.remove(x)
                r2 = list(m2)
                r2.remove(y)
                out._acc(tuple(sorted(r1 + r2)), coeff * c * (e1 * e2))
    return out


def _glue(a, p, b, q):
    """Remove a[p] and b[q] (antiparallel) and splice the rest of a into b."""
    return b[:q] + a[p + 1:] + a[:p] + b[q + 1:]


def necklace_bracket(x, y, s):
    """Necklace bracket of cycles or potentials."""
    if isinstance(x, Potential) or isinstance(y, Potential):
        x = x if isinstance(x, Potential) else Potential.single(x)
        y = y if isinstance(y, Potential) else Potential.single(y)
        acc = defaultdict(lambda: ZERO)
        for c1, v1 in x.terms.items():
            for c2, v2 in y.terms.items():
                for c, v in necklace_bracket(c1, c2, s).terms.items():
                    acc[c] = acc[c] + v * v1 * v2
        return Potential(acc)
    a, b = x.word, y.word
    acc = defaultdict(lambda: ZERO)
    for p, ap in enumerate(a):
        for q, bq in enumerate(b):
            if ap.star != bq:
                continue
            glued = _glue(a, p, b, q)
            if not glued:
                raise CycleError("bracket of two mutually inverse arrows is not a cycle")
            c = Cycle(glued)
            acc[c] = acc[c] + s.c(ap)
    return Potential(acc)


# IMD potentials

def _supported(g):
    r = g.reading
    if r.generic:
        return "generic"
    inf = r.infinite_part()
    if g.k == 2:
        other = 1 - inf
        v = r.values[other]
        if isinstance(v, Scalar) and v.is_zero():
            return "bipartite"
    raise UnsupportedDegenerateReading(
        "explicit potentials exist only for generic readings and for bipartite graphs read at {inf, 0}")


def imd_potential(g, i):
    """(W_i(4), W_i(3), W_i(2)) for node i."""
    kind = _supported(g)
    if kind == "bipartite":
        return _bipartite_potential(g, i)
    t = g.time
    a = g.reading_of
    outside = [j for j in g.nodes if g.part(j) != g.part(i)]
    w2 = {}
    for j in outside:
        w2[Cycle([Arrow(i, j), Arrow(j, i)])] = t(i) - t(j)
    w3 = defaultdict(lambda: ZERO)
    for j in outside:
        for l in outside:
            if g.part(j) == g.part(l):
                continue
            c = Cycle([Arrow(i, j), Arrow(j, l), Arrow(l, i)])
            w3[c] = w3[c] + (a(j) - a(l))
    w4 = defaultdict(lambda: ZERO)
    for m in g.members(g.part(i)):
        if m == i:
            continue
        for j in outside:
            for l in outside:
                c = Cycle([Arrow(i, l), Arrow(l, m), Arrow(m, j), Arrow(j, i)])
                w4[c] = w4[c] + (a(i) - a(j)) * (a(i) - a(l)) / (t(i) - t(m))
    return Potential(w4), Potential(w3), Potential(w2)


def _bipartite_potential(g, i):
    t = g.time
    mine = g.members(g.part(i))
    other = [j for j in g.nodes if g.part(j) != g.part(i)]
    w4 = defaultdict(lambda: ZERO)
    w2 = {}
    for k in mine:
        if k == i:
            continue
        for j in other:
            for l in other:
                # both H^inf_i and H^0_j walk i -> j -> k -> l -> i
                c = Cycle([Arrow(i, j), Arrow(j, k), Arrow(k, l), Arrow(l, i)])
                w4[c] = w4[c] + ONE / (t(i) - t(k))
    for j in other:
        w2[Cycle([Arrow(i, j), Arrow(j, i)])] = t(j)
    return Potential(w4), Potential(), Potential(w2)


def imd_total(g, i):
    w4, w3, w2 = imd_potential(g, i)
    return w4 + w3 + w2


def potential_time_derivative(w, name):
    if not isinstance(name, str):
        name = next(iter(Scalar(name).free_symbols()))
    return Potential({c: v.partial(name) for c, v in w.terms.items()})


def hamiltonian(g, i):
    """Classical H_i = Tr(W_i)."""
    return trace(imd_total(g, i), g)
