"""Anchored cycles, quantum potentials and their combinatorial commutators.

An anchored cycle is kept in traversal order with the anchor first, so the
operator it defines is Tr(X^{w[-1]} ... X^{w[1]} X^{w[0]}).  Two anchorings
are identified when one is reached from the other by admissible
permutations: cutting the written word as A.B, where no arrow of A has its
reverse in B, and swapping to B.A.  In traversal order this is the rotation
w -> w[r:] + w[:r] subject to the same condition on w[:r] and w[r:].
"""

from collections import defaultdict, deque
from functools import lru_cache

from .cycles import Cycle, Potential, classify_cycle, _check_word, _key
from .quiver import Arrow
from .scalars import Scalar, ZERO, ONE, const, parse


class AnchoredError(Exception):
    pass


class NotAnIMDCycle(AnchoredError):
    pass


class UnsupportedPair(AnchoredError):
    pass


def _blocks_commute(left, right):
    s = set(left)
    return not any(a.star in s for a in right)


@lru_cache(maxsize=100000)
def _canonical(word):
    n = len(word)
    seen = {word}
    todo = deque([word])
    while todo:
        w = todo.popleft()
        for r in range(1, n):
            if _blocks_commute(w[:r], w[r:]):
                v = w[r:] + w[:r]
                if v not in seen:
                    seen.add(v)
                    todo.append(v)
    return min(seen, key=_key)


class AnchoredCycle:
    """A cycle with a distinguished first arrow, up to admissible permutations."""

    __slots__ = ("word",)

    def __init__(self, word, anchor=0):
        word = tuple(Arrow(*a) if not isinstance(a, Arrow) else a for a in word)
        _check_word(word)
        word = word[anchor:] + word[:anchor]
        object.__setattr__(self, "word", _canonical(word))

    def __setattr__(self, name, value):
        raise AttributeError("AnchoredCycle is immutable")

    @classmethod
    def from_written(cls, written):
        """Build from the right-to-left operator word alpha_n ... alpha_1."""
        return cls(tuple(reversed(written)))

    def written(self):
        return tuple(reversed(self.word))

    def cycle(self):
        return Cycle(self.word)

    def __len__(self):
        return len(self.word)

    def __eq__(self, other):
        return isinstance(other, AnchoredCycle) and self.word == other.word

    def __lt__(self, other):
        return (len(self), _key(self.word)) < (len(other), _key(other.word))

    def __hash__(self):
        return hash(("anchored", self.word))

    def __repr__(self):
        return "Tr(" + " ".join(str(a) for a in self.written()) + ")"

    def to_json(self):
        return {"cycle": [str(a) for a in self.word], "anchor": 0}

    @classmethod
    def from_json(cls, data):
        return cls([Arrow.parse(a) for a in data["cycle"]], data.get("anchor", 0))


class QuantumPotential:
    """Anchored cycles, ordered products of them, and a constant."""

    __slots__ = ("terms", "products", "constant")

    def __init__(self, terms=None, products=None, constant=ZERO):
        self.terms = _clean(terms)
        self.products = _clean(products)
        self.constant = Scalar(constant)

    def __add__(self, other):
        out = QuantumPotential()
        out.terms = _merge(self.terms, other.terms)
        out.products = _merge(self.products, other.products)
        out.constant = self.constant + other.constant
        return out

    def scale(self, s):
        s = Scalar(s)
        return QuantumPotential({c: v * s for c, v in self.terms.items()},
                                {c: v * s for c, v in self.products.items()},
                                self.constant * s)

    def __neg__(self):
        return self.scale(-ONE)

    def __sub__(self, other):
        return self + (-other)

    def is_zero(self):
        return not self.terms and not self.products and self.constant.is_zero()

    def __eq__(self, other):
        return (isinstance(other, QuantumPotential) and self.terms == other.terms
                and self.products == other.products and self.constant == other.constant)

    def classical(self):
        """Underlying potential of the cycle terms."""
        acc = defaultdict(lambda: ZERO)
        for c, v in self.terms.items():
            acc[c.cycle()] = acc[c.cycle()] + v
        return Potential(acc)

    def __repr__(self):
        parts = [f"{v}*{c!r}" for c, v in sorted(self.terms.items())]
        parts += [f"{v}*" + "*".join(repr(c) for c in cs) for cs, v in sorted(self.products.items())]
        if not self.constant.is_zero() or not parts:
            parts.append(str(self.constant))
        return " + ".join(parts)

    def to_json(self):
        return {
            "terms": [dict(c.to_json(), coeff=str(v)) for c, v in sorted(self.terms.items())],
            "products": [{"factors": [c.to_json() for c in cs], "coeff": str(v)}
                         for cs, v in sorted(self.products.items())],
            "constant": str(self.constant),
        }

    @classmethod
    def from_json(cls, data):
        terms = {AnchoredCycle.from_json(t): parse(t["coeff"]) for t in data.get("terms", [])}
        prods = {tuple(AnchoredCycle.from_json(f) for f in t["factors"]): parse(t["coeff"])
                 for t in data.get("products", [])}
        return cls(terms, prods, parse(data.get("constant", "0")))


def _clean(d):
    out = {}
    for k, v in (d or {}).items():
        v = Scalar(v)
        if not v.is_zero():
            out[k] = v
    return out


def _merge(a, b):
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, ZERO) + v
        if w.is_zero():
            out.pop(k, None)
        else:
            out[k] = w
    return out


def quantum_trace(obj, alg):
    """The Weyl element of an anchored cycle or a quantum potential."""
    if isinstance(obj, AnchoredCycle):
        return alg.trace_word(obj.written())
    out = alg.scalar(obj.constant)
    for c, v in obj.terms.items():
        out = out + alg.trace_word(c.written()).scale(v)
    for cs, v in obj.products.items():
        prod = alg.one()
        for c in cs:
            prod = prod * alg.trace_word(c.written())
        out = out + prod.scale(v)
    return out


# quantisation of IMD cycles

def quantise_cycle(c):
    """QuantumPotential quantising one IMD cycle."""
    kind = classify_cycle(c)
    w = c.word
    if kind.kind == "two_cycle":
        half = const("1/2")
        return QuantumPotential({AnchoredCycle(w, 0): half}) + QuantumPotential({AnchoredCycle(w, 1): half})
    if kind.kind == "degenerate_four":
        p = next(p for p, a in enumerate(w) if a.tail == kind.center)
        return QuantumPotential({AnchoredCycle(w, p): ONE})
    if kind.kind in ("three_cycle", "nondegenerate_four"):
        return QuantumPotential({AnchoredCycle(w, 0): ONE})
    raise NotAnIMDCycle(f"{c!r} is not an IMD cycle")


def quantise_imd(w):
    out = QuantumPotential()
    for c, v in w.terms.items():
        out = out + quantise_cycle(c).scale(v)
    return out


def quantum_hamiltonian(g, alg, i):
    from .cycles import imd_total
    return quantum_trace(quantise_imd(imd_total(g, i)), alg)


# change of anchor

def _trace_factor(word, g, node):
    """An anchored cycle, or the dimension of node for the empty word."""
    if not word:
        return None, g.dim(node)
    return AnchoredCycle(word), 1


def _anchor_step(word, s):
    """Tr(word) - Tr(word rotated by one), as a QuantumPotential."""
    g = s.graph
    first = word[0]
    out = QuantumPotential()
    n = len(word)
    for p in range(1, n):
        if word[p] != first.star:
            continue
        c = s.c(word[p])
        left, dl = _trace_factor(word[p + 1:], g, first.tail)
        right, dr = _trace_factor(word[1:p], g, first.head)
        coeff = c * (dl * dr)
        if left is None and right is None:
            out = out + QuantumPotential(constant=coeff)
        elif left is None or right is None:
            out = out + QuantumPotential({left or right: coeff})
        else:
            out = out + QuantumPotential(products={(left, right): coeff})
    return out


def change_anchor(c, new_anchor, s):
    """C - C' where C' is c re-anchored at c.word[new_anchor]."""
    word = c.word
    n = len(word)
    new_anchor %= n
    out = QuantumPotential()
    for step in range(new_anchor):
        out = out + _anchor_step(word[step:] + word[:step], s)
    return out


# combinatorial commutators

def quantum_cycle_commutator(c1, c2, s):
    """[Tr C1, Tr C2] as a combination of anchored cycles.

    Each pair alpha_i = beta_j* contributes c(alpha_i) times an ordered word
    from the Leibniz expansion.  When the two pieces of C1 left after deleting
    alpha_i commute, the word is the glued cycle anchored where C2 is; when
    the pieces of C2 commute instead, it is anchored where C1 is.
    """
    for c in (c1, c2):
        if classify_cycle(c.word).kind == "other":
            raise UnsupportedPair(f"{c!r} is not an IMD cycle")
    a, b = c1.word, c2.word
    acc = defaultdict(lambda: ZERO)
    for p, ap in enumerate(a):
        for q, bq in enumerate(b):
            if ap.star != bq:
                continue
            k = s.c(ap)
            if _blocks_commute(a[:p], a[p + 1:]):
                glued = b[:q] + a[p + 1:] + a[:p] + b[q + 1:]
            elif _blocks_commute(b[:q], b[q + 1:]):
                glued = a[:p] + b[q + 1:] + b[:q] + a[p + 1:]
            else:
                raise UnsupportedPair(f"no commuting split for {c1!r} and {c2!r}")
            ac = AnchoredCycle(glued)
            acc[ac] = acc[ac] + k
    return QuantumPotential(acc)


def quantum_potential_commutator(p1, p2, s):
    """Bilinear extension over cycle terms (constants are central)."""
    if p1.products or p2.products:
        raise UnsupportedPair("products of traces are not handled combinatorially")
    out = QuantumPotential()
    for c1, v1 in p1.terms.items():
        for c2, v2 in p2.terms.items():
            out = out + quantum_cycle_commutator(c1, c2, s).scale(v1 * v2)
    return out


def graded_symbol(g, alg, i):
    """Sum over k of the principal symbol of the quantised degree-k part of W_i.

    The 2-, 3- and 4-cycle parts of W_i are homogeneous, so this is the
    semiclassical limit read degree by degree; it should equal H_i.
    """
    from .cycles import imd_total, TracePolynomial
    from .weyl import semiclassical_limit
    w = imd_total(g, i)
    out = TracePolynomial()
    for k in sorted({len(c) for c in w.terms}):
        part = type(w)({c: v for c, v in w.terms.items() if len(c) == k})
        x = quantum_trace(quantise_imd(part), alg)
        if not x.is_zero():
            out = out + semiclassical_limit(x)
    return out
