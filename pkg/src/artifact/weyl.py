"""The Weyl algebra of the representation space, in normal form.

Generators are the entries X^alpha_kl.  They are numbered by a fixed total
order; a normal word is a nondecreasing tuple of generator numbers.  The only
nonzero commutators are [X^a_kl, X^a*_lk] = c(a), all central, so moving a
single letter into place is a closed formula (see WeylAlgebra._insert).
"""

from collections import defaultdict
from functools import lru_cache
import itertools

from .cycles import TracePolynomial
from .quiver import Arrow
from .scalars import Scalar, ZERO, ONE, parse


class WeylError(Exception):
    pass


class ZeroElement(WeylError):
    pass


class WeylAlgebra:
    def __init__(self, symp):
        self.symp = symp
        g = self.graph = symp.graph
        gens = []
        for a in g.arrows():
            for k in range(1, g.dim(a.head) + 1):
                for l in range(1, g.dim(a.tail) + 1):
                    gens.append((a.tail, a.head, k, l))

        def key(x):
            a = Arrow(x[0], x[1])
            return (not symp.is_positive(a), g.part(a.tail), g.part(a.head),
                    a.tail, a.head, x[2], x[3])

        gens.sort(key=key)
        self.gens = tuple(gens)
        self.index = {x: n for n, x in enumerate(gens)}
        self.partner = tuple(self.index[(x[1], x[0], x[3], x[2])] for x in gens)
        # [X_n, X_partner(n)] = comm[n]
        self.comm = tuple(symp.c(Arrow(x[0], x[1])) for x in gens)
        self._insert = lru_cache(maxsize=200000)(self._insert_raw)

    def __len__(self):
        return len(self.gens)

    def gen(self, tail, head, k, l):
        """The element X^(tail->head)_kl."""
        return WeylElement(self, {(self.index[(tail, head, k, l)],): ONE})

    def scalar(self, v):
        v = Scalar(v)
        return WeylElement(self, {(): v} if not v.is_zero() else {})

    def zero(self):
        return WeylElement(self, {})

    def one(self):
        return self.scalar(1)

    def name(self, n):
        t, h, k, l = self.gens[n]
        return f"X[{t}->{h}]({k},{l})"

    def _insert_raw(self, word, x):
        """word * X_x as a tuple of (word, coeff) pairs."""
        pos = len(word)
        while pos and word[pos - 1] > x:
            pos -= 1
        out = [(word[:pos] + (x,) + word[pos:], ONE)]
        y = self.partner[x]
        if y > x:
            cnt = word.count(y)
            if cnt:
                cut = word.index(y)
                rest = word[:cut] + word[cut + 1:]
                # [X_y, X_x] = comm[y]; moving x left past y leaves that constant
                out.append((rest, self.comm[y] * cnt))
        return tuple(out)

    def mul_words(self, u, v):
        cur = {u: ONE}
        for x in v:
            nxt = defaultdict(lambda: ZERO)
            for w, c in cur.items():
                for w2, c2 in self._insert(w, x):
                    nxt[w2] = nxt[w2] + c * c2
            cur = {w: c for w, c in nxt.items() if not c.is_zero()}
        return cur

    def ordered_product(self, letters):
        """Normal form of X_{letters[0]} X_{letters[1]} ... as a dict."""
        return self.mul_words((), tuple(letters))

    def trace_word(self, written):
        """Tr(X^{w[0]} X^{w[1]} ... X^{w[-1]}) for a closed composable word.

        The word is given in written (operator) order, right to left along the
        path: tail(w[p]) == head(w[p + 1]).
        """
        n = len(written)
        if n == 0:
            raise WeylError("empty word")
        g = self.graph
        for p in range(n):
            if written[p].tail != written[(p + 1) % n].head:
                raise WeylError("word is not a closed path")
        # idx[p] runs over the head of written[p]; its column is idx[p + 1]
        ranges = [range(1, g.dim(a.head) + 1) for a in written]
        acc = defaultdict(lambda: ZERO)
        for idx in itertools.product(*ranges):
            letters = [self.index[(a.tail, a.head, idx[p], idx[(p + 1) % n])]
                       for p, a in enumerate(written)]
            for w, c in self.ordered_product(letters).items():
                acc[w] = acc[w] + c
        return WeylElement(self, acc)


class WeylElement:
    __slots__ = ("alg", "terms")

    def __init__(self, alg, terms=None):
        self.alg = alg
        self.terms = {}
        if terms:
            for w, v in terms.items():
                v = Scalar(v)
                if not v.is_zero():
                    self.terms[tuple(w)] = v

    def _same(self, other):
        if not isinstance(other, WeylElement):
            other = self.alg.scalar(other)
        if other.alg is not self.alg:
            raise WeylError("elements of different Weyl algebras")
        return other

    def __add__(self, other):
        other = self._same(other)
        out = dict(self.terms)
        for w, v in other.terms.items():
            x = out.get(w, ZERO) + v
            if x.is_zero():
                out.pop(w, None)
            else:
                out[w] = x
        e = WeylElement(self.alg)
        e.terms = out
        return e

    __radd__ = __add__

    def __neg__(self):
        e = WeylElement(self.alg)
        e.terms = {w: -v for w, v in self.terms.items()}
        return e

    def __sub__(self, other):
        return self + (-self._same(other))

    def __rsub__(self, other):
        return self._same(other) - self

    def scale(self, s):
        s = Scalar(s)
        e = WeylElement(self.alg)
        if not s.is_zero():
            e.terms = {w: v * s for w, v in self.terms.items()}
        return e

    def __mul__(self, other):
        if not isinstance(other, WeylElement):
            return self.scale(other)
        other = self._same(other)
        acc = defaultdict(lambda: ZERO)
        for u, a in self.terms.items():
            for v, b in other.terms.items():
                ab = a * b
                for w, c in self.alg.mul_words(u, v).items():
                    acc[w] = acc[w] + ab * c
        return WeylElement(self.alg, acc)

    def __rmul__(self, other):
        return self.scale(other)

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, (int, Scalar)):
            other = self.alg.scalar(other)
        return isinstance(other, WeylElement) and other.alg is self.alg and self.terms == other.terms

    def __len__(self):
        return len(self.terms)

    def order(self):
        if not self.terms:
            raise ZeroElement("the zero element has no filtration order")
        return max(len(w) for w in self.terms)

    def partial(self, name):
        return WeylElement(self.alg, {w: v.partial(name) for w, v in self.terms.items()})

    def map_coeffs(self, fn):
        return WeylElement(self.alg, {w: fn(v) for w, v in self.terms.items()})

    def homogeneous(self, degree):
        return WeylElement(self.alg, {w: v for w, v in self.terms.items() if len(w) == degree})

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (len(t[0]), t[0]))

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for w, v in self.sorted_terms():
            mono = "*".join(self.alg.name(n) for n in w)
            parts.append(f"{v}*{mono}" if mono else str(v))
        return " + ".join(parts)

    def to_json(self):
        return [{"word": [self.alg.name(n) for n in w], "coeff": str(v)}
                for w, v in self.sorted_terms()]


def weyl_mul(x, y):
    return x * y


def weyl_commutator(x, y):
    return x * y - y * x


def filtration_order(x):
    return x.order()


def semiclassical_limit(x):
    """Top-order part, read as a commutative polynomial."""
    top = x.order()
    gens = x.alg.gens
    out = TracePolynomial()
    for w, v in x.terms.items():
        if len(w) == top:
            out._acc(tuple(sorted(gens[n] for n in w)), v)
    return out


def rees_homogenize(x):
    """Split by word length; degree k is the coefficient of hbar^k."""
    out = {}
    for w, v in x.terms.items():
        out.setdefault(len(w), {})[w] = v
    return {k: WeylElement(x.alg, t) for k, t in sorted(out.items())}


def element_from_json(alg, data):
    import re
    pat = re.compile(r"X\[(\d+)->(\d+)\]\((\d+),(\d+)\)")
    acc = defaultdict(lambda: ZERO)
    for t in data:
        letters = []
        for name in t["word"]:
            m = pat.fullmatch(name)
            if not m:
                raise WeylError(f"bad generator name {name!r}")
            letters.append(alg.index[tuple(int(z) for z in m.groups())])
        for w, c in alg.ordered_product(letters).items():
            acc[w] = acc[w] + c * parse(t["coeff"])
    return WeylElement(alg, acc)
