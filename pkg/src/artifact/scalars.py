"""Exact rational functions in the reading symbols a_j and the times t_i.

A Scalar is either a plain rational number (fast path) or an element of a
sympy fraction field over ZZ with graded-lexicographic order.  The field
grows lazily: asking for a new symbol rebuilds it with that symbol appended,
and older elements are lifted on demand.  Appending a generator does not
change the grlex comparison of existing monomials, so canonical forms are
stable under growth.
"""

from fractions import Fraction
import threading

import sympy
from sympy import ZZ
from sympy.polys.fields import field as _make_field
from sympy.polys.orderings import grlex


class ScalarError(Exception):
    pass


class DivisionByZero(ScalarError, ZeroDivisionError):
    pass


class UnboundSymbol(ScalarError, KeyError):
    pass


class PoleHit(ScalarError, ZeroDivisionError):
    pass


_lock = threading.Lock()
_names = []
_field = None


def _current_field():
    return _field


def _grow(name):
    global _field
    with _lock:
        if name in _names:
            return
        _names.append(name)
        _field = _make_field(",".join(_names), ZZ, grlex)[0]


def _lift(elem):
    if elem.field is _field:
        return elem
    return elem.set_field(_field)


def _canon(value):
    """Demote constant field elements to Fraction so equality stays syntactic."""
    if isinstance(value, Fraction):
        return value
    num, den = value.numer, value.denom
    if num.is_ground and den.is_ground:
        return Fraction(int(num.LC) if num else 0, int(den.LC))
    return value


def _as_field(value):
    if isinstance(value, Fraction):
        if _field is None:
            raise AssertionError("no symbols registered")
        return _field(sympy.Rational(value.numerator, value.denominator))
    return _lift(value)


class Scalar:
    """Immutable exact rational function."""

    __slots__ = ("_v", "_h")

    def __init__(self, value=0):
        if isinstance(value, Scalar):
            self._v = value._v
        elif isinstance(value, (int, Fraction)):
            self._v = Fraction(value)
        elif isinstance(value, str):
            self._v = parse(value)._v
        else:
            self._v = _canon(value)
        self._h = None

    @classmethod
    def _wrap(cls, v):
        s = cls.__new__(cls)
        s._v = _canon(v)
        s._h = None
        return s

    # arithmetic

    def _binary(self, other, op):
        o = other._v if isinstance(other, Scalar) else Fraction(other)
        a = self._v
        if isinstance(a, Fraction) and isinstance(o, Fraction):
            return Scalar._wrap(op(a, o))
        if isinstance(a, Fraction):
            if op is _add and a == 0:
                return Scalar._wrap(_lift(o))
            if op is _mul:
                if a == 0:
                    return ZERO
                if a == 1:
                    return Scalar._wrap(_lift(o))
        if isinstance(o, Fraction):
            if op is _add and o == 0:
                return Scalar._wrap(_lift(a))
            if op is _mul:
                if o == 0:
                    return ZERO
                if o == 1:
                    return Scalar._wrap(_lift(a))
        return Scalar._wrap(op(_as_field(a), _as_field(o)))

    def __add__(self, other):
        return self._binary(other, _add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, _sub)

    def __rsub__(self, other):
        return Scalar(other) - self

    def __mul__(self, other):
        return self._binary(other, _mul)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = other if isinstance(other, Scalar) else Scalar(other)
        if other.is_zero():
            raise DivisionByZero("division by the zero scalar")
        return self._binary(other, _div)

    def __rtruediv__(self, other):
        return Scalar(other) / self

    def __neg__(self):
        if isinstance(self._v, Fraction):
            return Scalar._wrap(-self._v)
        return Scalar._wrap(-self._v)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("integer powers only")
        if n < 0:
            return Scalar(1) / (self ** (-n))
        out = ONE
        for _ in range(n):
            out = out * self
        return out

    # comparison

    def is_zero(self):
        v = self._v
        return v == 0 if isinstance(v, Fraction) else not v

    def __bool__(self):
        return not self.is_zero()

    def is_constant(self):
        return isinstance(self._v, Fraction)

    def __eq__(self, other):
        if not isinstance(other, Scalar):
            if isinstance(other, (int, Fraction)):
                other = Scalar(other)
            else:
                return NotImplemented
        a, b = self._v, other._v
        if isinstance(a, Fraction) or isinstance(b, Fraction):
            return isinstance(a, Fraction) and isinstance(b, Fraction) and a == b
        return _lift(a) == _lift(b)

    def __hash__(self):
        if self._h is None:
            v = self._v
            self._h = hash(v) if isinstance(v, Fraction) else hash(str(self))
        return self._h

    # inspection

    def constant(self):
        if not isinstance(self._v, Fraction):
            raise ValueError(f"{self} is not a constant")
        return self._v

    def free_symbols(self):
        v = self._v
        if isinstance(v, Fraction):
            return set()
        v = _lift(v)
        out = set()
        for poly in (v.numer, v.denom):
            for monom in poly.monoms():
                out.update(_names[k] for k, e in enumerate(monom) if e)
        return out

    def to_sympy(self):
        v = self._v
        if isinstance(v, Fraction):
            return sympy.Rational(v.numerator, v.denominator)
        return v.as_expr()

    def __str__(self):
        v = self._v
        if isinstance(v, Fraction):
            return str(v)
        v = _lift(v)
        num = v.numer.as_expr()
        den = v.denom.as_expr()
        if den == 1:
            return f"({num})"
        return f"({num})/({den})"

    def __repr__(self):
        return f"Scalar({str(self)!r})"

    # calculus and evaluation

    def partial(self, name):
        v = self._v
        if isinstance(v, Fraction) or name not in _names:
            return ZERO
        v = _lift(v)
        gen = _field.gens[_names.index(name)]
        return Scalar._wrap(v.diff(gen))

    def evaluate(self, assignment):
        v = self._v
        if isinstance(v, Fraction):
            return v
        v = _lift(v)
        needed = self.free_symbols()
        missing = sorted(needed - set(assignment))
        if missing:
            raise UnboundSymbol(f"no value for {', '.join(missing)}")
        vals = [Fraction(assignment[n]) if n in needed else Fraction(0) for n in _names]
        den = _eval_poly(v.denom, vals)
        if den == 0:
            raise PoleHit(f"denominator of {self} vanishes")
        return _eval_poly(v.numer, vals) / den


def _eval_poly(poly, vals):
    total = Fraction(0)
    for monom, coeff in poly.terms():
        term = Fraction(int(coeff))
        for k, e in enumerate(monom):
            if e:
                term *= vals[k] ** e
        total += term
    return total


def _add(a, b):
    return a + b


def _sub(a, b):
    return a - b


def _mul(a, b):
    return a * b


def _div(a, b):
    return a / b


ZERO = Scalar(0)
ONE = Scalar(1)


def symbol(name):
    """The Scalar for a named formal symbol, registering it if new."""
    if name not in _names:
        _grow(name)
    return Scalar._wrap(_field.gens[_names.index(name)])


def const(q):
    return Scalar(Fraction(q))


def parse(text):
    """Parse the text form produced by str(Scalar)."""
    expr = sympy.sympify(text, rational=True)
    for s in sorted(expr.free_symbols, key=lambda s: s.name):
        symbol(s.name)
    if not expr.free_symbols:
        r = sympy.Rational(expr)
        return Scalar(Fraction(int(r.p), int(r.q)))
    return Scalar._wrap(_field.from_expr(expr))


def arith(x, y, op):
    """Dispatch by operation name: add, sub, mul, div."""
    table = {"add": Scalar.__add__, "sub": Scalar.__sub__,
             "mul": Scalar.__mul__, "div": Scalar.__truediv__}
    if op not in table:
        raise ValueError(f"unknown operation {op!r}")
    return table[op](Scalar(x), Scalar(y))


def evaluate(x, assignment):
    return Scalar(x).evaluate(assignment)


def partial(x, name):
    return Scalar(x).partial(name)
