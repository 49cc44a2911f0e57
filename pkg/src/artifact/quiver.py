"""Complete k-partite graphs, readings, phi weights and symplectic data.

Nodes are the integers 1..N, numbered part by part.  An arrow is the pair
(tail, head).  alpha_ij denotes the arrow from node j to node i, so
alpha_ij == Arrow(j, i).
"""

from dataclasses import dataclass, field
import json

from .scalars import Scalar, ONE, ZERO, symbol, parse


class QuiverError(Exception):
    pass


class InvalidReading(QuiverError):
    pass


class EmptyPart(QuiverError):
    pass


class NotAdjacent(QuiverError):
    pass


class ConfigError(QuiverError):
    pass


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    __str__ = __repr__


INF = _Infinity()


@dataclass(frozen=True, order=True)
class Arrow:
    tail: int
    head: int

    @property
    def star(self):
        return Arrow(self.head, self.tail)

    def __str__(self):
        return f"{self.tail}->{self.head}"

    @staticmethod
    def parse(text):
        a, b = text.split("->")
        return Arrow(int(a), int(b))


@dataclass(frozen=True)
class Reading:
    values: tuple  # per part: Scalar or INF

    @property
    def generic(self):
        return INF not in self.values

    def infinite_part(self):
        for j, v in enumerate(self.values):
            if v is INF:
                return j
        return None


@dataclass(frozen=True)
class KPartiteGraph:
    labels: tuple
    part_of: tuple  # part index of node n is part_of[n - 1]
    dims: tuple
    times: tuple  # Scalar per node
    reading: Reading

    @property
    def nodes(self):
        return range(1, len(self.part_of) + 1)

    @property
    def k(self):
        return len(self.labels)

    def part(self, node):
        return self.part_of[node - 1]

    def dim(self, node):
        return self.dims[node - 1]

    def time(self, node):
        return self.times[node - 1]

    def members(self, j):
        return [n for n in self.nodes if self.part(n) == j]

    def adjacent(self, i, j):
        return self.part(i) != self.part(j)

    def arrows(self):
        return [Arrow(i, j) for i in self.nodes for j in self.nodes if self.adjacent(i, j)]

    def reading_of(self, node):
        return self.reading.values[self.part(node)]

    def dynamical_nodes(self):
        """Nodes carrying a Hamiltonian: those whose time is not frozen."""
        return [n for n in self.nodes if not self.time(n).is_constant()]

    def time_name(self, node):
        syms = self.time(node).free_symbols()
        if len(syms) != 1:
            raise QuiverError(f"node {node} has no time symbol")
        return next(iter(syms))


def _reading_value(v, j):
    if v is None:
        return symbol(f"a{j + 1}")
    if v is INF:
        return INF
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity", "oo"):
            return INF
        return parse(v)
    return Scalar(v)


def build_graph(part_sizes, dims=None, reading=None, times=None, labels=None):
    """Build a complete k-partite graph.

    reading entries may be a Scalar, an int, "inf", or None for the symbol
    a_j.  times may be None (t_n per node, except that single-node parts of a
    degenerate reading are frozen at 0) or a list with None entries meaning
    the default.
    """
    if not part_sizes or any(s <= 0 for s in part_sizes):
        raise EmptyPart("every part needs at least one node")
    k = len(part_sizes)
    n = sum(part_sizes)
    part_of = tuple(j for j, s in enumerate(part_sizes) for _ in range(s))
    dims = tuple(dims) if dims is not None else (1,) * n
    if len(dims) != n or any(d <= 0 for d in dims):
        raise QuiverError("dims must list one positive integer per node")
    reading = list(reading) if reading is not None else [None] * k
    if len(reading) != k:
        raise QuiverError("reading must list one value per part")
    values = tuple(_reading_value(v, j) for j, v in enumerate(reading))
    if sum(v is INF for v in values) > 1:
        raise InvalidReading("at most one part may be read at infinity")
    finite = [v for v in values if v is not INF]
    for x in range(len(finite)):
        for y in range(x):
            if finite[x] == finite[y]:
                raise InvalidReading("the reading must be injective")
    r = Reading(values)
    times = list(times) if times is not None else [None] * n
    if len(times) != n:
        raise QuiverError("times must list one entry per node")
    out = []
    for node in range(1, n + 1):
        t = times[node - 1]
        if t is None:
            frozen = not r.generic and part_sizes[part_of[node - 1]] == 1
            out.append(ZERO if frozen else symbol(f"t{node}"))
        elif isinstance(t, str):
            out.append(parse(t))
        else:
            out.append(Scalar(t))
    labels = tuple(labels) if labels is not None else tuple(f"j{j}" for j in range(k))
    return KPartiteGraph(labels, part_of, dims, tuple(out), r)


def phi_weight(g, i, j):
    """phi_ij = 1/(a_i - a_j), with 1 when a_i is infinite."""
    if not g.adjacent(i, j):
        raise NotAdjacent(f"nodes {i} and {j} lie in the same part")
    ai, aj = g.reading_of(i), g.reading_of(j)
    if ai is INF:
        return ONE
    if aj is INF:
        return -ONE
    return ONE / (ai - aj)


@dataclass(frozen=True)
class SymplecticData:
    """Positive arrow and bracket constant for every adjacent pair.

    const[alpha] is the constant c in {X^alpha_kl, X^alpha*_mn} = c d_kn d_lm;
    it is stored for both arrows of a pair with opposite signs.
    """
    graph: KPartiteGraph
    positive: frozenset
    const: dict = field(hash=False, compare=False)
    convention: str = "unit"

    def c(self, arrow):
        return self.const[arrow]

    def is_positive(self, arrow):
        return arrow in self.positive


def default_orientation(g):
    """Positive arrows leave the infinite part, otherwise go up the part order."""
    inf = g.reading.infinite_part()
    pos = set()
    for a in g.arrows():
        pt, ph = g.part(a.tail), g.part(a.head)
        if inf is not None and inf in (pt, ph):
            if pt == inf:
                pos.add(a)
        elif pt < ph:
            pos.add(a)
    return frozenset(pos)


def cyclic_orientation(g):
    """Positive arrows go from part j to part j+1 mod k (for k = 3, a 3-cycle)."""
    k = g.k
    if k < 3:
        return default_orientation(g)
    pos = set()
    for a in g.arrows():
        if (g.part(a.head) - g.part(a.tail)) % k == 1:
            pos.add(a)
        elif (g.part(a.tail) - g.part(a.head)) % k != 1 and g.part(a.tail) < g.part(a.head):
            pos.add(a)
    return frozenset(pos)


CONVENTIONS = ("auto", "unit", "phi_inverse", "phi")


def resolve_convention(g, convention):
    """auto means phi on generic readings and unit otherwise."""
    if convention == "auto":
        return "phi" if g.reading.generic else "unit"
    return convention


def default_symplectic(g, convention="auto", orientation=None):
    """Structure constants for the given convention.

    unit: c = 1 on every positive arrow.
    phi_inverse: c(alpha) = 1/phi(tail, head), orientation-free.
    phi: c(alpha) = phi(tail, head).
    auto: phi for generic readings, unit for degenerate ones (the two agree
    there up to orientation).  Only phi makes generic graphs flat.
    """
    convention = resolve_convention(g, convention)
    if convention not in CONVENTIONS:
        raise ConfigError(f"unknown convention {convention!r}")
    pos = orientation if orientation is not None else default_orientation(g)
    const = {}
    for a in g.arrows():
        if convention == "unit":
            c = ONE if a in pos else -ONE
        elif convention == "phi_inverse":
            c = ONE / phi_weight(g, a.tail, a.head)
        else:
            c = phi_weight(g, a.tail, a.head)
        const[a] = c
    if convention != "unit":
        pos = frozenset(a for a in g.arrows() if a.tail < a.head)
    return SymplecticData(g, frozenset(pos), const, convention)


def opposite(s):
    """The same data with every structure constant negated."""
    return SymplecticData(s.graph, s.positive, {a: -c for a, c in s.const.items()},
                          s.convention + "_op")


def with_positive(s, positive):
    """The same constants with a different set of positive arrows."""
    return SymplecticData(s.graph, frozenset(positive), s.const, s.convention)


# JSON ingestion

def graph_from_json(spec):
    """Read the quiver JSON format; returns (graph, symplectic data)."""
    if isinstance(spec, (str, bytes)):
        spec = json.loads(spec)
    try:
        parts = spec["parts"]
    except (KeyError, TypeError):
        raise ConfigError("config needs a 'parts' list")
    if not isinstance(parts, list) or not parts:
        raise ConfigError("'parts' must be a nonempty list")
    sizes, dims, reading, labels, times = [], [], [], [], []
    for j, p in enumerate(parts):
        nodes = p.get("nodes", [])
        if not nodes:
            raise EmptyPart(f"part {j} has no nodes")
        sizes.append(len(nodes))
        labels.append(str(p.get("label", f"j{j}")))
        reading.append(p.get("reading"))
        for nd in nodes:
            dims.append(int(nd.get("dim", 1)))
            times.append(nd.get("time"))
    g = build_graph(sizes, dims, reading, times, labels)
    conv = spec.get("convention", "auto")
    orient = spec.get("orientation")
    pos = None
    if orient == "cyclic":
        pos = cyclic_orientation(g)
    elif isinstance(orient, list):
        pos = frozenset(Arrow.parse(a) for a in orient)
    return g, default_symplectic(g, conv, pos)


def graph_to_json(g, s=None):
    parts = []
    for j, lab in enumerate(g.labels):
        v = g.reading.values[j]
        nodes = [{"dim": g.dim(n), "time": str(g.time(n))} for n in g.members(j)]
        entry = {"label": lab, "nodes": nodes}
        if not (isinstance(v, Scalar) and v.free_symbols() == {f"a{j + 1}"} and v == symbol(f"a{j + 1}")):
            entry["reading"] = "inf" if v is INF else str(v)
        parts.append(entry)
    out = {"parts": parts}
    if s is not None:
        out["convention"] = s.convention
    return out
