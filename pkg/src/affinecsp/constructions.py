"""Graphs, Tseitin systems, OR-constructions and the monotone 3-SAT reduction."""

from __future__ import annotations

import itertools
import random
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .groups import CosetInstance, FiniteGroup, coset
from .structures import ContractError, OpTable, RelStructure, Vocabulary, check_maltsev


@dataclass(frozen=True)
class OrientedGraph:
    vertices: tuple[str, ...]
    arcs: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", tuple(str(v) for v in self.vertices))
        object.__setattr__(self, "arcs", tuple((str(u), str(v)) for u, v in self.arcs))
        if len(set(self.vertices)) != len(self.vertices):
            raise ContractError("vertex names must be distinct")
        known = set(self.vertices)
        seen = set()
        for u, v in self.arcs:
            if u not in known or v not in known:
                raise ContractError(f"arc {u}->{v} uses an unknown vertex")
            if u == v:
                raise ContractError("self-loops are not allowed")
            key = frozenset((u, v))
            if key in seen:
                raise ContractError(f"two arcs between {u} and {v}")
            seen.add(key)

    @classmethod
    def from_networkx(cls, g: nx.Graph) -> "OrientedGraph":
        """Names v0, v1, ... in sorted node order; arcs point from lower to higher index."""
        nodes = sorted(g.nodes)
        pos = {x: i for i, x in enumerate(nodes)}
        arcs = sorted((min(pos[u], pos[v]), max(pos[u], pos[v])) for u, v in g.edges)
        return cls(tuple(f"v{i}" for i in range(len(nodes))), tuple((f"v{u}", f"v{v}") for u, v in arcs))

    def undirected(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(self.arcs)
        return g

    def edge_name(self, arc: tuple[str, str]) -> str:
        return f"{arc[0]}-{arc[1]}"

    def edge_names(self) -> list[str]:
        return [self.edge_name(a) for a in self.arcs]

    def out_arcs(self, w: Iterable[str]) -> list[tuple[str, str]]:
        w = set(w)
        return [a for a in self.arcs if a[0] in w and a[1] not in w]

    def in_arcs(self, w: Iterable[str]) -> list[tuple[str, str]]:
        w = set(w)
        return [a for a in self.arcs if a[1] in w and a[0] not in w]


def k4() -> OrientedGraph:
    return OrientedGraph.from_networkx(nx.complete_graph(4))


def petersen() -> OrientedGraph:
    return OrientedGraph.from_networkx(nx.petersen_graph())


def heawood() -> OrientedGraph:
    return OrientedGraph.from_networkx(nx.heawood_graph())


NAMED_GRAPHS = {"k4": k4, "petersen": petersen, "heawood": heawood}


def check_2_connected(g: OrientedGraph) -> bool:
    u = g.undirected()
    return len(u) >= 3 and nx.is_biconnected(u)


def check_3_regular(g: OrientedGraph) -> bool:
    u = g.undirected()
    return len(u) > 0 and all(d == 3 for _, d in u.degree)


def random_3regular_2connected(n: int, seed: int) -> OrientedGraph:
    if n < 4 or n % 2:
        raise ContractError("n must be even and at least 4")
    rng = random.Random(seed)
    while True:
        g = OrientedGraph.from_networkx(nx.random_regular_graph(3, n, seed=rng.randrange(2**32)))
        if check_2_connected(g) and check_3_regular(g):
            return g


def expansion_witness(g: OrientedGraph, x: Iterable[str]) -> set[str] | None:
    """Greedy superset of the edge set ``x`` whose complement is empty or 2-connected.

    Keeps the largest 2-connected block of the remaining edges. Returns None
    when the remaining edges contain no 2-connected block but are nonempty.
    """
    x = set(x)
    names = {g.edge_name(a): a for a in g.arcs}
    if not x <= set(names):
        raise ContractError("x must be a set of edge names")
    rest = nx.Graph()
    rest.add_edges_from(a for n, a in names.items() if n not in x)
    if rest.number_of_edges() == 0:
        return x
    blocks = [b for b in nx.biconnected_components(rest) if len(b) >= 3]
    if not blocks:
        return None
    core = max(blocks, key=lambda b: (len(b), sorted(b)))
    return {n for n, (u, v) in names.items() if not (u in core and v in core) or n in x}


def _signed_sum(gamma: FiniteGroup, terms: Iterable[tuple[int, int]]) -> int:
    out = gamma.identity
    for sign, val in terms:
        out = gamma.mul(out, val if sign > 0 else gamma.inv(val))
    return out


def tseitin_instance(h: OrientedGraph, gamma: FiniteGroup, charge: Mapping[str, int]) -> CosetInstance:
    """One variable per edge; per vertex v: sum over out-arcs minus sum over in-arcs equals charge(v)."""
    if not gamma.is_abelian():
        raise ContractError("Tseitin systems need an Abelian group")
    inst = CosetInstance(gamma, tuple(h.edge_names()))
    for v in h.vertices:
        inc = [(a, 1 if a[0] == v else -1) for a in h.arcs if v in a]
        if not inc:
            continue
        r = len(inc)
        signs = [s for _, s in inc]
        sub = [
            t
            for t in itertools.product(range(len(gamma)), repeat=r)
            if _signed_sum(gamma, zip(signs, t)) == gamma.identity
        ]
        lam = charge.get(v, gamma.identity)
        first = lam if signs[0] > 0 else gamma.inv(lam)
        rep = (first,) + (gamma.identity,) * (r - 1)
        inst.add([h.edge_name(a) for a, _ in inc], sub, rep)
    return inst


def charge_total(gamma: FiniteGroup, charge: Mapping[str, int]) -> int:
    return _signed_sum(gamma, ((1, c) for c in charge.values()))


def check_cut_constraint(
    h: OrientedGraph, gamma: FiniteGroup, charge: Mapping[str, int], f: Mapping[str, int], w: Iterable[str]
) -> bool:
    """C(W): sum of f over arcs leaving W minus arcs entering W equals the charge of W."""
    w = set(w)
    out_arcs, in_arcs = h.out_arcs(w), h.in_arcs(w)
    if any(h.edge_name(a) not in f for a in out_arcs + in_arcs):
        raise ContractError("the cut of W is not inside the domain of f")
    lhs = _signed_sum(
        gamma, [(1, f[h.edge_name(a)]) for a in out_arcs] + [(-1, f[h.edge_name(a)]) for a in in_arcs]
    )
    rhs = _signed_sum(gamma, ((1, charge.get(v, gamma.identity)) for v in sorted(w)))
    return lhs == rhs


def robustly_consistent(
    h: OrientedGraph, gamma: FiniteGroup, charge: Mapping[str, int], f: Mapping[str, int], ell: int
) -> bool:
    """f satisfies C(W) for every vertex set W with |W| <= ell whose cut lies inside dom(f)."""
    if ell > len(h.vertices):
        warnings.warn("ell exceeds the number of vertices; clamping", stacklevel=2)
        ell = len(h.vertices)
    for size in range(1, ell + 1):
        for w in itertools.combinations(h.vertices, size):
            cut = h.out_arcs(w) + h.in_arcs(w)
            if all(h.edge_name(a) in f for a in cut) and not check_cut_constraint(h, gamma, charge, f, w):
                return False
    return True


def robust_assignments(
    h: OrientedGraph, gamma: FiniteGroup, charge: Mapping[str, int], edges: Sequence[str], ell: int
) -> list[dict[str, int]]:
    out = []
    for vals in itertools.product(range(len(gamma)), repeat=len(edges)):
        f = dict(zip(edges, vals))
        if robustly_consistent(h, gamma, charge, f, ell):
            out.append(f)
    return out


def tag_structure(s: RelStructure, tag: str) -> RelStructure:
    """Prefix every element and symbol name with ``tag``."""
    vocab = Vocabulary(tuple((tag + n, ar) for n, ar in s.vocabulary))
    return RelStructure(vocab, tuple(tag + e for e in s.universe), {tag + n: s.relations[n] for n, _ in s.vocabulary})


def _disjoint(s1: RelStructure, s2: RelStructure, what: str) -> None:
    if set(s1.universe) & set(s2.universe):
        raise ContractError(f"{what} universes overlap")
    if set(s1.vocabulary.names) & set(s2.vocabulary.names):
        raise ContractError(f"{what} vocabularies overlap")
    if "S" in s1.vocabulary.names or "S" in s2.vocabulary.names:
        raise ContractError("symbol S is reserved")


def or_instance(b1: RelStructure, b2: RelStructure) -> RelStructure:
    _disjoint(b1, b2, "instance")
    if len(b1) == 0 or len(b2) == 0:
        raise ContractError("both instances must be nonempty")
    n1 = len(b1)
    vocab = b1.vocabulary.union(b2.vocabulary).union(Vocabulary((("S", 2),)))
    rels = dict(b1.relations)
    for n, ts in b2.relations.items():
        rels[n] = frozenset(tuple(x + n1 for x in t) for t in ts)
    rels["S"] = frozenset((u, n1 + v) for u in range(n1) for v in range(len(b2)))
    return RelStructure(vocab, b1.universe + b2.universe, rels)


def or_template(
    a1: RelStructure,
    a2: RelStructure,
    w1: Iterable[int] = (),
    w2: Iterable[int] = (),
    fresh: tuple[str, str] = ("c1", "c2"),
) -> RelStructure:
    """OR_{W1,W2}(A1, A2); universe is A1, then A2, then c1, c2."""
    _disjoint(a1, a2, "template")
    if len(a1) == 0 or len(a2) == 0:
        raise ContractError("both templates must be nonempty")
    if set(fresh) & (set(a1.universe) | set(a2.universe)):
        raise ContractError("fresh element names clash")
    n1, n2 = len(a1), len(a2)
    c = (n1 + n2, n1 + n2 + 1)
    side = [list(range(n1)), list(range(n1, n1 + n2))]
    ws = [sorted(set(w1)), sorted(n1 + x for x in set(w2))]
    if any(not 0 <= x < n1 for x in ws[0]) or any(not n1 <= x < n1 + n2 for x in ws[1]):
        raise ContractError("W_i must be a subset of A_i")
    vocab = a1.vocabulary.union(a2.vocabulary).union(Vocabulary((("S", 2),)))
    rels: dict[str, set] = {}
    for i, (a, shift) in enumerate(((a1, 0), (a2, n1))):
        for name, ar in a.vocabulary:
            rel = {tuple(x + shift for x in t) for t in a.relations[name]}
            rel.add((c[i],) * ar)
            if ws[i]:
                for t in itertools.product(side[i] + [c[i]], repeat=ar):
                    if c[i] in t and any(x in ws[i] for x in t):
                        rel.add(t)
            rels[name] = rel
    s = {(x, y) for x in side[0] for y in ws[1] + [c[1]]}
    s |= {(x, y) for x in ws[0] + [c[0]] for y in side[1]}
    rels["S"] = s
    return RelStructure(vocab, a1.universe + a2.universe + fresh, rels)


def ort(a1: RelStructure, a2: RelStructure) -> RelStructure:
    return or_template(a1, a2)


def ornpc(a1: RelStructure, a2: RelStructure) -> RelStructure:
    return or_template(a1, a2, range(len(a1)), range(len(a2)))


def or_maltsev(a1: RelStructure, a2: RelStructure, f1: OpTable, f2: OpTable) -> OpTable:
    """Maltsev operation of ORT(A1, A2) built from Maltsev operations f1, f2."""
    if f1.arity != 3 or f2.arity != 3 or f1.size != len(a1) or f2.size != len(a2):
        raise ContractError("f1, f2 must be ternary operations on A1, A2")
    if not (check_maltsev(f1) and check_maltsev(f2)):
        raise ContractError("f1, f2 must be Maltsev")
    n1, n2 = len(a1), len(a2)
    c = (n1 + n2, n1 + n2 + 1)
    sides = (range(0, n1), range(n1, n1 + n2))

    def op(x: int, y: int, z: int) -> int:
        args = (x, y, z)
        for i in range(2):
            if all(v in sides[i] for v in args):
                lo = sides[i].start
                f = f1 if i == 0 else f2
                return f(x - lo, y - lo, z - lo) + lo
        for i in range(2):
            if all(v in sides[i] or v == c[i] for v in args) and args.count(c[i]) in (1, 3):
                return c[i]
        for v in args:
            if args.count(v) != 2:
                return v
        raise AssertionError("unreachable: three inputs cannot all occur exactly twice")

    return OpTable.from_function(3, n1 + n2 + 2, op)


def group_maltsev(gamma: FiniteGroup) -> OpTable:
    """x y^-1 z."""
    return OpTable.from_function(3, len(gamma), lambda x, y, z: gamma.mul(gamma.mul(x, gamma.inv(y)), z))


def unit_structure(name: str, arity: int = 3) -> RelStructure:
    """One element and one empty relation of the given arity."""
    return RelStructure(Vocabulary(((name, arity),)), (f"a_{name}",), {name: frozenset()})


def sat_template() -> RelStructure:
    return ornpc(unit_structure("R1"), unit_structure("R2"))


def monotone3sat_to_ornpc(cnf: Sequence[Sequence[int]]) -> RelStructure:
    """Instance over {R1, R2, S}; variable i gives x{i} (side 1) and nx{i} (side 2)."""
    nvars = 0
    for clause in cnf:
        if len(clause) != 3 or 0 in clause:
            raise ContractError("clauses must have exactly three nonzero literals")
        if not (all(l > 0 for l in clause) or all(l < 0 for l in clause)):
            raise ContractError("clauses must be all-positive or all-negative")
        nvars = max(nvars, *(abs(l) for l in clause))
    if nvars == 0:
        raise ContractError("formula has no variables")
    pos = [f"x{i}" for i in range(1, nvars + 1)]
    neg = [f"nx{i}" for i in range(1, nvars + 1)]
    r1 = [tuple(f"x{l}" for l in c) for c in cnf if c[0] > 0]
    r2 = [tuple(f"nx{-l}" for l in c) for c in cnf if c[0] < 0]
    s = [(f"x{i}", f"nx{i}") for i in range(1, nvars + 1)]
    return RelStructure.from_names([("R1", 3), ("R2", 3), ("S", 2)], pos + neg, {"R1": r1, "R2": r2, "S": s})


def monotone_sat_brute(cnf: Sequence[Sequence[int]]) -> bool:
    nvars = max(abs(l) for c in cnf for l in c)
    for bits in itertools.product((False, True), repeat=nvars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in cnf):
            return True
    return False


def random_monotone_cnf(nvars: int, nclauses: int, rng: random.Random) -> list[tuple[int, int, int]]:
    out = []
    for _ in range(nclauses):
        sign = rng.choice((1, -1))
        out.append(tuple(sign * rng.randint(1, nvars) for _ in range(3)))
    return out


def minimal_no_instance(gamma: FiniteGroup) -> CosetInstance:
    """x1 + x2 + x3 = 1 and x1 + x2 + x3 = 0 over an Abelian group with a named element 1."""
    if not gamma.is_abelian():
        raise ContractError("needs an Abelian group")
    one = gamma.index("1")
    sub = [t for t in itertools.product(range(len(gamma)), repeat=3) if _signed_sum(gamma, ((1, x) for x in t)) == gamma.identity]
    inst = CosetInstance(gamma, ("x1", "x2", "x3"))
    inst.add(("x1", "x2", "x3"), sub, (one, gamma.identity, gamma.identity))
    inst.add(("x1", "x2", "x3"), sub, (gamma.identity,) * 3)
    return inst


def random_structure(vocab: Vocabulary, n: int, ntuples: int, rng: random.Random) -> RelStructure:
    """n elements with ``ntuples`` random tuples spread over the symbols."""
    rels: dict[str, set] = {name: set() for name in vocab.names}
    names = list(vocab.names)
    for _ in range(ntuples):
        name = rng.choice(names)
        rels[name].add(tuple(rng.randrange(n) for _ in range(vocab.arity(name))))
    return RelStructure(vocab, tuple(f"u{i}" for i in range(n)), rels)


@dataclass(frozen=True)
class TseitinOr:
    """A Tseitin OR template/instance pair with its parts."""

    template: RelStructure
    instance: RelStructure
    parts: tuple[tuple[RelStructure, RelStructure], tuple[RelStructure, RelStructure]]


def tseitin_or(
    h: OrientedGraph,
    groups: tuple[FiniteGroup, FiniteGroup],
    charges: tuple[Mapping[str, int], Mapping[str, int]],
    mode: str = "tractable",
) -> TseitinOr:
    """OR of two Tseitin systems on h; sides tagged '1:' and '2:'."""
    from .groups import coset_to_structures

    parts = []
    for tag, gamma, lam in zip(("1:", "2:"), groups, charges):
        a, b = coset_to_structures(tseitin_instance(h, gamma, lam))
        parts.append((tag_structure(a, tag), tag_structure(b, tag)))
    (a1, b1), (a2, b2) = parts
    if mode == "tractable":
        template = ort(a1, a2)
    elif mode == "npc":
        template = ornpc(a1, a2)
    else:
        raise ContractError(f"unknown OR mode {mode!r}")
    return TseitinOr(template, or_instance(b1, b2), (parts[0], parts[1]))


def unit_charge(h: OrientedGraph, gamma: FiniteGroup, vertex: str | None = None) -> dict[str, int]:
    """Charge 1 on one vertex (the first by default), identity elsewhere."""
    vertex = vertex or h.vertices[0]
    one = gamma.index("1") if "1" in gamma.elements else (gamma.identity + 1) % len(gamma)
    return {v: (one if v == vertex else gamma.identity) for v in h.vertices}


def coset_relation(gamma: FiniteGroup, subgroup, rep) -> frozenset:
    return coset(gamma, subgroup, rep)
