"""Finite groups, cosets of subgroups of G^r, and coset-CSP instances."""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linalg import LinSystem
from .structures import ContractError, RelStructure, Vocabulary


class ResourceError(RuntimeError):
    pass


_TABLE_LIMIT = 5040


class FiniteGroup:
    """A group given by a multiplication table or by a product callback.

    Elements are indices ``0..n-1`` with display names.
    """

    def __init__(self, elements: Sequence[str], table=None, mul=None, check: bool = True):
        self.elements = tuple(str(e) for e in elements)
        if len(set(self.elements)) != len(self.elements):
            raise ContractError("group element names must be distinct")
        n = len(self.elements)
        if n == 0:
            raise ContractError("a group needs at least one element")
        self._index = {e: i for i, e in enumerate(self.elements)}
        if table is not None:
            self._table = np.asarray(table, dtype=np.int64)
            if self._table.shape != (n, n):
                raise ContractError("table must be |G| x |G|")
            if self._table.min() < 0 or self._table.max() >= n:
                raise ContractError("table entries outside the group")
            self._mul = None
        elif mul is not None:
            self._table = None
            self._mul = mul
        else:
            raise ContractError("need a table or a product")
        self.identity = self._find_identity()
        self._inv = [self._find_inverse(a) for a in range(n)]
        if check and self._table is not None:
            self._check_associative()

    def __len__(self) -> int:
        return len(self.elements)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteGroup):
            return NotImplemented
        return self.elements == other.elements and np.array_equal(self.table, other.table)

    def __hash__(self) -> int:
        return hash(self.elements)

    def index(self, name: str) -> int:
        try:
            return self._index[str(name)]
        except KeyError:
            raise ContractError(f"unknown group element {name!r}") from None

    @property
    def table(self) -> np.ndarray:
        if self._table is None:
            n = len(self)
            if n > _TABLE_LIMIT:
                raise ResourceError(f"multiplication table of order {n} is too large")
            self._table = np.array([[self._mul(a, b) for b in range(n)] for a in range(n)], dtype=np.int64)
        return self._table

    def mul(self, a: int, b: int) -> int:
        if self._table is not None:
            return int(self._table[a, b])
        return self._mul(a, b)

    def inv(self, a: int) -> int:
        return self._inv[a]

    def power(self, a: int, e: int) -> int:
        if e < 0:
            a, e = self.inv(a), -e
        out, base = self.identity, a
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    def order(self, a: int) -> int:
        k, x = 1, a
        while x != self.identity:
            x = self.mul(x, a)
            k += 1
        return k

    def commutator(self, a: int, b: int) -> int:
        """[a,b] = a^-1 b^-1 a b."""
        return self.mul(self.mul(self.inv(a), self.inv(b)), self.mul(a, b))

    def is_abelian(self) -> bool:
        t = self.table
        return bool(np.array_equal(t, t.T))

    def tuple_mul(self, x: Sequence[int], y: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.mul(a, b) for a, b in zip(x, y))

    def tuple_inv(self, x: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.inv(a) for a in x)

    def _find_identity(self) -> int:
        n = len(self)
        for e in range(n):
            if all(self.mul(e, a) == a and self.mul(a, e) == a for a in range(n)):
                return e
        raise ContractError("no identity element")

    def _find_inverse(self, a: int) -> int:
        if self._table is not None:
            hits = np.nonzero(self._table[a] == self.identity)[0]
            for b in hits:
                if self._table[b, a] == self.identity:
                    return int(b)
        else:
            x = a
            prev = self.identity
            while x != self.identity:
                prev = x
                x = self._mul(x, a)
            return prev
        raise ContractError(f"element {self.elements[a]} has no inverse")

    def _check_associative(self) -> None:
        t = self._table
        # (ab)c == a(bc) for all a, b, c
        left = t[t, :]  # left[a, b, c] = t[t[a, b], c]
        right = t[:, t]  # right[a, b, c] = t[a, t[b, c]]
        if not np.array_equal(left, right):
            raise ContractError("table is not associative")


def cyclic(n: int) -> FiniteGroup:
    if n < 1:
        raise ContractError("order must be positive")
    idx = np.arange(n)
    return FiniteGroup([str(i) for i in range(n)], (idx[:, None] + idx[None, :]) % n)


def symmetric(d: int) -> FiniteGroup:
    """Sym(d) on points 0..d-1 in one-line notation; p*q applies p first: (p*q)(i) = q(p(i))."""
    if d < 1:
        raise ContractError("degree must be positive")
    if d > 8:
        raise ResourceError("symmetric groups are limited to degree 8")
    perms = list(itertools.permutations(range(d)))
    index = {p: i for i, p in enumerate(perms)}
    names = ["".join(str(x) for x in p) if d <= 10 else "-".join(map(str, p)) for p in perms]

    def mul(a: int, b: int) -> int:
        p, q = perms[a], perms[b]
        return index[tuple(q[p[i]] for i in range(d))]

    g = FiniteGroup(names, mul=mul, check=False)
    if len(perms) <= 720:
        g.table  # small enough to tabulate once
    g.perms = perms
    g.perm_index = index
    return g


def semidirect_z9_z3() -> FiniteGroup:
    """Z9 x| Z3 with the generator of Z3 acting on Z9 by a -> 4a."""
    elems = [(a, b) for b in range(3) for a in range(9)]
    index = {e: i for i, e in enumerate(elems)}
    table = [
        [index[((a1 + pow(4, b1, 9) * a2) % 9, (b1 + b2) % 3)] for (a2, b2) in elems]
        for (a1, b1) in elems
    ]
    return FiniteGroup([f"{a}.{b}" for a, b in elems], table)


def direct_product(g: FiniteGroup, h: FiniteGroup) -> FiniteGroup:
    m = len(h)
    names = [f"{x}:{y}" for x in g.elements for y in h.elements]
    gt, ht = g.table, h.table
    a = np.arange(len(g) * m)
    table = gt[a[:, None] // m, a[None, :] // m] * m + ht[a[:, None] % m, a[None, :] % m]
    return FiniteGroup(names, table)


def from_table(elements: Sequence[str], rows: Sequence[Sequence[str]]) -> FiniteGroup:
    index = {str(e): i for i, e in enumerate(elements)}
    try:
        table = [[index[str(x)] for x in row] for row in rows]
    except KeyError as exc:
        raise ContractError(f"unknown element {exc.args[0]} in table") from None
    if len(table) != len(elements) or any(len(r) != len(elements) for r in table):
        raise ContractError("table must be |G| x |G|")
    return FiniteGroup(elements, table)


def subgroup_closure(g: FiniteGroup, gens: Iterable[Sequence[int]], r: int) -> frozenset[tuple[int, ...]]:
    """Smallest subgroup of G^r containing ``gens``."""
    gens = [tuple(x) for x in gens]
    if any(len(x) != r for x in gens):
        raise ContractError("generator of the wrong length")
    ident = (g.identity,) * r
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = g.tuple_mul(x, s)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(seen)


def coset(g: FiniteGroup, subgroup: Iterable[tuple[int, ...]], rep: Sequence[int]) -> frozenset[tuple[int, ...]]:
    """The right coset subgroup * rep."""
    rep = tuple(rep)
    return frozenset(g.tuple_mul(h, rep) for h in subgroup)


def is_subgroup(g: FiniteGroup, s: frozenset[tuple[int, ...]], r: int) -> bool:
    """Grow the span of greedily chosen members; a subgroup is exactly such a span."""
    if (g.identity,) * r not in s:
        return False
    gens: list[tuple[int, ...]] = []
    span: frozenset = frozenset({(g.identity,) * r})
    for x in sorted(s):
        if x not in span:
            gens.append(x)
            span = subgroup_closure(g, gens, r)
            if not span <= s:
                return False
    return span == s


def generating_set(g: FiniteGroup, subgroup: frozenset[tuple[int, ...]], r: int) -> list[tuple[int, ...]]:
    """A small generating set, picked greedily in sorted order."""
    gens: list[tuple[int, ...]] = []
    span = subgroup_closure(g, gens, r)
    for x in sorted(subgroup):
        if x not in span:
            gens.append(x)
            span = subgroup_closure(g, gens, r)
            if len(span) == len(subgroup):
                break
    return gens


def all_subgroups(g: FiniteGroup, r: int, limit: int = 4096) -> list[frozenset[tuple[int, ...]]]:
    """Every subgroup of G^r (desk scale only)."""
    if len(g) ** r > limit:
        raise ResourceError("G^r too large to enumerate subgroups")
    universe = list(itertools.product(range(len(g)), repeat=r))
    found = {subgroup_closure(g, [], r)}
    frontier = list(found)
    while frontier:
        nxt = []
        for s in frontier:
            gens = generating_set(g, s, r)
            for x in universe:
                if x not in s:
                    t = subgroup_closure(g, gens + [x], r)
                    if t not in found:
                        found.add(t)
                        nxt.append(t)
        frontier = nxt
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def full_coset_template(g: FiniteGroup, r: int) -> RelStructure:
    """T^r_G: one relation per coset of every subgroup of G^r."""
    rels: dict[frozenset, None] = {}
    for s in all_subgroups(g, r):
        for x in itertools.product(range(len(g)), repeat=r):
            rels.setdefault(coset(g, s, x))
    names = [f"C{i}" for i in range(len(rels))]
    return RelStructure(Vocabulary(tuple((n, r) for n in names)), g.elements, dict(zip(names, rels)))


@dataclass(frozen=True)
class CosetConstraint:
    scope: tuple[str, ...]
    subgroup: frozenset[tuple[int, ...]]
    rep: tuple[int, ...]

    def members(self, g: FiniteGroup) -> frozenset[tuple[int, ...]]:
        return coset(g, self.subgroup, self.rep)


@dataclass
class CosetInstance:
    group: FiniteGroup
    variables: tuple[str, ...]
    constraints: list[CosetConstraint] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.variables = tuple(str(v) for v in self.variables)
        if len(set(self.variables)) != len(self.variables):
            raise ContractError("variable names must be distinct")
        known = set(self.variables)
        for c in self.constraints:
            self._check(c, known)

    def _check(self, c: CosetConstraint, known: set[str]) -> None:
        r = len(c.scope)
        if any(v not in known for v in c.scope):
            raise ContractError(f"scope {c.scope} uses an undeclared variable")
        if len(c.rep) != r or any(len(x) != r for x in c.subgroup):
            raise ContractError("constraint tuples must match the scope length")
        if not is_subgroup(self.group, c.subgroup, r):
            raise ContractError("constraint subgroup is not a subgroup")

    def add(self, scope: Sequence[str], subgroup: Iterable[Sequence[int]], rep: Sequence[int]) -> None:
        c = CosetConstraint(tuple(str(v) for v in scope), frozenset(tuple(x) for x in subgroup), tuple(rep))
        self._check(c, set(self.variables))
        self.constraints.append(c)

    def is_solution(self, assignment: dict[str, int]) -> bool:
        return all(
            tuple(assignment[v] for v in c.scope) in c.members(self.group) for c in self.constraints
        )


def coset_to_structures(inst: CosetInstance) -> tuple[RelStructure, RelStructure]:
    """Template (G with the occurring cosets) and instance (variables with scopes)."""
    g = inst.group
    names: dict[frozenset, str] = {}
    arities: dict[str, int] = {}
    scopes: dict[str, list[tuple[int, ...]]] = {}
    vindex = {v: i for i, v in enumerate(inst.variables)}
    for c in inst.constraints:
        rel = c.members(g)
        name = names.setdefault(rel, f"C{len(names)}")
        arities[name] = len(c.scope)
        scopes.setdefault(name, []).append(tuple(vindex[v] for v in c.scope))
    vocab = Vocabulary(tuple((n, arities[n]) for n in names.values()))
    template = RelStructure(vocab, g.elements, {n: rel for rel, n in names.items()})
    instance = RelStructure(vocab, inst.variables, scopes)
    return template, instance


def _prime(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, math.isqrt(n) + 1))


def coset_to_equations(inst: CosetInstance) -> tuple[LinSystem, int]:
    """Integer system whose solutions reduced mod p solve the Z_p instance.

    Per constraint with generators d_1..d_m of the subgroup and rep c:
    x_j = sum_i z_i d_i[j] + c_j + p t_j, fresh z and t per constraint.
    """
    g = inst.group
    p = len(g)
    if not _prime(p) or not np.array_equal(g.table, cyclic(p).table) or g.elements != cyclic(p).elements:
        raise ContractError("coset_to_equations needs the cyclic group Z_p, p prime")
    system = LinSystem()
    for v in inst.variables:
        system.add_variable(("x", v))
    for ci, c in enumerate(inst.constraints):
        r = len(c.scope)
        gens = generating_set(g, c.subgroup, r)
        for i in range(len(gens)):
            system.add_variable(("z", ci, i))
        for j in range(r):
            system.add_variable(("t", ci, j))
            coeffs: dict = {}
            coeffs[("x", c.scope[j])] = coeffs.get(("x", c.scope[j]), 0) + 1
            for i, d in enumerate(gens):
                if d[j]:
                    coeffs[("z", ci, i)] = -d[j]
            coeffs[("t", ci, j)] = -p
            system.add_equation(coeffs, c.rep[j])
    return system, p


def commutator_subgroup(g: FiniteGroup) -> frozenset[int]:
    n = len(g)
    comms = {(g.commutator(a, b),) for a in range(n) for b in range(n)}
    return frozenset(x[0] for x in subgroup_closure(g, comms, 1))


def center(g: FiniteGroup) -> frozenset[int]:
    t = g.table
    return frozenset(int(a) for a in range(len(g)) if np.array_equal(t[a, :], t[:, a]))


def is_2_nilpotent(g: FiniteGroup) -> bool:
    return commutator_subgroup(g) <= center(g)


def group_exponent(g: FiniteGroup, elements: Iterable[int] | None = None) -> int:
    elements = range(len(g)) if elements is None else elements
    out = 1
    for a in elements:
        out = math.lcm(out, g.order(a))
    return out


def baer_reduct(g: FiniteGroup) -> FiniteGroup:
    """x + y = x y [x,y]^((m-1)/2), m the exponent of the commutator subgroup."""
    if len(g) % 2 == 0:
        raise ContractError("the Baer reduct needs a group of odd order")
    if not is_2_nilpotent(g):
        raise ContractError("the Baer reduct needs a 2-nilpotent group")
    m = group_exponent(g, commutator_subgroup(g))
    half = (m - 1) // 2
    n = len(g)
    table = [[g.mul(g.mul(x, y), g.power(g.commutator(x, y), half)) for y in range(n)] for x in range(n)]
    return FiniteGroup(g.elements, table)


def random_subgroup(
    g: FiniteGroup, r: int, rng: random.Random, max_gens: int = 2, max_size: int | None = None
) -> frozenset[tuple[int, ...]]:
    """Subgroup of G^r from up to ``max_gens`` random generators, resampled above ``max_size``."""
    while True:
        k = rng.randint(0, max_gens)
        gens = [tuple(rng.randrange(len(g)) for _ in range(r)) for _ in range(k)]
        s = subgroup_closure(g, gens, r)
        if max_size is None or len(s) <= max_size:
            return s


def random_coset_instance(
    g: FiniteGroup,
    nvars: int,
    ncons: int,
    rng: random.Random,
    max_arity: int = 3,
    max_gens: int = 2,
    max_size: int | None = None,
) -> CosetInstance:
    variables = tuple(f"x{i}" for i in range(nvars))
    inst = CosetInstance(g, variables)
    for _ in range(ncons):
        r = rng.randint(1, min(max_arity, nvars))
        scope = rng.sample(variables, r)
        sub = random_subgroup(g, r, rng, max_gens, max_size)
        rep = tuple(rng.randrange(len(g)) for _ in range(r))
        inst.add(scope, sub, rep)
    return inst


def brute_force_solve(inst: CosetInstance) -> dict[str, int] | None:
    """Exhaustive search over G^vars; reference for small instances."""
    g = inst.group
    rels = [(c.scope, c.members(g)) for c in inst.constraints]
    for vals in itertools.product(range(len(g)), repeat=len(inst.variables)):
        a = dict(zip(inst.variables, vals))
        if all(tuple(a[v] for v in scope) in rel for scope, rel in rels):
            return a
    return None
