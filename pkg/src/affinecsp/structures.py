"""Finite relational structures, partial homomorphisms and polymorphisms.

Elements are addressed by their index in ``universe``; names only matter at
I/O boundaries. Every structure is immutable once built.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np


class ContractError(ValueError):
    """Raised when an operation's precondition is violated."""


class DomainError(ContractError):
    """Raised when an element outside a structure's universe is referenced."""


@dataclass(frozen=True)
class Vocabulary:
    symbols: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        names = [s for s, _ in self.symbols]
        if len(set(names)) != len(names):
            raise ContractError("duplicate relation symbol")
        for name, ar in self.symbols:
            if ar < 1:
                raise ContractError(f"symbol {name} has arity {ar} < 1")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.symbols)

    def arity(self, name: str) -> int:
        for s, ar in self.symbols:
            if s == name:
                return ar
        raise KeyError(name)

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def union(self, other: "Vocabulary") -> "Vocabulary":
        clash = set(self.names) & set(other.names)
        if clash:
            raise ContractError(f"vocabularies overlap: {sorted(clash)}")
        return Vocabulary(self.symbols + other.symbols)


@dataclass(frozen=True)
class RelStructure:
    vocabulary: Vocabulary
    universe: tuple[str, ...]
    relations: Mapping[str, frozenset[tuple[int, ...]]]
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if len(set(self.universe)) != len(self.universe):
            raise ContractError("universe names must be distinct")
        n = len(self.universe)
        rels = {}
        for name, ar in self.vocabulary:
            tuples = frozenset(tuple(t) for t in self.relations.get(name, ()))
            for t in tuples:
                if len(t) != ar:
                    raise ContractError(f"tuple {t} in {name} has wrong length")
                if any(not 0 <= x < n for x in t):
                    raise DomainError(f"tuple {t} in {name} leaves the universe")
            rels[name] = tuples
        extra = set(self.relations) - set(rels)
        if extra:
            raise ContractError(f"relations for undeclared symbols {sorted(extra)}")
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "_index", {x: i for i, x in enumerate(self.universe)})

    @classmethod
    def from_names(
        cls,
        symbols: Iterable[tuple[str, int]],
        universe: Iterable[str],
        relations: Mapping[str, Iterable[Sequence[str]]],
    ) -> "RelStructure":
        universe = tuple(str(u) for u in universe)
        index = {x: i for i, x in enumerate(universe)}
        try:
            rels = {
                r: frozenset(tuple(index[str(x)] for x in t) for t in ts)
                for r, ts in relations.items()
            }
        except KeyError as exc:
            raise DomainError(f"unknown element {exc.args[0]}") from None
        return cls(Vocabulary(tuple(symbols)), universe, rels)

    def __len__(self) -> int:
        return len(self.universe)

    def __hash__(self) -> int:
        return hash((self.vocabulary, self.universe, tuple(sorted((k, v) for k, v in self.relations.items()))))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RelStructure):
            return NotImplemented
        return (
            self.vocabulary == other.vocabulary
            and self.universe == other.universe
            and self.relations == other.relations
        )

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise DomainError(f"unknown element {name!r}") from None

    def tuples(self) -> Iterator[tuple[str, tuple[int, ...]]]:
        """All (symbol, tuple) pairs in deterministic order."""
        for name, _ in self.vocabulary:
            for t in sorted(self.relations[name]):
                yield name, t

    def arity(self) -> int:
        return max((ar for _, ar in self.vocabulary), default=0)

    def named_tuples(self, name: str) -> list[tuple[str, ...]]:
        return [tuple(self.universe[i] for i in t) for t in sorted(self.relations[name])]


@dataclass(frozen=True)
class PartialHom:
    """A map from a set of instance elements to template elements.

    ``domain`` is sorted; ``values[i]`` is the image of ``domain[i]``.
    """

    domain: tuple[int, ...]
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.domain) != len(self.values):
            raise ContractError("domain and values differ in length")
        if list(self.domain) != sorted(set(self.domain)):
            raise ContractError("domain must be sorted and duplicate free")

    @classmethod
    def from_dict(cls, mapping: Mapping[int, int]) -> "PartialHom":
        dom = tuple(sorted(mapping))
        return cls(dom, tuple(mapping[x] for x in dom))

    @classmethod
    def empty(cls) -> "PartialHom":
        return cls((), ())

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.domain, self.values))

    def restrict(self, subset: Iterable[int]) -> "PartialHom":
        keep = set(subset)
        pairs = [(x, v) for x, v in zip(self.domain, self.values) if x in keep]
        return PartialHom(tuple(x for x, _ in pairs), tuple(v for _, v in pairs))

    def __len__(self) -> int:
        return len(self.domain)


def _check_same_vocabulary(a: RelStructure, b: RelStructure) -> None:
    if dict(a.vocabulary.symbols) != dict(b.vocabulary.symbols):
        raise ContractError("template and instance vocabularies differ")


def induced_substructure(s: RelStructure, elements: Iterable[int | str]) -> RelStructure:
    idx = []
    for x in elements:
        if isinstance(x, str):
            idx.append(s.index(x))
        elif 0 <= x < len(s):
            idx.append(x)
        else:
            raise DomainError(f"unknown element {x!r}")
    keep = sorted(set(idx))
    pos = {old: new for new, old in enumerate(keep)}
    rels = {
        name: frozenset(tuple(pos[x] for x in t) for t in ts if all(x in pos for x in t))
        for name, ts in s.relations.items()
    }
    return RelStructure(s.vocabulary, tuple(s.universe[i] for i in keep), rels)


def is_homomorphism(f: PartialHom, b: RelStructure, a: RelStructure) -> bool:
    _check_same_vocabulary(a, b)
    m = f.as_dict()
    for x, v in m.items():
        if not 0 <= x < len(b) or not 0 <= v < len(a):
            raise DomainError("map leaves the universe")
    for name, ts in b.relations.items():
        target = a.relations[name]
        for t in ts:
            if all(x in m for x in t) and tuple(m[x] for x in t) not in target:
                return False
    return True


class _Incidence:
    """Per-element lists of the tuples that mention it."""

    def __init__(self, b: RelStructure):
        self.by_elem: list[list[tuple[str, tuple[int, ...]]]] = [[] for _ in range(len(b))]
        for name, t in b.tuples():
            for x in sorted(set(t)):
                self.by_elem[x].append((name, t))


def oracle_decide(a: RelStructure, b: RelStructure) -> tuple[bool, tuple[int, ...] | None]:
    """Backtracking search for a homomorphism b -> a with forward checking.

    Returns ``(True, witness)`` with ``witness[i]`` the image of element i,
    or ``(False, None)``.
    """
    _check_same_vocabulary(a, b)
    n = len(b)
    if n == 0:
        return True, ()
    inc = _Incidence(b)
    rel_lists = {name: sorted(ts) for name, ts in a.relations.items()}
    domains: list[set[int]] = [set(range(len(a))) for _ in range(n)]

    # unary projections prune the initial domains
    for name, t in b.tuples():
        cands = rel_lists[name]
        for pos, x in enumerate(t):
            domains[x] &= {u[pos] for u in cands if all(u[i] == u[pos] for i, y in enumerate(t) if y == x)}
    if any(not d for d in domains):
        return False, None

    assign: dict[int, int] = {}

    def supported(name: str, t: tuple[int, ...], doms: list[set[int]]) -> dict[int, set[int]] | None:
        """Values of the unassigned entries of t that extend to some template tuple."""
        free = {x for x in t if x not in assign}
        support: dict[int, set[int]] = {x: set() for x in free}
        found = False
        for u in rel_lists[name]:
            ok = True
            seen: dict[int, int] = {}
            for x, v in zip(t, u):
                if x in assign:
                    if assign[x] != v:
                        ok = False
                        break
                else:
                    if v not in doms[x] or seen.get(x, v) != v:
                        ok = False
                        break
                    seen[x] = v
            if ok:
                found = True
                for x, v in seen.items():
                    support[x].add(v)
        return support if found else None

    def propagate(x: int, doms: list[set[int]]) -> list[set[int]] | None:
        new = list(doms)
        queue = [x]
        while queue:
            y = queue.pop()
            for name, t in inc.by_elem[y]:
                sup = supported(name, t, new)
                if sup is None:
                    return None
                for z, vals in sup.items():
                    if vals != new[z]:
                        new[z] = new[z] & vals
                        if not new[z]:
                            return None
                        if z not in queue:
                            queue.append(z)
        return new

    def search(doms: list[set[int]]) -> bool:
        free = [x for x in range(n) if x not in assign]
        if not free:
            return True
        x = min(free, key=lambda y: (len(doms[y]), y))
        for v in sorted(doms[x]):
            assign[x] = v
            trial = list(doms)
            trial[x] = {v}
            trial = propagate(x, trial)
            if trial is not None and search(trial):
                return True
            del assign[x]
        return False

    if search(domains):
        return True, tuple(assign[i] for i in range(n))
    return False, None


def _extend_homs(
    a: RelStructure,
    inc: _Incidence,
    prefix: tuple[int, ...],
    homs: Iterable[tuple[int, ...]],
    new: int,
) -> list[tuple[int, ...]]:
    """Extend homs on ``prefix`` by element ``new`` (greater than all of prefix)."""
    dom = prefix + (new,)
    pos = {x: i for i, x in enumerate(dom)}
    checks = [(a.relations[name], t) for name, t in inc.by_elem[new] if all(x in pos for x in t)]
    out = []
    size = len(a)
    for g in homs:
        for v in range(size):
            vals = g + (v,)
            if all(tuple(vals[pos[x]] for x in t) in target for target, t in checks):
                out.append(vals)
    return out


def enumerate_partial_homs(a: RelStructure, b: RelStructure, elements: Iterable[int]) -> list[PartialHom]:
    _check_same_vocabulary(a, b)
    dom = tuple(sorted(set(elements)))
    if any(not 0 <= x < len(b) for x in dom):
        raise DomainError("element outside the instance universe")
    inc = _Incidence(b)
    homs: list[tuple[int, ...]] = [()]
    for i, x in enumerate(dom):
        homs = _extend_homs(a, inc, dom[:i], homs, x)
    return [PartialHom(dom, h) for h in homs]


def partial_hom_table(a: RelStructure, b: RelStructure, k: int) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
    """Hom(B[X], A) for every sorted X with |X| <= k, as value tuples."""
    _check_same_vocabulary(a, b)
    inc = _Incidence(b)
    table: dict[tuple[int, ...], list[tuple[int, ...]]] = {(): [()]}
    frontier = [()]
    for _ in range(k):
        nxt = []
        for xs in frontier:
            start = xs[-1] + 1 if xs else 0
            for y in range(start, len(b)):
                ys = xs + (y,)
                table[ys] = _extend_homs(a, inc, xs, table[xs], y)
                nxt.append(ys)
        frontier = nxt
    return table


def subsets_upto(n: int, k: int) -> list[tuple[int, ...]]:
    out = []
    for size in range(min(k, n) + 1):
        out.extend(itertools.combinations(range(n), size))
    return out


@dataclass(frozen=True)
class OpTable:
    """An m-ary operation on {0..size-1}, stored as an m-dimensional array."""

    arity: int
    size: int
    table: np.ndarray = field(compare=False)

    def __post_init__(self) -> None:
        t = np.asarray(self.table, dtype=np.int64)
        if t.shape != (self.size,) * self.arity:
            raise ContractError("operation table has the wrong shape")
        if t.size and (t.min() < 0 or t.max() >= self.size):
            raise ContractError("operation values leave the universe")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_function(cls, arity: int, size: int, fn) -> "OpTable":
        t = np.empty((size,) * arity, dtype=np.int64)
        for args in itertools.product(range(size), repeat=arity):
            t[args] = fn(*args)
        return cls(arity, size, t)

    def __call__(self, *args: int) -> int:
        return int(self.table[args])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OpTable):
            return NotImplemented
        return self.arity == other.arity and self.size == other.size and np.array_equal(self.table, other.table)

    def __hash__(self) -> int:
        return hash((self.arity, self.size, self.table.tobytes()))


def is_polymorphism(p: OpTable, a: RelStructure) -> bool:
    if p.size != len(a):
        raise ContractError("operation and structure have different universes")
    n = p.size
    for name, ar in a.vocabulary:
        rel = a.relations[name]
        if not rel:
            continue
        tuples = np.array(sorted(rel), dtype=np.int64)
        weights = n ** np.arange(ar - 1, -1, -1, dtype=np.int64)
        codes = np.sort(tuples @ weights)
        m = len(tuples)
        # iterate the first m-1 argument choices in python when the product is large
        outer = max(0, p.arity - 2)
        inner = p.arity - outer
        grids = np.meshgrid(*([np.arange(m)] * inner), indexing="ij")
        inner_idx = [g.ravel() for g in grids]
        for head in itertools.product(range(m), repeat=outer):
            rows = [np.full(inner_idx[0].shape, h) for h in head] + inner_idx
            # result[:, j] = p(t_{rows[0]}[j], ..., t_{rows[m-1]}[j])
            args = [tuples[r] for r in rows]
            out = p.table[tuple(args)]
            found = np.searchsorted(codes, out @ weights)
            found = np.minimum(found, len(codes) - 1)
            if not np.all(codes[found] == out @ weights):
                return False
    return True


def check_maltsev(p: OpTable) -> bool:
    if p.arity != 3:
        raise ContractError("a Maltsev operation is ternary")
    n = p.size
    xs, ys = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return bool(np.all(p.table[xs, xs, ys] == ys) and np.all(p.table[ys, xs, xs] == ys))


def alternating_from_maltsev(p: OpTable, arity: int) -> OpTable:
    """Right-nested term a(x1..x_{2n+1}) = p(x1, x2, p(x3, x4, ... ))."""
    if p.arity != 3:
        raise ContractError("expected a ternary operation")
    if arity < 3 or arity % 2 == 0:
        raise ContractError("arity must be odd and at least 3")
    t = p.table
    result = t
    for _ in range((arity - 3) // 2):
        # result has shape n^(j); new = p(x, y, result(rest))
        result = t[:, :, result] if result.ndim else result
    return OpTable(arity, p.size, result)
