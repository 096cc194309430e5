"""Colored structures, CFI pairs, the isomorphism OR-construction and the Sym(d) encoding."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .groups import CosetInstance, FiniteGroup, ResourceError, symmetric
from .structures import ContractError, RelStructure, Vocabulary

MAX_CLASS = 8


@dataclass(frozen=True)
class ColoredStructure:
    base: RelStructure
    color: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "color", tuple(str(c) for c in self.color))
        if len(self.color) != len(self.base):
            raise ContractError("every element needs exactly one color")

    def classes(self) -> dict[str, list[int]]:
        """Color -> elements in universe order; colors in sorted order."""
        out: dict[str, list[int]] = {}
        for x, c in enumerate(self.color):
            out.setdefault(c, []).append(x)
        return dict(sorted(out.items()))

    def class_sizes(self) -> dict[str, int]:
        return {c: len(xs) for c, xs in self.classes().items()}

    def max_class(self) -> int:
        return max(self.class_sizes().values(), default=0)


ClassPerm = dict  # color -> tuple: position i of A's class goes to position perm[i] of B's class


def _group_name(g: FiniteGroup, x: int) -> str:
    return g.elements[x]


def cfi_pair(gamma: FiniteGroup, inst: CosetInstance) -> tuple[ColoredStructure, ColoredStructure]:
    """CFI structures of a coset instance and of its homogeneous version."""
    if inst.group is not gamma and inst.group != gamma:
        raise ContractError("instance uses a different group")
    rmax = max((len(c.scope) for c in inst.constraints), default=1)
    vocab = Vocabulary(tuple((f"E{i}", 2) for i in range(rmax)))

    def build(homogeneous: bool) -> ColoredStructure:
        names, colors = [], []
        index: dict[tuple, int] = {}
        for x in inst.variables:
            for g in range(len(gamma)):
                index[("v", x, g)] = len(names)
                names.append(f"{x}@{_group_name(gamma, g)}")
                colors.append(f"x:{x}")
        rels: dict[str, set] = {f"E{i}": set() for i in range(rmax)}
        for ci, c in enumerate(inst.constraints):
            members = c.subgroup if homogeneous else c.members(gamma)
            for t in sorted(members):
                node = len(names)
                names.append(f"C{ci}@" + ",".join(_group_name(gamma, g) for g in t))
                colors.append(f"c:{ci}")
                for i, (x, g) in enumerate(zip(c.scope, t)):
                    rels[f"E{i}"].add((index[("v", x, g)], node))
        return ColoredStructure(RelStructure(vocab, tuple(names), rels), tuple(colors))

    return build(False), build(True)


def _check_relations(a: RelStructure, b: RelStructure, mapping: Mapping[int, int], x: int, inc) -> bool:
    for name, t in inc[x]:
        if all(y in mapping for y in t):
            if tuple(mapping[y] for y in t) not in b.relations[name]:
                return False
    return True


def _incidence(s: RelStructure, elements: Iterable[int] | None = None) -> dict[int, list]:
    keep = None if elements is None else set(elements)
    inc: dict[int, list] = {x: [] for x in range(len(s))}
    for name, t in s.tuples():
        if keep is not None and not all(y in keep for y in t):
            continue
        for y in set(t):
            inc[y].append((name, t))
    return inc


def iso_oracle(a: ColoredStructure, b: ColoredStructure) -> tuple[bool, dict[int, int] | None]:
    """Color-preserving isomorphism by backtracking."""
    if a.base.vocabulary != b.base.vocabulary or a.class_sizes() != b.class_sizes():
        return False, None
    for name, _ in a.base.vocabulary:
        if len(a.base.relations[name]) != len(b.base.relations[name]):
            return False, None
    inc = _incidence(a.base)
    bclasses = b.classes()
    # visit elements so that each one touches earlier ones where possible
    order: list[int] = []
    seen: set[int] = set()
    for start in range(len(a.base)):
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        while stack:
            x = stack.pop(0)
            order.append(x)
            for _, t in inc[x]:
                for y in t:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def search(i: int) -> bool:
        if i == len(order):
            return True
        x = order[i]
        for y in bclasses[a.color[x]]:
            if y in used:
                continue
            mapping[x] = y
            if _check_relations(a.base, b.base, mapping, x, inc):
                used.add(y)
                if search(i + 1):
                    return True
                used.discard(y)
            del mapping[x]
        return False

    if search(0):
        return True, dict(mapping)
    return False, None


def is_isomorphism(a: ColoredStructure, b: ColoredStructure, mapping: Mapping[int, int]) -> bool:
    if sorted(mapping) != list(range(len(a.base))) or sorted(mapping.values()) != list(range(len(b.base))):
        return False
    if any(a.color[x] != b.color[y] for x, y in mapping.items()):
        return False
    for name, _ in a.base.vocabulary:
        image = {tuple(mapping[x] for x in t) for t in a.base.relations[name]}
        if image != set(b.base.relations[name]):
            return False
    return True


def disjoint_union(parts: Sequence[ColoredStructure], prefixes: Sequence[str]) -> ColoredStructure:
    vocab = parts[0].base.vocabulary
    names, colors = [], []
    rels: dict[str, set] = {n: set() for n in vocab.names}
    for p, pre in zip(parts, prefixes):
        if p.base.vocabulary != vocab:
            raise ContractError("parts must share a vocabulary")
        shift = len(names)
        names.extend(pre + u for u in p.base.universe)
        colors.extend(p.color)
        for n in vocab.names:
            rels[n] |= {tuple(x + shift for x in t) for t in p.base.relations[n]}
    return ColoredStructure(RelStructure(vocab, tuple(names), rels), tuple(colors))


def seq_encode(structures: Sequence[ColoredStructure]) -> ColoredStructure:
    """Entries side by side with entry-tagged colors, a full relation F<i> per entry
    and the ordered relation Q from every entry-i vertex to every entry-j vertex, i < j."""
    if not structures:
        raise ContractError("need at least one structure")
    j = len(structures)
    base_vocab = structures[0].base.vocabulary
    vocab = base_vocab.union(Vocabulary(tuple((f"F{i}", 2) for i in range(j)) + (("Q", 2),)))
    names, colors = [], []
    rels: dict[str, set] = {n: set() for n in vocab.names}
    spans = []
    for i, s in enumerate(structures):
        if s.base.vocabulary != base_vocab:
            raise ContractError("entries must share a vocabulary")
        shift = len(names)
        names.extend(f"e{i}.{u}" for u in s.base.universe)
        colors.extend(f"e{i}:{c}" for c in s.color)
        for n in base_vocab.names:
            rels[n] |= {tuple(x + shift for x in t) for t in s.base.relations[n]}
        span = range(shift, len(names))
        rels[f"F{i}"] = {(x, y) for x in span for y in span}
        spans.append(span)
    for i1, i2 in itertools.combinations(range(j), 2):
        rels["Q"] |= {(x, y) for x in spans[i1] for y in spans[i2]}
    return ColoredStructure(RelStructure(vocab, tuple(names), rels), tuple(colors))


def or_iso(pairs: Sequence[tuple[ColoredStructure, ColoredStructure]]) -> tuple[ColoredStructure, ColoredStructure]:
    """C^k: disjoint union of the sequences whose choice vector has parity k."""
    if not pairs:
        raise ContractError("need at least one pair")
    out = []
    for k in (0, 1):
        seqs, prefixes = [], []
        for bits in itertools.product((0, 1), repeat=len(pairs)):
            if sum(bits) % 2 == k:
                seqs.append(seq_encode([pairs[i][bit] for i, bit in enumerate(bits)]))
                prefixes.append("s" + "".join(map(str, bits)) + "|")
        out.append(disjoint_union(seqs, prefixes))
    return out[0], out[1]


def _guard(sizes: Iterable[int]) -> None:
    if any(s > MAX_CLASS for s in sizes):
        raise ResourceError(f"color classes larger than {MAX_CLASS} are not enumerated")


def _class_maps(a: ColoredStructure, b: ColoredStructure, colors: Sequence[str], first_only: bool) -> list[ClassPerm]:
    """Maps A[C] -> B[C] as per-class position permutations, lexicographic order."""
    ca, cb = a.classes(), b.classes()
    colors = sorted(colors)
    if any(len(ca.get(c, ())) != len(cb.get(c, ())) for c in colors):
        return []
    _guard(len(ca[c]) for c in colors)
    elems_a = [x for c in colors for x in ca[c]]
    elems_b = {y for c in colors for y in cb[c]}
    inc = _incidence(a.base, elems_a)
    bsub = {n: {t for t in b.base.relations[n] if all(y in elems_b for y in t)} for n in b.base.vocabulary.names}
    counts_a = {n: sum(1 for t in a.base.relations[n] if all(x in set(elems_a) for x in t)) for n in bsub}
    if any(counts_a[n] != len(bsub[n]) for n in bsub):
        return []
    slots = [(c, i, x) for c in colors for i, x in enumerate(ca[c])]
    mapping: dict[int, int] = {}
    used: set[int] = set()
    found: list[ClassPerm] = []
    pos: dict[str, list[int]] = {c: [0] * len(ca[c]) for c in colors}

    def search(s: int) -> bool:
        if s == len(slots):
            found.append({c: tuple(pos[c]) for c in colors})
            return first_only
        c, i, x = slots[s]
        for jpos, y in enumerate(cb[c]):
            if y in used:
                continue
            mapping[x] = y
            ok = all(
                tuple(mapping[z] for z in t) in bsub[name]
                for name, t in inc[x]
                if all(z in mapping for z in t)
            )
            if ok:
                used.add(y)
                pos[c][i] = jpos
                if search(s + 1):
                    return True
                used.discard(y)
            del mapping[x]
        return False

    search(0)
    return found


def class_automorphisms(a: ColoredStructure, colors: Iterable[str]) -> list[ClassPerm]:
    return _class_maps(a, a, list(colors), first_only=False)


def class_isomorphism(a: ColoredStructure, b: ColoredStructure, colors: Iterable[str]) -> ClassPerm | None:
    found = _class_maps(a, b, list(colors), first_only=True)
    return found[0] if found else None


def _perm_element(g: FiniteGroup, perm: Sequence[int], d: int) -> int:
    full = tuple(perm) + tuple(range(len(perm), d))
    return g.perm_index[full]


def iso_encode_shape(a: ColoredStructure, b: ColoredStructure, r: int) -> dict:
    """Degree, variable and constraint counts of the encoding, without building it."""
    colors = sorted(set(a.color) | set(b.color))
    d = max(a.max_class(), b.max_class(), 2)
    nsets = sum(1 for size in range(1, r + 1) for _ in itertools.combinations(colors, size))
    return {"d": d, "variables": len(colors), "constraints": len(colors) + nsets}


def iso_encode(a: ColoredStructure, b: ColoredStructure, r: int) -> CosetInstance:
    """Coset instance over Sym(d), solvable iff A and B are isomorphic (for r >= arity)."""
    if r < 1:
        raise ContractError("r must be positive")
    colors = sorted(set(a.color) | set(b.color))
    sizes_a, sizes_b = a.class_sizes(), b.class_sizes()
    d = max(a.max_class(), b.max_class(), 1)
    _guard([d])
    mismatch = sizes_a != sizes_b or a.base.vocabulary != b.base.vocabulary
    # degree at least 2 so that two distinct singleton cosets exist
    deg = max(d, 2)
    g = symmetric(deg)
    inst = CosetInstance(g, tuple(f"y_{c}" for c in colors))
    swap = _perm_element(g, (1, 0), deg)

    def contradiction(y: str) -> None:
        inst.add((y,), [(g.identity,)], (g.identity,))
        inst.add((y,), [(g.identity,)], (swap,))

    if mismatch:
        contradiction(inst.variables[0])
        return inst
    for c in colors:
        pad = [(_perm_element(g, p, deg),) for p in itertools.permutations(range(sizes_a[c]))]
        inst.add((f"y_{c}",), pad, (g.identity,))
    for size in range(1, r + 1):
        for cs in itertools.combinations(colors, size):
            scope = tuple(f"y_{c}" for c in cs)
            phi = class_isomorphism(a, b, cs)
            if phi is None:
                contradiction(scope[0])
                continue
            sub = [tuple(_perm_element(g, aut[c], deg) for c in cs) for aut in class_automorphisms(a, cs)]
            rep = tuple(_perm_element(g, phi[c], deg) for c in cs)
            inst.add(scope, sub, rep)
    return inst


def decode_iso_solution(
    a: ColoredStructure, b: ColoredStructure, g: FiniteGroup, values: Mapping[str, int]
) -> dict[int, int]:
    """Element map A -> B from a solution of iso_encode(A, B, r)."""
    ca, cb = a.classes(), b.classes()
    out = {}
    for c, xs in ca.items():
        perm = g.perms[values[f"y_{c}"]]
        for i, x in enumerate(xs):
            out[x] = cb[c][perm[i]]
    return out
