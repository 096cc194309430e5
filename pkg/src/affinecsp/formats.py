"""Line-oriented text formats for structures, groups, coset instances and graphs."""

from __future__ import annotations

from pathlib import Path
from typing import Iterator

from .constructions import OrientedGraph
from .groups import CosetInstance, FiniteGroup, cyclic, direct_product, from_table, generating_set, semidirect_z9_z3, subgroup_closure, symmetric
from .isomorphism import ColoredStructure
from .structures import ContractError, RelStructure, Vocabulary


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for no, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].split()
        if body:
            yield no, body


def _check_names(names: list[str]) -> None:
    for n in names:
        if not n or any(ch.isspace() for ch in n) or "#" in n:
            raise ContractError(f"name {n!r} cannot be written")


# ---------------------------------------------------------------- structures


def format_structure(s: RelStructure | ColoredStructure) -> str:
    colored = isinstance(s, ColoredStructure)
    base = s.base if colored else s
    _check_names(list(base.universe))
    out = ["cspv1 structure", "elements " + " ".join(base.universe)]
    for name, ar in base.vocabulary:
        out.append(f"rel {name} {ar}")
        for t in sorted(base.relations[name]):
            out.append(" ".join(base.universe[x] for x in t))
        out.append("end")
    if colored:
        for x, c in zip(base.universe, s.color):
            out.append(f"color {x} {c}")
    return "\n".join(out) + "\n"


def parse_structure(text: str) -> RelStructure | ColoredStructure:
    it = _lines(text)
    try:
        no, head = next(it)
    except StopIteration:
        raise ParseError("empty file") from None
    if head != ["cspv1", "structure"]:
        raise ParseError("expected header 'cspv1 structure'", no)
    universe: list[str] | None = None
    symbols: list[tuple[str, int]] = []
    rels: dict[str, list[tuple[str, ...]]] = {}
    colors: dict[str, str] = {}
    current: tuple[str, int] | None = None
    for no, words in it:
        if current is not None:
            if words == ["end"]:
                current = None
                continue
            if len(words) != current[1]:
                raise ParseError(f"tuple of length {len(words)} in {current[0]}/{current[1]}", no)
            rels[current[0]].append(tuple(words))
            continue
        key = words[0]
        if key == "elements":
            if universe is not None:
                raise ParseError("duplicate elements line", no)
            universe = words[1:]
        elif key == "rel":
            if len(words) != 3 or not words[2].isdigit():
                raise ParseError("expected 'rel <name> <arity>'", no)
            current = (words[1], int(words[2]))
            if current[0] in rels:
                raise ParseError(f"duplicate relation {current[0]}", no)
            symbols.append(current)
            rels[current[0]] = []
        elif key == "color":
            if len(words) != 3:
                raise ParseError("expected 'color <element> <name>'", no)
            colors[words[1]] = words[2]
        else:
            raise ParseError(f"unexpected keyword {key!r}", no)
    if current is not None:
        raise ParseError(f"relation {current[0]} lacks 'end'")
    if universe is None:
        raise ParseError("missing elements line")
    try:
        s = RelStructure.from_names(symbols, universe, rels)
    except ContractError as exc:
        raise ParseError(str(exc)) from None
    if colors:
        missing = [u for u in universe if u not in colors]
        if missing or set(colors) - set(universe):
            raise ParseError("color lines must cover exactly the elements")
        return ColoredStructure(s, tuple(colors[u] for u in universe))
    return s


# ---------------------------------------------------------------- groups


def format_group(g: FiniteGroup) -> str:
    _check_names(list(g.elements))
    out = ["cspv1 group", "elements " + " ".join(g.elements), "table"]
    for row in g.table:
        out.append(" ".join(g.elements[int(x)] for x in row))
    out.append("end")
    return "\n".join(out) + "\n"


def parse_group(text: str) -> FiniteGroup:
    it = _lines(text)
    try:
        no, head = next(it)
    except StopIteration:
        raise ParseError("empty file") from None
    if head != ["cspv1", "group"]:
        raise ParseError("expected header 'cspv1 group'", no)
    elements = None
    rows: list[list[str]] = []
    in_table = done = False
    for no, words in it:
        if done:
            raise ParseError("content after end", no)
        if in_table:
            if words == ["end"]:
                done = True
            else:
                rows.append(words)
        elif words[0] == "elements":
            elements = words[1:]
        elif words == ["table"]:
            in_table = True
        else:
            raise ParseError(f"unexpected line {' '.join(words)!r}", no)
    if elements is None or not done:
        raise ParseError("need an elements line and a table ... end block")
    try:
        return from_table(elements, rows)
    except ContractError as exc:
        raise ParseError(str(exc)) from None


BUILTIN_GROUPS = {
    "z2": lambda: cyclic(2),
    "z3": lambda: cyclic(3),
    "z4": lambda: cyclic(4),
    "z2xz2": lambda: direct_product(cyclic(2), cyclic(2)),
    "z9z3": semidirect_z9_z3,
}


def builtin_group(name: str) -> FiniteGroup:
    name = name.lower()
    if name in BUILTIN_GROUPS:
        return BUILTIN_GROUPS[name]()
    if name.startswith("sym") and name[3:].isdigit():
        return symmetric(int(name[3:]))
    if name.startswith("z") and name[1:].isdigit():
        return cyclic(int(name[1:]))
    raise ContractError(f"unknown group {name!r}")


# ---------------------------------------------------------------- coset instances


def format_coset(inst: CosetInstance, group_ref: str) -> str:
    g = inst.group
    _check_names(list(inst.variables))
    out = ["cspv1 coset", f"group {group_ref}", "vars " + " ".join(inst.variables)]
    for c in inst.constraints:
        r = len(c.scope)
        out.append(f"constraint {r} rep " + " ".join(g.elements[x] for x in c.rep))
        out.append("scope " + " ".join(c.scope))
        for gen in generating_set(g, c.subgroup, r):
            out.append(" ".join(g.elements[x] for x in gen))
        out.append("end")
    return "\n".join(out) + "\n"


def parse_coset(text: str, base_dir: Path | str = ".") -> CosetInstance:
    """``group`` takes a path (relative to ``base_dir``) or ``builtin:<name>``."""
    it = _lines(text)
    try:
        no, head = next(it)
    except StopIteration:
        raise ParseError("empty file") from None
    if head != ["cspv1", "coset"]:
        raise ParseError("expected header 'cspv1 coset'", no)
    group: FiniteGroup | None = None
    variables: list[str] | None = None
    blocks: list[tuple[int, int, list[str], list[str], list[list[str]]]] = []
    current = None
    for no, words in it:
        if current is not None:
            if words == ["end"]:
                blocks.append(current)
                current = None
            elif words[0] == "scope":
                current[3][:] = words[1:]
            else:
                current[4].append(words)
            continue
        if words[0] == "group" and len(words) == 2:
            ref = words[1]
            try:
                if ref.startswith("builtin:"):
                    group = builtin_group(ref.split(":", 1)[1])
                else:
                    group = parse_group((Path(base_dir) / ref).read_text())
            except (OSError, ContractError) as exc:
                raise ParseError(f"cannot load group {ref}: {exc}", no) from None
        elif words[0] == "vars":
            variables = words[1:]
        elif words[0] == "constraint":
            if len(words) < 3 or words[2] != "rep" or not words[1].isdigit():
                raise ParseError("expected 'constraint <r> rep <tuple>'", no)
            current = (no, int(words[1]), words[3:], [], [])
        else:
            raise ParseError(f"unexpected keyword {words[0]!r}", no)
    if current is not None:
        raise ParseError("constraint block lacks 'end'")
    if group is None or variables is None:
        raise ParseError("need group and vars lines")
    inst = CosetInstance(group, tuple(variables))
    for no, r, rep, scope, gens in blocks:
        if len(rep) != r or len(scope) != r or any(len(x) != r for x in gens):
            raise ParseError("constraint tuples must have length r", no)
        try:
            idx = [tuple(group.index(x) for x in t) for t in gens]
            sub = subgroup_closure(group, idx, r)
            inst.add(scope, sub, tuple(group.index(x) for x in rep))
        except ContractError as exc:
            raise ParseError(str(exc), no) from None
    return inst


# ---------------------------------------------------------------- graphs


def format_graph(g: OrientedGraph) -> str:
    _check_names(list(g.vertices))
    return "".join(f"v {v}\n" for v in g.vertices) + "".join(f"a {u} {v}\n" for u, v in g.arcs)


def parse_graph(text: str) -> OrientedGraph:
    vertices, arcs = [], []
    for no, words in _lines(text):
        if words[0] == "v" and len(words) == 2:
            vertices.append(words[1])
        elif words[0] == "a" and len(words) == 3:
            arcs.append((words[1], words[2]))
        else:
            raise ParseError(f"unexpected line {' '.join(words)!r}", no)
    try:
        return OrientedGraph(tuple(vertices), tuple(arcs))
    except ContractError as exc:
        raise ParseError(str(exc)) from None


def read_any(path: Path | str):
    """Dispatch on the header line."""
    path = Path(path)
    text = path.read_text()
    first = next(_lines(text), (0, []))[1]
    if first == ["cspv1", "structure"]:
        return parse_structure(text)
    if first == ["cspv1", "group"]:
        return parse_group(text)
    if first == ["cspv1", "coset"]:
        return parse_coset(text, path.parent)
    if first and first[0] in ("v", "a"):
        return parse_graph(text)
    raise ParseError(f"{path}: unknown file kind")
