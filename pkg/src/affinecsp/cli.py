"""Command-line front end: ``affinecsp gen|solve|sweep``.

Exit codes: 0 ok, 2 usage, 3 budget exhausted (answer Unknown), 4 parse error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import random
import sys
from pathlib import Path

from . import constructions as cons
from .consistency import k_consistency
from .formats import (
    ParseError,
    builtin_group,
    format_coset,
    format_graph,
    format_group,
    format_structure,
    parse_coset,
    parse_graph,
    parse_structure,
    read_any,
)
from .groups import CosetInstance, FiniteGroup, ResourceError, coset_to_structures, full_coset_template
from .isomorphism import ColoredStructure, cfi_pair, iso_encode, iso_encode_shape, or_iso
from .relaxations import blp_reading, build_ipk, build_width_k, build_zaffine
from .solvers import ALGORITHMS, NEEDS_WIDTH, UNKNOWN, Verdict, pad_instance, run_algorithm
from .structures import ContractError, RelStructure

log = logging.getLogger("affinecsp")

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_PARSE = 0, 2, 3, 4

TSV_HEADER = ("algorithm", "k", "instance", "answer", "certificate-ok", "systems-solved", "millis")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- argument helpers


def load_graph(spec: str) -> cons.OrientedGraph:
    """A named graph, ``random:<n>:<seed>``, or a graph file."""
    if spec in cons.NAMED_GRAPHS:
        return cons.NAMED_GRAPHS[spec]()
    if spec.startswith("random:"):
        try:
            _, n, seed = spec.split(":")
            return cons.random_3regular_2connected(int(n), int(seed))
        except ValueError:
            raise UsageError(f"bad random graph spec {spec!r}; use random:<n>:<seed>") from None
    path = Path(spec)
    if not path.exists():
        raise UsageError(f"unknown graph {spec!r}")
    return parse_graph(path.read_text())


def load_group(spec: str) -> FiniteGroup:
    path = Path(spec)
    if path.exists():
        from .formats import parse_group

        return parse_group(path.read_text())
    try:
        return builtin_group(spec)
    except ContractError as exc:
        raise UsageError(str(exc)) from None


def group_ref(spec: str) -> str:
    return spec if Path(spec).exists() else f"builtin:{spec}"


def load_template(spec: str) -> RelStructure:
    """A ``.csp`` file or ``t<group>r<arity>`` for the full coset template."""
    path = Path(spec)
    if path.exists():
        s = parse_structure(path.read_text())
        return s.base if isinstance(s, ColoredStructure) else s
    if spec.startswith("t") and "r" in spec[1:]:
        gname, _, r = spec[1:].rpartition("r")
        if r.isdigit():
            return full_coset_template(load_group(gname), int(r))
    raise UsageError(f"unknown template {spec!r}")


def parse_charges(gamma: FiniteGroup, h: cons.OrientedGraph, items: list[str] | None) -> dict[str, int]:
    if not items:
        return cons.unit_charge(h, gamma)
    charge = {v: gamma.identity for v in h.vertices}
    for item in items:
        v, sep, g = item.partition("=")
        if not sep or v not in charge:
            raise UsageError(f"bad charge {item!r}; use <vertex>=<element>")
        try:
            charge[v] = gamma.index(g)
        except ContractError as exc:
            raise UsageError(str(exc)) from None
    return charge


def parse_dimacs(text: str) -> list[tuple[int, ...]]:
    clauses, cur = [], []
    for no, line in enumerate(text.splitlines(), 1):
        words = line.split()
        if not words or words[0] in ("c", "p", "%"):
            continue
        for w in words:
            try:
                lit = int(w)
            except ValueError:
                raise ParseError(f"bad literal {w!r}", no) from None
            if lit == 0:
                clauses.append(tuple(cur))
                cur = []
            else:
                cur.append(lit)
    if cur:
        clauses.append(tuple(cur))
    return clauses


def emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def emit_dir(files: dict[str, str], out_dir: str) -> None:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (d / name).write_text(text)


def load_colored(path: str) -> ColoredStructure:
    s = parse_structure(Path(path).read_text())
    if not isinstance(s, ColoredStructure):
        s = ColoredStructure(s, ("c",) * len(s))
    return s


# ---------------------------------------------------------------- gen


def gen_tseitin(args) -> None:
    h = load_graph(args.graph)
    gamma = load_group(args.group)
    inst = cons.tseitin_instance(h, gamma, parse_charges(gamma, h, args.charge))
    emit(format_coset(inst, group_ref(args.group)), args.out)


def gen_or_instance(args) -> None:
    h = load_graph(args.graph)
    groups = (load_group(args.left_group), load_group(args.right_group))
    charges = (
        parse_charges(groups[0], h, args.left_charge),
        parse_charges(groups[1], h, args.right_charge),
    )
    t = cons.tseitin_or(h, groups, charges, mode=args.mode)
    (a1, _), (a2, _) = t.parts
    emit_dir(
        {
            "template.csp": format_structure(t.template),
            "instance.csp": format_structure(t.instance),
            "left.csp": format_structure(a1),
            "right.csp": format_structure(a2),
        },
        args.out_dir,
    )


def gen_or_template(args) -> None:
    a1 = cons.tag_structure(load_template(args.left), "1:")
    a2 = cons.tag_structure(load_template(args.right), "2:")
    t = cons.ort(a1, a2) if args.mode == "tractable" else cons.ornpc(a1, a2)
    emit(format_structure(t), args.out)


def gen_cfi(args) -> None:
    h = load_graph(args.graph)
    gamma = load_group(args.group)
    a, b = cfi_pair(gamma, cons.tseitin_instance(h, gamma, parse_charges(gamma, h, args.charge)))
    emit_dir({"a.csp": format_structure(a), "b.csp": format_structure(b)}, args.out_dir)


def gen_or_iso(args) -> None:
    pairs = [(load_colored(x), load_colored(y)) for x, y in args.pair]
    a, b = or_iso(pairs)
    emit_dir({"a.csp": format_structure(a), "b.csp": format_structure(b)}, args.out_dir)


def gen_iso_encode(args) -> None:
    a, b = load_colored(args.a), load_colored(args.b)
    if args.dry_run:
        shape = iso_encode_shape(a, b, args.r)
        emit("".join(f"{k}\t{v}\n" for k, v in shape.items()), args.out)
        return
    inst = iso_encode(a, b, args.r)
    files = {"instance.coset": format_coset(inst, "group.grp"), "group.grp": format_group(inst.group)}
    emit_dir(files, args.out_dir)


def gen_sat_reduction(args) -> None:
    if args.cnf:
        cnf = parse_dimacs(Path(args.cnf).read_text())
    else:
        cnf = cons.random_monotone_cnf(args.vars, args.clauses, random.Random(args.seed))
    emit_dir(
        {
            "template.csp": format_structure(cons.sat_template()),
            "instance.csp": format_structure(cons.monotone3sat_to_ornpc(cnf)),
        },
        args.out_dir,
    )


def gen_minimal_no(args) -> None:
    emit(format_coset(cons.minimal_no_instance(load_group(args.group)), group_ref(args.group)), args.out)


def gen_random_graph(args) -> None:
    emit(format_graph(cons.random_3regular_2connected(args.n, args.seed)), args.out)


# ---------------------------------------------------------------- solve


def load_pair(template: str | None, instance: str) -> tuple[RelStructure, RelStructure]:
    obj = read_any(instance)
    if isinstance(obj, CosetInstance):
        a, b = coset_to_structures(obj)
        return (load_template(template) if template else a), b
    if isinstance(obj, ColoredStructure):
        obj = obj.base
    if not isinstance(obj, RelStructure):
        raise UsageError(f"{instance} is not an instance file")
    if template is None:
        raise UsageError("--template is required unless the instance is a coset file")
    return load_template(template), obj


def debug_system(name: str, a: RelStructure, b: RelStructure, k: int | None):
    if name == "zaffine" or name == "cohomology":
        return build_zaffine(a, b, k, k_consistency(a, b, k))
    if name in ("aip",):
        return build_ipk(a, b, k)
    if name in ("bak", "blpaip", "clap", "clapprime"):
        return blp_reading(build_ipk(a, b, k or 1))
    return build_width_k(a, b, k or 1)


def verdict_row(name: str, k: int | None, instance: str, v: Verdict) -> list[str]:
    ok = "-" if v.certificate_ok is None else str(v.certificate_ok).lower()
    return [name, "-" if k is None else str(k), instance, v.answer, ok, str(v.systems), f"{v.millis:.0f}"]


def cmd_solve(args) -> int:
    if args.algorithm in NEEDS_WIDTH and args.k is None:
        raise UsageError(f"algorithm {args.algorithm} needs -k")
    a, b = load_pair(args.template, args.instance)
    k = args.k if args.algorithm in NEEDS_WIDTH else None
    if args.algorithm == "blpaip":
        k = 1
    if args.dump_system:
        Path(args.dump_system).write_text(debug_system(args.algorithm, a, b, k).dump())
    parts = None
    if args.algorithm == "ort-exact":
        if not (args.left and args.right):
            raise UsageError("ort-exact needs --left and --right")
        parts = (load_template(args.left), load_template(args.right))
    if args.pad:
        b = pad_instance(a, b)
    v = run_algorithm(args.algorithm, a, b, k, budget=args.budget, ort_parts=parts)
    if args.header:
        print("\t".join(TSV_HEADER))
    print("\t".join(verdict_row(args.algorithm, k, args.instance, v)))
    return EXIT_BUDGET if v.answer == UNKNOWN else EXIT_OK


# ---------------------------------------------------------------- sweep

SWEEP_HEADER = ("n", "graph", "algorithm", "k", "answer", "certificate-ok", "systems-solved", "millis")


def parse_algo(item: str) -> tuple[str, int | None]:
    name, _, k = item.partition(":")
    if name not in ALGORITHMS or name == "ort-exact":
        raise UsageError(f"unknown sweep algorithm {name!r}")
    if k:
        return name, int(k)
    if name in NEEDS_WIDTH:
        raise UsageError(f"algorithm {name} needs a width, e.g. {name}:2")
    return name, (1 if name == "blpaip" else None)


def sweep_graph(n: int, seed: int) -> cons.OrientedGraph:
    return cons.k4() if n == 4 else cons.random_3regular_2connected(n, seed)


def sweep_instance(n: int, seed: int, groups: tuple[str, str], mode: str) -> cons.TseitinOr:
    h = sweep_graph(n, seed)
    g1, g2 = load_group(groups[0]), load_group(groups[1])
    return cons.tseitin_or(h, (g1, g2), (cons.unit_charge(h, g1), cons.unit_charge(h, g2)), mode=mode)


def sweep_cell(n: int, seed: int, groups: tuple[str, str], mode: str, name: str, k: int | None, budget: int | None) -> list[str]:
    t = sweep_instance(n, seed, groups, mode)
    b = pad_instance(t.template, t.instance) if name == "clap" else t.instance
    v = run_algorithm(name, t.template, b, k, budget=budget)
    graph = "k4" if n == 4 else f"random:{n}:{seed}"
    row = verdict_row(name, k, graph, v)
    del row[2]
    return [str(n), graph] + row


def run_sweep(sizes, algos, seed=1, groups=("z2", "z3"), mode="tractable", budget=None, jobs=1, stop_first=False):
    """Rows per (size, algorithm), ordered by size then algorithm list order."""
    rows: list[list[str]] = []
    for n in sorted(sizes):
        cells = [(n, seed, tuple(groups), mode, name, k, budget) for name, k in algos]
        if jobs > 1:
            with concurrent.futures.ProcessPoolExecutor(jobs) as pool:
                got = list(pool.map(sweep_cell, *zip(*cells)))
        else:
            got = [sweep_cell(*c) for c in cells]
        rows.extend(got)
        if stop_first and all(
            r[4] == ("Reject" if r[2] in ("oracle", "ort-exact") else "Accept") for r in got
        ):
            break
    return rows


def cmd_sweep(args) -> int:
    algos = [parse_algo(a) for a in args.algorithms]
    rows = run_sweep(args.sizes, algos, args.seed, tuple(args.groups), args.mode, args.budget, args.jobs, args.stop_first)
    text = "\t".join(SWEEP_HEADER) + "\n" + "".join("\t".join(r) + "\n" for r in rows)
    emit(text, args.out)
    return EXIT_BUDGET if any(r[4] == UNKNOWN for r in rows) else EXIT_OK


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="affinecsp", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate fixtures")
    gsub = gen.add_subparsers(dest="what", required=True, parser_class=_Parser)

    g = gsub.add_parser("tseitin")
    g.add_argument("--graph", required=True)
    g.add_argument("--group", required=True)
    g.add_argument("--charge", action="append", help="vertex=element; unit charge on the first vertex if omitted")
    g.add_argument("--out")
    g.set_defaults(fn=gen_tseitin)

    g = gsub.add_parser("or-instance")
    g.add_argument("--graph", required=True)
    g.add_argument("--left-group", default="z2")
    g.add_argument("--right-group", default="z3")
    g.add_argument("--left-charge", action="append")
    g.add_argument("--right-charge", action="append")
    g.add_argument("--mode", choices=("tractable", "npc"), default="tractable")
    g.add_argument("--out-dir", required=True)
    g.set_defaults(fn=gen_or_instance)

    g = gsub.add_parser("or-template")
    g.add_argument("--left", required=True, help="template file or t<group>r<arity>")
    g.add_argument("--right", required=True)
    g.add_argument("--mode", choices=("tractable", "npc"), default="tractable")
    g.add_argument("--out")
    g.set_defaults(fn=gen_or_template)

    g = gsub.add_parser("cfi")
    g.add_argument("--graph", required=True)
    g.add_argument("--group", required=True)
    g.add_argument("--charge", action="append")
    g.add_argument("--out-dir", required=True)
    g.set_defaults(fn=gen_cfi)

    g = gsub.add_parser("or-iso")
    g.add_argument("--pair", nargs=2, action="append", required=True, metavar=("A", "B"))
    g.add_argument("--out-dir", required=True)
    g.set_defaults(fn=gen_or_iso)

    g = gsub.add_parser("iso-encode")
    g.add_argument("--a", required=True)
    g.add_argument("--b", required=True)
    g.add_argument("--r", type=int, default=2)
    g.add_argument("--dry-run", action="store_true", help="print group degree and constraint counts only")
    g.add_argument("--out-dir")
    g.add_argument("--out")
    g.set_defaults(fn=gen_iso_encode)

    g = gsub.add_parser("sat-reduction")
    g.add_argument("--cnf", help="DIMACS file of monotone clauses")
    g.add_argument("--vars", type=int, default=5)
    g.add_argument("--clauses", type=int, default=8)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--out-dir", required=True)
    g.set_defaults(fn=gen_sat_reduction)

    g = gsub.add_parser("minimal-no")
    g.add_argument("--group", default="z2")
    g.add_argument("--out")
    g.set_defaults(fn=gen_minimal_no)

    g = gsub.add_parser("random-graph")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=1)
    g.add_argument("--out")
    g.set_defaults(fn=gen_random_graph)

    s = sub.add_parser("solve", help="run one algorithm and print a TSV row")
    s.add_argument("--template")
    s.add_argument("--instance", required=True)
    s.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    s.add_argument("-k", type=int)
    s.add_argument("--budget", type=int, help="maximum number of systems solved")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--left", help="left component template for ort-exact")
    s.add_argument("--right", help="right component template for ort-exact")
    s.add_argument("--pad", action="store_true", help="add a fresh disjoint tuple to the instance first")
    s.add_argument("--dump-system", metavar="FILE", help="write the relaxation system as text")
    s.add_argument("--header", action="store_true")
    s.set_defaults(fn=cmd_solve)

    w = sub.add_parser("sweep", help="solve OR instances over growing 3-regular graphs")
    w.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8, 10, 12, 14])
    w.add_argument("--algorithms", nargs="+", default=["oracle", "zaffine:2", "blpaip", "bak:2", "clap", "clapprime"])
    w.add_argument("--groups", nargs=2, default=["z2", "z3"])
    w.add_argument("--mode", choices=("tractable", "npc"), default="tractable")
    w.add_argument("--seed", type=int, default=1)
    w.add_argument("--budget", type=int)
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--stop-first", action="store_true", help="stop after the first size where every prediction holds")
    w.add_argument("--out")
    w.set_defaults(fn=cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        rc = args.fn(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (UsageError, ContractError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    raise SystemExit(main())
