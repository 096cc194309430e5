"""Decision procedures returning Accept / Reject / Unknown with checkable certificates."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import networkx as nx

from .consistency import k_consistency
from .linalg import (
    LinSystem,
    check_solution,
    integer_lattice,
    lp_feasible,
    relative_interior_point,
    solve_integral,
)
from .relaxations import (
    KappaMap,
    LHom,
    Mu,
    blp_reading,
    build_ipk,
    build_zaffine,
    check_subset_marginals,
)
from .structures import (
    ContractError,
    PartialHom,
    RelStructure,
    Vocabulary,
    induced_substructure,
    is_homomorphism,
    oracle_decide,
    partial_hom_table,
)

ACCEPT, REJECT, UNKNOWN = "Accept", "Reject", "Unknown"


class BudgetExceeded(Exception):
    pass


class Budget:
    """Counts solved systems; raises once more than ``limit`` are requested."""

    def __init__(self, limit: int | None = None):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1) -> None:
        if self.limit is not None and self.used + n > self.limit:
            raise BudgetExceeded
        self.used += n


@dataclass
class Verdict:
    answer: str
    certificate: Any = None
    certificate_kind: str = "none"
    certificate_ok: bool | None = None
    systems: int = 0
    rounds: int = 0
    millis: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.answer == ACCEPT


def _timed(fn: Callable[..., Verdict]) -> Callable[..., Verdict]:
    def run(*args, budget: int | Budget | None = None, **kwargs) -> Verdict:
        b = budget if isinstance(budget, Budget) else Budget(budget)
        start = time.perf_counter()
        try:
            v = fn(*args, budget=b, **kwargs)
        except BudgetExceeded:
            v = Verdict(UNKNOWN, certificate_kind="budget")
        v.systems = b.used
        v.millis = (time.perf_counter() - start) * 1000
        return v

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    run.__wrapped__ = fn
    return run


def _empty_set_verdict(kappa: Mapping, rounds: int = 0) -> Verdict | None:
    for xs, fs in kappa.items():
        if not fs:
            return Verdict(REJECT, xs, "empty-set", True, rounds=rounds)
    return None


def _accept_solution(system: LinSystem, sol: dict, a: RelStructure, b: RelStructure, k: int) -> Verdict:
    ok = check_solution(system, sol) and check_subset_marginals(sol, a, b, k)
    return Verdict(ACCEPT, sol, "assignment", ok)


@_timed
def oracle(a: RelStructure, b: RelStructure, budget: Budget) -> Verdict:
    budget.spend()
    found, witness = oracle_decide(a, b)
    if not found:
        return Verdict(REJECT, None, "none")
    hom = PartialHom(tuple(range(len(b))), witness)
    return Verdict(ACCEPT, hom, "hom", is_homomorphism(hom, b, a))


@_timed
def kcons_decide(a: RelStructure, b: RelStructure, k: int, budget: Budget) -> Verdict:
    kappa = k_consistency(a, b, k)
    return _empty_set_verdict(kappa) or Verdict(ACCEPT, kappa, "kappa", True)


@_timed
def aip_decide(a: RelStructure, b: RelStructure, k: int, budget: Budget) -> Verdict:
    """Integer solvability of IP^k without sign constraints."""
    system = build_ipk(a, b, k)
    budget.spend()
    sol = solve_integral(system)
    if sol is None:
        return Verdict(REJECT, None, "infeasible")
    return _accept_solution(system, sol, a, b, k)


@_timed
def zaffine_decide(a: RelStructure, b: RelStructure, k: int, budget: Budget) -> Verdict:
    kappa = k_consistency(a, b, k)
    empty = _empty_set_verdict(kappa)
    if empty:
        return empty
    system = build_zaffine(a, b, k, kappa)
    budget.spend()
    sol = solve_integral(system)
    if sol is None:
        return Verdict(REJECT, None, "infeasible")
    return _accept_solution(system, sol, a, b, k)


def _bak(a: RelStructure, b: RelStructure, k: int, budget: Budget, pins: Mapping | None = None) -> Verdict:
    ipk = build_ipk(a, b, k)
    if pins:
        ipk = ipk.with_pins(pins)
    budget.spend()
    phi = relative_interior_point(blp_reading(ipk))
    if phi is None:
        return Verdict(REJECT, None, "infeasible")
    zeros = {key: 0 for key, val in phi.items() if val == 0}
    aip = ipk.with_pins(zeros)
    budget.spend()
    sol = solve_integral(aip)
    if sol is None:
        return Verdict(REJECT, None, "infeasible", extra={"blp_support": len(phi) - len(zeros)})
    v = _accept_solution(aip, sol, a, b, k)
    v.extra["blp_support"] = len(phi) - len(zeros)
    return v


@_timed
def bak_decide(a: RelStructure, b: RelStructure, k: int, budget: Budget) -> Verdict:
    """BA^k: relative interior point of BLP^k, then AIP^k with its zeros pinned."""
    return _bak(a, b, k, budget)


def blpaip_decide(a: RelStructure, b: RelStructure, budget: int | Budget | None = None) -> Verdict:
    return bak_decide(a, b, 1, budget=budget)


def _initial_s_sets(a: RelStructure, b: RelStructure) -> dict[tuple[str, tuple[int, ...]], list[tuple[int, ...]]]:
    return {(name, bt): sorted(a.relations[name]) for name, bt in b.tuples()}


def _out_of_s_pins(a: RelStructure, s_sets: Mapping) -> dict:
    pins = {}
    for (name, bt), kept in s_sets.items():
        keep = set(kept)
        for at in a.relations[name]:
            if at not in keep:
                pins[Mu(name, bt, at)] = 0
    return pins


def _prune_s_sets(a: RelStructure, b: RelStructure, budget: Budget, order=None) -> tuple[dict, int]:
    """Steps 1 and 2: shrink S-sets by BLP^1 feasibility with one tuple image fixed."""
    s_sets = _initial_s_sets(a, b)
    blp = blp_reading(build_ipk(a, b, 1))
    rounds = 0
    changed = True
    while changed:
        changed = False
        rounds += 1
        keys = list(s_sets) if order is None else order(list(s_sets))
        for key in keys:
            name, bt = key
            for at in list(s_sets[key]):
                pins = _out_of_s_pins(a, s_sets)
                pins[Mu(name, bt, at)] = 1
                budget.spend()
                if lp_feasible(blp.with_pins(pins)) is None:
                    s_sets[key].remove(at)
                    changed = True
    return s_sets, rounds


@_timed
def clap_decide(a: RelStructure, b: RelStructure, budget: Budget, order=None) -> Verdict:
    s_sets, rounds = _prune_s_sets(a, b, budget, order)
    for key, kept in s_sets.items():
        if not kept:
            return Verdict(REJECT, key, "empty-s", True, rounds=rounds, extra={"s_sets": s_sets})
    zeros = _out_of_s_pins(a, s_sets)
    for (name, bt), kept in s_sets.items():
        for at in kept:
            pins = dict(zeros)
            pins[Mu(name, bt, at)] = 1
            v = _bak(a, b, 1, budget, pins)
            if v.accepted:
                v.rounds = rounds
                v.extra.update(fixed=(name, bt, at), s_sets=s_sets)
                return v
    return Verdict(REJECT, None, "infeasible", rounds=rounds, extra={"s_sets": s_sets})


@_timed
def clap_prime_decide(a: RelStructure, b: RelStructure, budget: Budget, order=None) -> Verdict:
    s_sets, rounds = _prune_s_sets(a, b, budget, order)
    for key, kept in s_sets.items():
        if not kept:
            return Verdict(REJECT, key, "empty-s", True, rounds=rounds, extra={"s_sets": s_sets})
    v = _bak(a, b, 1, budget, _out_of_s_pins(a, s_sets))
    v.rounds = rounds
    v.extra["s_sets"] = s_sets
    return v


def pad_instance(a: RelStructure, b: RelStructure) -> RelStructure:
    """B plus a disjoint tuple of fresh distinct elements in the first symbol nonempty in A."""
    for name, ar in a.vocabulary:
        if a.relations[name]:
            break
    else:
        raise ContractError("every relation of the template is empty")
    n = len(b)
    fresh = []
    i = 0
    while len(fresh) < ar:
        cand = f"pad{i}"
        if cand not in b.universe:
            fresh.append(cand)
        i += 1
    rels = dict(b.relations)
    rels[name] = rels[name] | {tuple(range(n, n + ar))}
    return RelStructure(b.vocabulary, b.universe + tuple(fresh), rels)


@_timed
def cohomological_decide(
    a: RelStructure, b: RelStructure, k: int, budget: Budget, eager: bool = False
) -> Verdict:
    """Alternate k-consistency with removal of every (X, f) that no integer solution of
    the Z-affine system supports with z_{X,f} = 1 and z_{X,f'} = 0 for f' != f.

    Removals are collected per round unless ``eager``, which restarts the round after
    the first failure.
    """
    h: KappaMap | None = KappaMap(partial_hom_table(a, b, k))
    rounds = 0
    while True:
        rounds += 1
        h = k_consistency(a, b, k, seed=h)
        empty = _empty_set_verdict(h, rounds)
        if empty:
            return empty
        system = build_zaffine(a, b, k, h)
        budget.spend()
        lattice = integer_lattice(system)
        if lattice is None:
            # no integer solution at all: every pinned system fails, so all of H empties
            return Verdict(REJECT, (), "empty-set", True, rounds=rounds)
        removed: dict[tuple[int, ...], set] = {}
        for xs, fs in h.items():
            for f in fs:
                targets = {LHom(xs, g): int(g == f) for g in fs}
                budget.spend()
                if not lattice.attainable(targets):
                    removed.setdefault(xs, set()).add(f)
                    if eager:
                        break
            if xs in removed and len(removed[xs]) == len(fs):
                return Verdict(REJECT, xs, "empty-set", True, rounds=rounds)
            if eager and xs in removed:
                break
        if not removed:
            sol = {key: lattice.point[i] for i, key in enumerate(system.variables)}
            v = _accept_solution(system, sol, a, b, k)
            v.rounds = rounds
            return v
        h = KappaMap({xs: [f for f in fs if f not in removed.get(xs, ())] for xs, fs in h.items()})


def split_or_vocabulary(a1: RelStructure, a2: RelStructure) -> tuple[set[str], set[str]]:
    return set(a1.vocabulary.names), set(a2.vocabulary.names)


def _reduct(s: RelStructure, names: set[str]) -> RelStructure:
    vocab = Vocabulary(tuple((n, ar) for n, ar in s.vocabulary if n in names))
    return RelStructure(vocab, s.universe, {n: s.relations[n] for n in vocab.names})


@_timed
def solve_ort_exact(a1: RelStructure, a2: RelStructure, b: RelStructure, budget: Budget) -> Verdict:
    """Exact decision for ORT(A1, A2) by S-components; the certificate is a hom into ORT(A1, A2)."""
    taus = split_or_vocabulary(a1, a2)
    expected = taus[0] | taus[1] | {"S"}
    if set(b.vocabulary.names) != expected:
        raise ContractError("instance vocabulary must be tau1, tau2 and S")
    side: dict[int, set[int]] = {}
    for i in range(2):
        for name in taus[i]:
            for t in b.relations[name]:
                for x in t:
                    side.setdefault(x, set()).add(i)
    for u, v in b.relations["S"]:
        side.setdefault(u, set()).add(0)
        side.setdefault(v, set()).add(1)
    if any(len(s) > 1 for s in side.values()):
        return Verdict(REJECT, None, "overlap")
    label = {x: next(iter(s)) for x, s in side.items()}
    # contract tau_i-components, keep S as edges
    g = nx.Graph()
    g.add_nodes_from(label)
    for i in range(2):
        for name in taus[i]:
            for t in b.relations[name]:
                nx.add_path(g, t)
    g.add_edges_from(b.relations["S"])
    n1, n2 = len(a1), len(a2)
    c = (n1 + n2, n1 + n2 + 1)
    values = [c[0]] * len(b)
    for comp in sorted(nx.connected_components(g), key=min):
        parts = [sorted(x for x in comp if label[x] == i) for i in range(2)]
        for i, (ai, shift) in enumerate(((a1, 0), (a2, n1))):
            sub = _reduct(induced_substructure(b, parts[i]), taus[i])
            budget.spend()
            found, witness = oracle_decide(ai, sub)
            if found:
                for x, w in zip(parts[i], witness):
                    values[x] = w + shift
                for x in parts[1 - i]:
                    values[x] = c[1 - i]
                break
        else:
            return Verdict(REJECT, sorted(comp), "component")
    from .constructions import ort

    hom = PartialHom(tuple(range(len(b))), tuple(values))
    return Verdict(ACCEPT, hom, "hom", is_homomorphism(hom, b, ort(a1, a2)))


ALGORITHMS = (
    "oracle",
    "kcons",
    "aip",
    "zaffine",
    "blpaip",
    "bak",
    "clap",
    "clapprime",
    "cohomology",
    "ort-exact",
)
NEEDS_WIDTH = {"kcons", "zaffine", "bak", "cohomology", "aip"}


def run_algorithm(
    name: str,
    a: RelStructure,
    b: RelStructure,
    k: int | None = None,
    budget: int | None = None,
    ort_parts: tuple[RelStructure, RelStructure] | None = None,
    eager: bool = False,
) -> Verdict:
    if name in NEEDS_WIDTH and k is None:
        raise ContractError(f"algorithm {name} needs a width")
    if name == "oracle":
        return oracle(a, b, budget=budget)
    if name == "kcons":
        return kcons_decide(a, b, k, budget=budget)
    if name == "aip":
        return aip_decide(a, b, k, budget=budget)
    if name == "zaffine":
        return zaffine_decide(a, b, k, budget=budget)
    if name == "blpaip":
        return bak_decide(a, b, 1, budget=budget)
    if name == "bak":
        return bak_decide(a, b, k, budget=budget)
    if name == "clap":
        return clap_decide(a, b, budget=budget)
    if name == "clapprime":
        return clap_prime_decide(a, b, budget=budget)
    if name == "cohomology":
        return cohomological_decide(a, b, k, budget=budget, eager=eager)
    if name == "ort-exact":
        if ort_parts is None:
            raise ContractError("ort-exact needs the two component templates")
        return solve_ort_exact(ort_parts[0], ort_parts[1], b, budget=budget)
    raise ContractError(f"unknown algorithm {name!r}")
