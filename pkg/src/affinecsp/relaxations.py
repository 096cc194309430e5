"""Builders for the width-k relaxation, the Z-affine system and IP^k."""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .linalg import LinSystem
from .structures import ContractError, RelStructure, partial_hom_table, subsets_upto

HomTable = dict[tuple[int, ...], list[tuple[int, ...]]]


@dataclass(frozen=True, order=True, slots=True)
class LHom:
    """x_{X,f}: X is a sorted element tuple, f given by parallel values."""

    domain: tuple[int, ...]
    values: tuple[int, ...]


@dataclass(frozen=True, order=True, slots=True)
class Lam:
    """lambda_{X,f} for an arbitrary map f: X -> A."""

    domain: tuple[int, ...]
    values: tuple[int, ...]


@dataclass(frozen=True, order=True, slots=True)
class Mu:
    """mu_{R,b,a} for b in R^B and a in R^A."""

    symbol: str
    btuple: tuple[int, ...]
    atuple: tuple[int, ...]


class KappaMap(dict):
    """Sorted element tuple X -> list of value tuples (the homs kept on X)."""

    def copy(self) -> "KappaMap":
        return KappaMap({x: list(v) for x, v in self.items()})


def all_homs(a: RelStructure, b: RelStructure, k: int) -> KappaMap:
    return KappaMap(partial_hom_table(a, b, k))


def _restrict(domain: tuple[int, ...], values: tuple[int, ...], sub: tuple[int, ...]) -> tuple[int, ...]:
    pos = {x: i for i, x in enumerate(domain)}
    return tuple(values[pos[x]] for x in sub)


def _proper_subsets(xs: tuple[int, ...]) -> Iterable[tuple[int, ...]]:
    for size in range(len(xs)):
        yield from itertools.combinations(xs, size)


def build_width_k(a: RelStructure, b: RelStructure, k: int, homs: HomTable | None = None) -> LinSystem:
    """Variables x_{X,f} for f in Hom(B[X],A); one-point marginals and x_{0,0} = 1."""
    if k < 1:
        raise ContractError("k must be positive")
    homs = homs if homs is not None else partial_hom_table(a, b, k)
    sysm = LinSystem()
    for xs in subsets_upto(len(b), k):
        for f in homs[xs]:
            sysm.add_variable(LHom(xs, f))
    for xs in subsets_upto(len(b), k):
        for i, _ in enumerate(xs):
            ys = xs[:i] + xs[i + 1 :]
            groups: dict[tuple[int, ...], list[tuple[int, ...]]] = defaultdict(list)
            for f in homs[xs]:
                groups[f[:i] + f[i + 1 :]].append(f)
            for g in homs[ys]:
                coeffs = {LHom(xs, f): 1 for f in groups.get(g, ())}
                coeffs[LHom(ys, g)] = -1
                sysm.add_equation(coeffs, 0)
    sysm.add_equation({LHom((), ()): 1}, 1)
    return sysm


def build_zaffine(
    a: RelStructure,
    b: RelStructure,
    k: int,
    kappa: Mapping[tuple[int, ...], list[tuple[int, ...]]],
    one_point: bool = False,
) -> LinSystem:
    """Z-affine system over kappa: sum over kappa(X) is 1, marginals for every Y < X.

    With ``one_point`` only Y = X minus one element is emitted; for a kappa
    closed under restriction this spans the same equations.
    """
    if k < 1:
        raise ContractError("k must be positive")
    sysm = LinSystem()
    sets = subsets_upto(len(b), k)
    for xs in sets:
        for f in kappa.get(xs, ()):
            sysm.add_variable(LHom(xs, f))
    for xs in sets:
        fs = kappa.get(xs, ())
        sysm.add_equation({LHom(xs, f): 1 for f in fs}, 1)
        subs = (
            [xs[:i] + xs[i + 1 :] for i in range(len(xs))] if one_point else list(_proper_subsets(xs))
        )
        for ys in subs:
            groups: dict[tuple[int, ...], list[tuple[int, ...]]] = defaultdict(list)
            for f in fs:
                groups[_restrict(xs, f, ys)].append(f)
            for g in kappa.get(ys, ()):
                coeffs = {LHom(xs, f): 1 for f in groups.get(g, ())}
                coeffs[LHom(ys, g)] = -1
                sysm.add_equation(coeffs, 0)
    return sysm


def build_ipk(a: RelStructure, b: RelStructure, k: int) -> LinSystem:
    """IP^k over all maps X -> A; callers pick the BLP or AIP reading."""
    if k < 1:
        raise ContractError("k must be positive")
    na = len(a)
    sysm = LinSystem()
    sets = subsets_upto(len(b), k)
    for xs in sets:
        for f in itertools.product(range(na), repeat=len(xs)):
            sysm.add_variable(Lam(xs, f))
    for name, bt in b.tuples():
        for at in sorted(a.relations[name]):
            sysm.add_variable(Mu(name, bt, at))
    for xs in sets:
        maps = list(itertools.product(range(na), repeat=len(xs)))
        sysm.add_equation({Lam(xs, f): 1 for f in maps}, 1)
        for ys in _proper_subsets(xs):
            groups: dict[tuple[int, ...], list[tuple[int, ...]]] = defaultdict(list)
            for f in maps:
                groups[_restrict(xs, f, ys)].append(f)
            for g, fs in groups.items():
                coeffs = {Lam(xs, f): 1 for f in fs}
                coeffs[Lam(ys, g)] = -1
                sysm.add_equation(coeffs, 0)
    for name, bt in b.tuples():
        ar = len(bt)
        rel = sorted(a.relations[name])
        for idx in itertools.product(range(ar), repeat=k):
            bsub = tuple(bt[i] for i in idx)
            xs = tuple(sorted(set(bsub)))
            groups = defaultdict(list)
            for at in rel:
                groups[tuple(at[i] for i in idx)].append(at)
            for aprime in itertools.product(range(na), repeat=k):
                f = _as_map(bsub, aprime)
                mus = groups.get(aprime, ())
                coeffs: dict = {Mu(name, bt, at): 1 for at in mus}
                if f is not None:
                    coeffs[Lam(xs, tuple(f[x] for x in xs))] = -1
                elif not mus:
                    continue
                sysm.add_equation(coeffs, 0)
    return sysm


def _as_map(elems: tuple[int, ...], vals: tuple[int, ...]) -> dict[int, int] | None:
    out: dict[int, int] = {}
    for x, v in zip(elems, vals):
        if out.setdefault(x, v) != v:
            return None
    return out


def blp_reading(system: LinSystem) -> LinSystem:
    out = system.with_pins({})
    out.nonneg = set(system.variables)
    return out


def translate_width_to_ipk(
    a: RelStructure,
    b: RelStructure,
    k: int,
    sol: Mapping[LHom, Fraction | int],
    homs: HomTable | None = None,
) -> dict:
    """Map a width-k solution to an IP^k solution (needs k >= arity of A)."""
    if k < a.arity():
        raise ContractError("k must be at least the template arity")
    homs = homs if homs is not None else partial_hom_table(a, b, k)
    out: dict = {}
    for xs in subsets_upto(len(b), k):
        hom_set = set(homs[xs])
        for f in itertools.product(range(len(a)), repeat=len(xs)):
            out[Lam(xs, f)] = sol.get(LHom(xs, f), 0) if f in hom_set else 0
    for name, bt in b.tuples():
        xs = tuple(sorted(set(bt)))
        for at in sorted(a.relations[name]):
            f = _as_map(bt, at)
            out[Mu(name, bt, at)] = 0 if f is None else sol.get(LHom(xs, tuple(f[x] for x in xs)), 0)
    return out


def check_subset_marginals(sol: Mapping, a: RelStructure, b: RelStructure, k: int) -> bool:
    """Every set sums to 1 and every Y < X is the marginal of X.

    Works for width-k / Z-affine solutions (``LHom`` keys) and for the
    lambda part of IP^k solutions (``Lam`` keys); absent keys count as 0.
    """
    by_set: dict[tuple[int, ...], dict[tuple[int, ...], Fraction]] = defaultdict(dict)
    for key, val in sol.items():
        if isinstance(key, (LHom, Lam)) and val:
            by_set[key.domain][key.values] = Fraction(val)
    for xs in subsets_upto(len(b), k):
        entries = by_set.get(xs, {})
        if sum(entries.values(), Fraction(0)) != 1:
            return False
        for ys in _proper_subsets(xs):
            marg: dict[tuple[int, ...], Fraction] = defaultdict(Fraction)
            for f, v in entries.items():
                marg[_restrict(xs, f, ys)] += v
            target = by_set.get(ys, {})
            for g in set(marg) | set(target):
                if marg.get(g, 0) != target.get(g, 0):
                    return False
    return True
