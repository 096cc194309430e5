"""Exact rational and integer linear algebra.

Everything here is exact: rationals are ``fractions.Fraction`` at the API and
``gmpy2.mpq`` inside the simplex, integers are Python ints.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

import gmpy2

from .structures import ContractError

Key = Hashable
Assignment = dict


@dataclass
class LinSystem:
    """Named-variable linear system with optional nonnegativity and pins."""

    variables: list[Key] = field(default_factory=list)
    equations: list[tuple[dict[Key, Fraction | int], Fraction | int]] = field(default_factory=list)
    nonneg: set[Key] = field(default_factory=set)
    pins: dict[Key, Fraction | int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.variables = list(self.variables)
        self._index = {v: i for i, v in enumerate(self.variables)}
        if len(self._index) != len(self.variables):
            raise ContractError("duplicate variable key")
        for coeffs, _ in self.equations:
            self._check_keys(coeffs)
        self._check_keys(self.nonneg)
        self._check_keys(self.pins)

    def _check_keys(self, keys: Iterable[Key]) -> None:
        for k in keys:
            if k not in self._index:
                raise ContractError(f"undeclared variable {k!r}")

    def add_variable(self, key: Key, nonneg: bool = False) -> None:
        if key in self._index:
            raise ContractError(f"duplicate variable key {key!r}")
        self._index[key] = len(self.variables)
        self.variables.append(key)
        if nonneg:
            self.nonneg.add(key)

    def add_equation(self, coeffs: Mapping[Key, Fraction | int], rhs: Fraction | int) -> None:
        clean = {k: v for k, v in coeffs.items() if v}
        self._check_keys(clean)
        self.equations.append((clean, rhs))

    def has(self, key: Key) -> bool:
        return key in self._index

    def index(self, key: Key) -> int:
        return self._index[key]

    def with_pins(self, extra: Mapping[Key, Fraction | int]) -> "LinSystem":
        """Shallow copy sharing the equation list, with more pins."""
        pins = dict(self.pins)
        for k, v in extra.items():
            if k in pins and pins[k] != v:
                pins[k] = None  # contradictory pins, caught by the solvers
            else:
                pins[k] = v
        out = LinSystem.__new__(LinSystem)
        out.variables = self.variables
        out._index = self._index
        out.equations = self.equations
        out.nonneg = self.nonneg
        out.pins = pins
        self._check_keys(extra)
        return out

    def without_nonneg(self) -> "LinSystem":
        out = self.with_pins({})
        out.nonneg = set()
        return out

    def dump(self) -> str:
        """One equation per line as ``coef*var ... = rhs``; pins as ``var := value``."""
        lines = []
        for coeffs, rhs in self.equations:
            terms = " ".join(f"{c}*{_fmt_key(k)}" for k, c in coeffs.items()) or "0"
            lines.append(f"{terms} = {rhs}")
        for k, v in self.pins.items():
            lines.append(f"{_fmt_key(k)} := {v}")
        for k in self.variables:
            if k in self.nonneg:
                lines.append(f"{_fmt_key(k)} >= 0")
        return "\n".join(lines) + "\n"


def _fmt_key(k: Key) -> str:
    return str(k).replace(" ", "")


class Infeasible(Exception):
    pass


def check_solution(system: LinSystem, a: Mapping[Key, Fraction | int]) -> bool:
    for v in system.variables:
        if v not in a:
            return False
    for coeffs, rhs in system.equations:
        if sum(Fraction(c) * a[k] for k, c in coeffs.items()) != rhs:
            return False
    for k, v in system.pins.items():
        if v is None or a[k] != v:
            return False
    return all(a[k] >= 0 for k in system.nonneg)


def _exact(v) -> Fraction | int:
    """Ints stay ints (cheap arithmetic); everything else becomes a Fraction."""
    if isinstance(v, int):
        return v
    v = Fraction(v)
    return v.numerator if v.denominator == 1 else v


def _pinned_rows(system: LinSystem) -> tuple[list[dict[int, Fraction]], list[Fraction], dict[int, Fraction]]:
    """Rows over variable indices with pins substituted away."""
    pins: dict[int, Fraction | int] = {}
    for k, v in system.pins.items():
        if v is None:
            raise Infeasible
        pins[system.index(k)] = _exact(v)
    rows, rhs = [], []
    for coeffs, b in system.equations:
        row: dict[int, Fraction | int] = {}
        b = _exact(b)
        for k, c in coeffs.items():
            i = system.index(k)
            if i in pins:
                b -= c * pins[i]
            else:
                row[i] = row.get(i, 0) + _exact(c)
        row = {i: c for i, c in row.items() if c}
        if not row:
            if b != 0:
                raise Infeasible
            continue
        rows.append(row)
        rhs.append(b)
    return rows, rhs, pins


def _to_assignment(system: LinSystem, values: Mapping[int, Fraction | int]) -> dict[Key, Fraction | int]:
    return {k: values.get(i, 0) for i, k in enumerate(system.variables)}


# ---------------------------------------------------------------- rational


def solve_rational(system: LinSystem) -> dict[Key, Fraction] | None:
    """Some exact solution of equations and pins (nonnegativity ignored)."""
    try:
        rows, rhs, pins = _pinned_rows(system)
    except Infeasible:
        return None
    steps: list[tuple[int, dict[int, Fraction], Fraction]] = []
    active = list(range(len(rows)))
    cols: dict[int, set[int]] = {}
    for r in active:
        for v in rows[r]:
            cols.setdefault(v, set()).add(r)
    alive = set(active)
    while alive:
        r = min(alive, key=lambda i: (len(rows[i]), i))
        row = rows[r]
        alive.discard(r)
        if not row:
            if rhs[r] != 0:
                return None
            continue
        v = min(row, key=lambda u: (len(cols[u]), u))
        c = row[v]
        piv = {u: Fraction(w) / c for u, w in row.items() if u != v}
        b = Fraction(rhs[r]) / c
        for u in row:
            cols[u].discard(r)
        for q in list(cols[v]):
            a = rows[q].pop(v)
            cols[v].discard(q)
            for u, w in piv.items():
                nv = rows[q].get(u, 0) - a * w
                if nv:
                    rows[q][u] = nv
                    cols[u].add(q)
                else:
                    rows[q].pop(u, None)
                    cols[u].discard(q)
            rhs[q] -= a * b
        steps.append((v, piv, b))
    values: dict[int, Fraction] = dict(pins)
    for v, piv, b in reversed(steps):
        values[v] = b - sum(w * values.get(u, 0) for u, w in piv.items())
    return {k: Fraction(values.get(i, 0)) for i, k in enumerate(system.variables)}


# ---------------------------------------------------------------- integer


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if a < 0:
        return -a, -s0, -t0
    return a, s0, t0


def hermite_normal_form(m: list[list[int]]) -> tuple[list[list[int]], list[list[int]]]:
    """Row-style Hermite normal form.

    Returns ``(H, U)`` with ``U @ M == H``, ``U`` unimodular and ``H`` in row
    echelon form: pivots are positive and entries above a pivot lie in
    ``[0, pivot)``.
    """
    rows = len(m)
    cols = len(m[0]) if rows else 0
    h = [[int(x) for x in row] for row in m]
    u = [[int(i == j) for j in range(rows)] for i in range(rows)]
    r = 0
    for j in range(cols):
        if r == rows:
            break
        nz = [i for i in range(r, rows) if h[i][j]]
        if not nz:
            continue
        p = min(nz, key=lambda i: abs(h[i][j]))
        h[r], h[p] = h[p], h[r]
        u[r], u[p] = u[p], u[r]
        for i in range(r + 1, rows):
            b = h[i][j]
            if not b:
                continue
            a = h[r][j]
            if b % a == 0:
                f = b // a
                h[i] = [x - f * y for x, y in zip(h[i], h[r])]
                u[i] = [x - f * y for x, y in zip(u[i], u[r])]
                continue
            g, s, t = _xgcd(a, b)
            a1, b1 = a // g, b // g
            hr, hi = h[r], h[i]
            ur, ui = u[r], u[i]
            h[r] = [s * x + t * y for x, y in zip(hr, hi)]
            h[i] = [-b1 * x + a1 * y for x, y in zip(hr, hi)]
            u[r] = [s * x + t * y for x, y in zip(ur, ui)]
            u[i] = [-b1 * x + a1 * y for x, y in zip(ur, ui)]
        if h[r][j] < 0:
            h[r] = [-x for x in h[r]]
            u[r] = [-x for x in u[r]]
        piv = h[r][j]
        for i in range(r):
            f = h[i][j] // piv
            if f:
                h[i] = [x - f * y for x, y in zip(h[i], h[r])]
                u[i] = [x - f * y for x, y in zip(u[i], u[r])]
        r += 1
    return h, u


def _dense_integral(a: list[list[int]], b: list[int], ncols: int) -> tuple[list[int], list[list[int]]] | None:
    """Solve a x = b over Z; return (particular, kernel basis) or None."""
    at = [[a[i][j] for i in range(len(a))] for j in range(ncols)]
    if not a:
        return [0] * ncols, [[int(i == j) for i in range(ncols)] for j in range(ncols)]
    h, u = hermite_normal_form(at)
    y = [0] * ncols
    rank = 0
    pivots = []
    for j in range(ncols):
        row = h[j]
        p = next((l for l, x in enumerate(row) if x), None)
        if p is None:
            break
        pivots.append(p)
        rank += 1
    for j, p in enumerate(pivots):
        acc = b[p] - sum(h[i][p] * y[i] for i in range(j))
        if acc % h[j][p]:
            return None
        y[j] = acc // h[j][p]
    x = [sum(u[j][i] * y[j] for j in range(rank)) for i in range(ncols)]
    for i, row in enumerate(a):
        if sum(c * xv for c, xv in zip(row, x)) != b[i]:
            return None
    kernel = [list(u[j]) for j in range(rank, ncols)]
    return x, kernel


def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


class _IntegerElimination:
    """Sparse elimination over Z using unit pivots, HNF on the residue."""

    def __init__(self, rows: list[dict[int, Fraction]], rhs: list[Fraction]):
        self.rows: dict[int, dict[int, int]] = {}
        self.rhs: dict[int, int] = {}
        self.cols: dict[int, set[int]] = {}
        self.steps: list[tuple[int, int, dict[int, int], int]] = []
        for r, (row, b) in enumerate(zip(rows, rhs)):
            den = _lcm([c.denominator for c in row.values()] + [b.denominator])
            if den == 1:
                irow = {v: int(c) for v, c in row.items()}
                self.rhs[r] = int(b)
            else:
                irow = {v: int(c * den) for v, c in row.items()}
                self.rhs[r] = int(b * den)
            self.rows[r] = irow
            for v in irow:
                self.cols.setdefault(v, set()).add(r)
            self._normalize(r)

    def _normalize(self, r: int) -> None:
        row = self.rows[r]
        if not row:
            if self.rhs[r] != 0:
                raise Infeasible
            del self.rows[r]
            del self.rhs[r]
            return
        g = 0
        for c in row.values():
            g = math.gcd(g, c)
            if g == 1:
                return
        if self.rhs[r] % g:
            raise Infeasible
        for v in row:
            row[v] //= g
        self.rhs[r] //= g

    def _unit_var(self, r: int) -> int | None:
        best = None
        for v, c in self.rows[r].items():
            if c == 1 or c == -1:
                key = (len(self.cols[v]), v)
                if best is None or key < best[0]:
                    best = (key, v)
        return None if best is None else best[1]

    def eliminate(self) -> None:
        heap = [(len(row), r) for r, row in self.rows.items()]
        heapq.heapify(heap)
        while heap:
            ln, r = heapq.heappop(heap)
            row = self.rows.get(r)
            if row is None or len(row) != ln:
                continue
            v = self._unit_var(r)
            if v is None:
                continue
            c = row[v]
            b = self.rhs[r]
            del self.rows[r]
            del self.rhs[r]
            for u in row:
                self.cols[u].discard(r)
            rest = {u: w for u, w in row.items() if u != v}
            self.steps.append((v, c, rest, b))
            # v = c * (b - sum rest)
            for q in list(self.cols[v]):
                qrow = self.rows[q]
                a = qrow.pop(v)
                self.cols[v].discard(q)
                f = a * c
                for u, w in rest.items():
                    nv = qrow.get(u, 0) - f * w
                    if nv:
                        if u not in qrow:
                            self.cols[u].add(q)
                        qrow[u] = nv
                    elif u in qrow:
                        del qrow[u]
                        self.cols[u].discard(q)
                self.rhs[q] -= f * b
                self._normalize(q)
                if q in self.rows:
                    heapq.heappush(heap, (len(self.rows[q]), q))

    def residual(self) -> tuple[list[int], list[int], tuple[list[int], list[list[int]]]]:
        rids = sorted(self.rows)
        rvars = sorted({v for r in rids for v in self.rows[r]})
        pos = {v: i for i, v in enumerate(rvars)}
        a = []
        for r in rids:
            line = [0] * len(rvars)
            for v, c in self.rows[r].items():
                line[pos[v]] = c
            a.append(line)
        sol = _dense_integral(a, [self.rhs[r] for r in rids], len(rvars))
        if sol is None:
            raise Infeasible
        return rids, rvars, sol


def _integer_rows(system: LinSystem) -> tuple[list[dict[int, Fraction]], list[Fraction], dict[int, int]]:
    rows, rhs, pins = _pinned_rows(system)
    for v in pins.values():
        if v.denominator != 1:
            raise Infeasible
    return rows, rhs, {i: int(v) for i, v in pins.items()}


def solve_integral(system: LinSystem) -> dict[Key, int] | None:
    """An integer solution of equations and pins (nonnegativity ignored)."""
    try:
        rows, rhs, pins = _integer_rows(system)
        elim = _IntegerElimination(rows, rhs)
        elim.eliminate()
        _, rvars, (x, _) = elim.residual()
    except Infeasible:
        return None
    values: dict[int, int] = dict(pins)
    for v, xv in zip(rvars, x):
        values[v] = xv
    for v, c, rest, b in reversed(elim.steps):
        values[v] = c * (b - sum(w * values.get(u, 0) for u, w in rest.items()))
    return {k: values.get(i, 0) for i, k in enumerate(system.variables)}


@dataclass
class AffineLattice:
    """All integer solutions: ``point + sum_j t_j * gens[j]`` for integer t.

    ``exprs[i]`` is the coordinate i as ``(constant, {param: coef})``.
    """

    system: LinSystem
    point: dict[int, int]
    exprs: dict[int, tuple[int, dict[int, int]]]
    nparams: int

    def coordinate(self, key: Key) -> tuple[int, dict[int, int]]:
        return self.exprs[self.system.index(key)]

    def attainable(self, targets: Mapping[Key, int]) -> bool:
        """Is there an integer solution taking the given values on these keys?"""
        params: dict[int, int] = {}
        rows, rhs = [], []
        for k, val in targets.items():
            const, coefs = self.coordinate(k)
            rows.append(coefs)
            rhs.append(val - const)
            for p in coefs:
                params.setdefault(p, len(params))
        a = []
        for coefs in rows:
            line = [0] * len(params)
            for p, c in coefs.items():
                line[params[p]] = c
            a.append(line)
        return _dense_integral(a, rhs, len(params)) is not None


def integer_lattice(system: LinSystem) -> AffineLattice | None:
    """Parametrize the integer solution set of equations and pins."""
    try:
        rows, rhs, pins = _integer_rows(system)
        elim = _IntegerElimination(rows, rhs)
        elim.eliminate()
        _, rvars, (x, kernel) = elim.residual()
    except Infeasible:
        return None
    n = len(system.variables)
    pivoted = {v for v, _, _, _ in elim.steps}
    exprs: dict[int, tuple[int, dict[int, int]]] = {}
    nparams = 0
    for i, val in pins.items():
        exprs[i] = (val, {})
    for j, v in enumerate(rvars):
        coefs = {nparams + t: kv[j] for t, kv in enumerate(kernel) if kv[j]}
        exprs[v] = (x[j], coefs)
    nparams += len(kernel)
    for i in range(n):
        if i not in exprs and i not in pivoted:
            exprs[i] = (0, {nparams: 1})
            nparams += 1
    for v, c, rest, b in reversed(elim.steps):
        const = b
        coefs: dict[int, int] = {}
        for u, w in rest.items():
            uc, ucoefs = exprs[u]
            const -= w * uc
            for p, pc in ucoefs.items():
                nv = coefs.get(p, 0) - w * pc
                if nv:
                    coefs[p] = nv
                else:
                    coefs.pop(p, None)
        if c == -1:
            const = -const
            coefs = {p: -pc for p, pc in coefs.items()}
        exprs[v] = (const, coefs)
    point = {i: e[0] for i, e in exprs.items()}
    return AffineLattice(system, point, exprs, nparams)


# ---------------------------------------------------------------- simplex

_ZERO = gmpy2.mpq(0)


class _Tableau:
    """Sparse dictionary tableau; rows are canonical w.r.t. ``basis``.

    ``cols[u]`` holds the rows with a nonzero entry in column u.
    """

    def __init__(self, rows: list[dict[int, gmpy2.mpq]], rhs: list[gmpy2.mpq], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.cols: dict[int, set[int]] = {}
        for r, row in enumerate(rows):
            for u in row:
                self.cols.setdefault(u, set()).add(r)

    def add_row(self, row: dict[int, gmpy2.mpq], rhs: gmpy2.mpq, basic: int) -> None:
        """Append a row (made canonical here) whose basic column is ``basic``."""
        row = dict(row)
        for r, bv in enumerate(self.basis):
            f = row.get(bv)
            if f:
                for u, w in self.rows[r].items():
                    nv = row.get(u, _ZERO) - f * w
                    if nv:
                        row[u] = nv
                    else:
                        row.pop(u, None)
                rhs -= f * self.rhs[r]
        r = len(self.rows)
        self.rows.append(row)
        self.rhs.append(rhs)
        self.basis.append(basic)
        for u in row:
            self.cols.setdefault(u, set()).add(r)

    def pivot(self, r: int, e: int) -> None:
        row = self.rows[r]
        c = row[e]
        if c != 1:
            inv = 1 / c
            for u in row:
                row[u] *= inv
            self.rhs[r] *= inv
        b = self.rhs[r]
        items = list(row.items())
        cols = self.cols
        for q in list(cols.get(e, ())):
            if q == r:
                continue
            qrow = self.rows[q]
            f = qrow[e]
            for u, w in items:
                old = qrow.get(u)
                if old is None:
                    qrow[u] = -f * w
                    cols.setdefault(u, set()).add(q)
                else:
                    nv = old - f * w
                    if nv:
                        qrow[u] = nv
                    else:
                        del qrow[u]
                        cols[u].discard(q)
            self.rhs[q] -= f * b
        self.basis[r] = e

    def optimize(self, cost: Mapping[int, gmpy2.mpq], banned: set[int] = frozenset()) -> bool:
        """Minimize cost; return False if unbounded."""
        obj: dict[int, gmpy2.mpq] = {u: gmpy2.mpq(c) for u, c in cost.items() if c}
        for r, bv in enumerate(self.basis):
            cb = obj.get(bv)
            if cb:
                for u, w in self.rows[r].items():
                    nv = obj.get(u, _ZERO) - cb * w
                    if nv:
                        obj[u] = nv
                    else:
                        obj.pop(u, None)
        degenerate = 0
        while True:
            cands = [(c, u) for u, c in obj.items() if c < 0 and u not in banned]
            if not cands:
                return True
            if degenerate > 30:
                e = min(u for _, u in cands)
            else:
                e = min(cands)[1]
            best = None
            for r in self.cols.get(e, ()):
                a = self.rows[r][e]
                if a > 0:
                    ratio = self.rhs[r] / a
                    key = (ratio, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return False
            degenerate = degenerate + 1 if best[0][0] == 0 else 0
            r = best[1]
            self.pivot(r, e)
            f = obj.pop(e)
            for u, w in self.rows[r].items():
                if u == e:
                    continue
                nv = obj.get(u, _ZERO) - f * w
                if nv:
                    obj[u] = nv
                else:
                    obj.pop(u, None)

    def values(self) -> dict[int, gmpy2.mpq]:
        return {bv: self.rhs[r] for r, bv in enumerate(self.basis) if self.rhs[r]}

    def keep_rows(self, keep: list[int], limit: int) -> None:
        """Retain the listed rows and drop columns >= limit."""
        self.rows = [{u: w for u, w in self.rows[r].items() if u < limit} for r in keep]
        self.rhs = [self.rhs[r] for r in keep]
        self.basis = [self.basis[r] for r in keep]
        self.cols = {}
        for r, row in enumerate(self.rows):
            for u in row:
                self.cols.setdefault(u, set()).add(r)


def _phase_one(rows: list[dict[int, Fraction]], rhs: list[Fraction], nvars: int) -> _Tableau | None:
    """Feasible canonical tableau for rows over vars 0..nvars-1 (all >= 0)."""
    trows, trhs, basis = [], [], []
    for i, (row, b) in enumerate(zip(rows, rhs)):
        sign = -1 if b < 0 else 1
        trow = {u: gmpy2.mpq(sign * c.numerator, c.denominator) for u, c in row.items()}
        art = nvars + i
        trow[art] = gmpy2.mpq(1)
        trows.append(trow)
        trhs.append(gmpy2.mpq(sign * b.numerator, b.denominator))
        basis.append(art)
    tab = _Tableau(trows, trhs, basis)
    tab.optimize({nvars + i: 1 for i in range(len(rows))})
    if any(tab.rhs[r] for r, bv in enumerate(tab.basis) if bv >= nvars):
        return None
    keep = []
    for r in range(len(tab.rows)):
        if tab.basis[r] >= nvars:
            e = next((u for u in sorted(tab.rows[r]) if u < nvars), None)
            if e is None:
                continue  # redundant row
            tab.pivot(r, e)
        keep.append(r)
    tab.keep_rows(keep, nvars)
    return tab


class _Presolved:
    """Forced values found by simple row rules, plus the remaining rows."""

    def __init__(self, rows: list[dict[int, Fraction]], rhs: list[Fraction], nonneg: set[int]):
        self.fixed: dict[int, Fraction] = {}
        rows = [dict(r) for r in rows]
        rhs = list(rhs)
        cols: dict[int, set[int]] = {}
        for r, row in enumerate(rows):
            for v in row:
                cols.setdefault(v, set()).add(r)
        alive = set(range(len(rows)))
        queue = list(range(len(rows)))
        while queue:
            r = queue.pop()
            if r not in alive:
                continue
            row = rows[r]
            if not row:
                if rhs[r] != 0:
                    raise Infeasible
                alive.discard(r)
                continue
            fix: dict[int, Fraction] = {}
            if len(row) == 1:
                (v, c), = row.items()
                val = Fraction(rhs[r]) / c
                if v in nonneg and val < 0:
                    raise Infeasible
                fix[v] = val
            elif all(v in nonneg for v in row):
                signs = {c > 0 for c in row.values()}
                if len(signs) == 1:
                    pos = signs.pop()
                    b = rhs[r] if pos else -rhs[r]
                    if b < 0:
                        raise Infeasible
                    if b == 0:
                        fix = {v: Fraction(0) for v in row}
            if not fix:
                continue
            for v, val in fix.items():
                self.fixed[v] = val
                for q in cols.pop(v, ()):
                    if q not in alive:
                        continue
                    c = rows[q].pop(v)
                    rhs[q] -= c * val
                    queue.append(q)
        self.rows = [rows[r] for r in sorted(alive) if rows[r]]
        self.rhs = [rhs[r] for r in sorted(alive) if rows[r]]
        for r in alive:
            if not rows[r] and rhs[r] != 0:
                raise Infeasible


def _split_free(rows, rhs, nvars: int, nonneg: set[int]):
    """Map every variable to nonnegative LP columns (free vars split in two)."""
    cols: dict[int, tuple[int, int | None]] = {}
    nxt = 0
    used = sorted({v for row in rows for v in row})
    for v in used:
        if v in nonneg:
            cols[v] = (nxt, None)
            nxt += 1
        else:
            cols[v] = (nxt, nxt + 1)
            nxt += 2
    lp_rows = []
    for row in rows:
        lr: dict[int, Fraction] = {}
        for v, c in row.items():
            p, m = cols[v]
            lr[p] = c
            if m is not None:
                lr[m] = -c
        lp_rows.append(lr)
    return lp_rows, list(rhs), cols, nxt


def _lp_setup(system: LinSystem):
    rows, rhs, pins = _pinned_rows(system)
    nonneg = {system.index(k) for k in system.nonneg}
    for i, v in pins.items():
        if i in nonneg and v < 0:
            raise Infeasible
    pre = _Presolved(rows, rhs, nonneg)
    fixed = dict(pins)
    fixed.update(pre.fixed)
    lp_rows, lp_rhs, cols, ncols = _split_free(pre.rows, pre.rhs, len(system.variables), nonneg)
    return fixed, lp_rows, lp_rhs, cols, ncols, nonneg


def _unsplit(vals: Mapping[int, gmpy2.mpq], cols) -> dict[int, Fraction]:
    out = {}
    for v, (p, m) in cols.items():
        x = vals.get(p, _ZERO) - (vals.get(m, _ZERO) if m is not None else _ZERO)
        out[v] = Fraction(int(x.numerator), int(x.denominator))
    return out


def lp_feasible(system: LinSystem) -> dict[Key, Fraction] | None:
    """An exact feasible point, or None."""
    try:
        fixed, lp_rows, lp_rhs, cols, ncols, _ = _lp_setup(system)
    except Infeasible:
        return None
    tab = _phase_one(lp_rows, lp_rhs, ncols)
    if tab is None:
        return None
    values = _unsplit(tab.values(), cols)
    values.update(fixed)
    return {k: Fraction(values.get(i, 0)) for i, k in enumerate(system.variables)}


def _grow_support(tab: _Tableau, ncols: int) -> dict[int, Fraction]:
    """Average of feasible points whose support is maximal over the feasible set.

    Repeatedly maximizes the sum of the still-zero columns under the cap
    sum <= 1 (a cap never hides positivity) until that maximum is 0.
    """
    points = [tab.values()]
    support = {j for j, v in points[0].items() if j < ncols and v}
    slack = ncols
    while True:
        zero = [j for j in range(ncols) if j not in support]
        if not zero:
            break
        row = {j: gmpy2.mpq(1) for j in zero}
        row[slack] = gmpy2.mpq(1)
        tab.add_row(row, gmpy2.mpq(1), slack)
        slack += 1
        tab.optimize({j: -1 for j in zero})
        vals = tab.values()
        new = {j for j in zero if vals.get(j)}
        if not new:
            break
        points.append(vals)
        support |= new
    out = {}
    for j in range(ncols):
        x = sum((p.get(j, _ZERO) for p in points), _ZERO) / len(points)
        out[j] = Fraction(int(x.numerator), int(x.denominator))
    return out


def relative_interior_point(system: LinSystem) -> dict[Key, Fraction] | None:
    """Feasible point whose support is maximal over the feasible set."""
    try:
        fixed, lp_rows, lp_rhs, cols, ncols, nonneg = _lp_setup(system)
    except Infeasible:
        return None
    tab = _phase_one(lp_rows, lp_rhs, ncols)
    if tab is None:
        return None
    lp_point = _grow_support(tab, ncols)
    values = _unsplit({j: gmpy2.mpq(v.numerator, v.denominator) for j, v in lp_point.items()}, cols)
    values.update(fixed)
    out = {}
    for i, k in enumerate(system.variables):
        if i in values:
            out[k] = Fraction(values[i])
        else:
            # unconstrained variable: any value is feasible
            out[k] = Fraction(1)
    _repair_free_zeros(system, out, cols, lp_rows, lp_rhs, ncols, nonneg)
    return out


def _repair_free_zeros(system, out, cols, lp_rows, lp_rhs, ncols, nonneg) -> None:
    """Move off zero on free variables that are not identically zero."""
    free = [v for v, (_, m) in cols.items() if m is not None and out[system.variables[v]] == 0]
    for v in free:
        p, m = cols[v]
        for sign in (1, -1):
            rows = [dict(r) for r in lp_rows] + [{p: Fraction(1), m: Fraction(-1)}]
            rhs = list(lp_rhs) + [Fraction(sign)]
            tab = _phase_one(rows, rhs, ncols)
            if tab is None:
                continue
            vals = _unsplit(tab.values(), cols)
            eps = Fraction(1, 2)
            while True:
                trial = dict(out)
                for u in cols:
                    key = system.variables[u]
                    trial[key] = (1 - eps) * out[key] + eps * vals.get(u, 0)
                if all(trial[system.variables[u]] != 0 for u in cols if out[system.variables[u]] != 0) and trial[
                    system.variables[v]
                ] != 0:
                    out.update(trial)
                    break
                eps /= 2
            break


# ---------------------------------------------------------------- p-solutions


def _prime_power_exponent(den: int, p: int) -> int | None:
    e = 0
    while den % p == 0:
        den //= p
        e += 1
    return e if den == 1 else None


def is_p_solution(a: Mapping[Key, Fraction | int], p: int) -> bool:
    if p < 2:
        raise ContractError("p must be at least 2")
    for v in a.values():
        v = Fraction(v)
        if v == 0:
            continue
        if v < 0:
            return False
        num, den = v.numerator, v.denominator
        if num != 1 and den != 1:
            return False
        if _prime_power_exponent(num if den == 1 else den, p) is None:
            return False
    return True


def _denominators_are_powers(a: Mapping[Key, Fraction | int], p: int) -> bool:
    return all(_prime_power_exponent(Fraction(v).denominator, p) is not None for v in a.values())


def crt_combine(
    system: LinSystem,
    phi_p: Mapping[Key, Fraction | int],
    phi_q: Mapping[Key, Fraction | int],
    p: int,
    q: int,
) -> dict[Key, int]:
    """Integral solution lam*phi_p + (1-lam)*phi_q with lam = 0 mod p^M, 1 mod q^M."""
    if math.gcd(p, q) != 1:
        raise ContractError("p and q must be coprime")
    plain = system.without_nonneg()
    if not (check_solution(plain, phi_p) and check_solution(plain, phi_q)):
        raise ContractError("inputs must solve the system")
    if not (_denominators_are_powers(phi_p, p) and _denominators_are_powers(phi_q, q)):
        raise ContractError("denominators must be powers of p (resp. q)")
    mexp = 0
    for phi, base in ((phi_p, p), (phi_q, q)):
        for v in phi.values():
            e = _prime_power_exponent(Fraction(v).denominator, base)
            mexp = max(mexp, e)
    pm, qm = p**mexp, q**mexp
    lam = pm * pow(pm, -1, qm) if qm > 1 else 0
    out = {}
    for k in system.variables:
        val = lam * Fraction(phi_p[k]) + (1 - lam) * Fraction(phi_q[k])
        if val.denominator != 1:
            raise ContractError("combination is not integral")
        out[k] = int(val)
    return out
