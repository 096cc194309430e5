"""Acceptance criteria 1-10.  Each test records one PASS/FAIL line, printed at the end of the run.

Set AFFINECSP_SKIP_SLOW=1 to skip the ORNPC half of criterion 8.
"""

import csv
import itertools
import os
import random
import time
from pathlib import Path

from affinecsp.cli import run_sweep
from affinecsp.consistency import k_consistency
from affinecsp.constructions import (
    charge_total,
    group_maltsev,
    k4,
    monotone3sat_to_ornpc,
    monotone_sat_brute,
    or_maltsev,
    ort,
    random_monotone_cnf,
    sat_template,
    tag_structure,
    tseitin_instance,
    tseitin_or,
    unit_charge,
)
from affinecsp.groups import (
    baer_reduct,
    coset,
    coset_to_structures,
    cyclic,
    direct_product,
    full_coset_template,
    random_coset_instance,
    random_subgroup,
    semidirect_z9_z3,
)
from affinecsp.isomorphism import ColoredStructure, cfi_pair, iso_encode, iso_oracle, or_iso
from affinecsp.linalg import check_solution, crt_combine, is_p_solution, lp_feasible, relative_interior_point
from affinecsp.relaxations import check_subset_marginals
from affinecsp.solvers import ACCEPT, REJECT, aip_decide, cohomological_decide, oracle, run_algorithm
from affinecsp.structures import OpTable, RelStructure, Vocabulary, check_maltsev, is_polymorphism, oracle_decide

from helpers import can_be_positive, criterion, random_blp_system, synthetic_pq_system

FIXTURES = Path(__file__).parent / "fixtures"
SWEEP_FIXTURE = FIXTURES / "sweep_ort_z2_z3.tsv"
FIVE = [("zaffine", 2), ("blpaip", 1), ("bak", 2), ("clap", None), ("clapprime", None)]

# (label, verdict, template, instance, width of the certificate) for criterion 10
EMITTED: list = []


def emit(label, verdict, a, b, k):
    EMITTED.append((label, verdict, a, b, k))
    return verdict


def test_criterion_1_oracle_ground_truth():
    with criterion(1) as notes:
        start = time.perf_counter()
        h = k4()
        z2, z3 = cyclic(2), cyclic(3)
        cases = [(z2, dict(zip(h.vertices, bits))) for bits in itertools.product((0, 1), repeat=4)]
        rng = random.Random(1)
        cases += [(z3, {v: rng.randrange(3) for v in h.vertices}) for _ in range(20)]
        for g, lam in cases:
            expected = charge_total(g, lam) == g.identity
            assert oracle_decide(*coset_to_structures(tseitin_instance(h, g, lam)))[0] == expected, lam
        took = time.perf_counter() - start
        notes["note"] = f"{len(cases)} charges agree, {took:.2f}s"
        assert took < 5


def test_criterion_2_crt_combiner():
    with criterion(2) as notes:
        for seed in range(20):
            system, phi2, phi3 = synthetic_pq_system(random.Random(seed))
            assert check_solution(system, phi2) and check_solution(system, phi3)
            assert is_p_solution(phi2, 2) and is_p_solution(phi3, 3)
            out = crt_combine(system, phi2, phi3, 2, 3)
            assert all(isinstance(v, int) for v in out.values())
            assert check_solution(system, out)
            support = {k for k in system.variables if phi2[k] or phi3[k]}
            assert {k for k, v in out.items() if v} <= support
        notes["note"] = "20 systems combined exactly"


def test_criterion_3_maltsev_polymorphisms():
    with criterion(3) as notes:
        start = time.perf_counter()
        z2, z3 = cyclic(2), cyclic(3)
        t2, t3 = full_coset_template(z2, 3), full_coset_template(z3, 3)
        assert is_polymorphism(group_maltsev(z2), t2)
        assert is_polymorphism(group_maltsev(z3), t3)
        a1, a2 = tag_structure(t2, "1:"), tag_structure(t3, "2:")
        template = ort(a1, a2)
        assert len(template) == 7
        m = or_maltsev(a1, a2, group_maltsev(z2), group_maltsev(z3))
        assert check_maltsev(m)
        assert is_polymorphism(m, template)
        took = time.perf_counter() - start
        notes["note"] = f"7-element template, {took:.2f}s"
        assert took < 10


def test_criterion_4_aip_on_abelian_cosets():
    with criterion(4) as notes:
        groups = [cyclic(2), cyclic(3), cyclic(4), direct_product(cyclic(2), cyclic(2))]
        rng = random.Random(4)
        agree = sat = 0
        for i in range(100):
            g = groups[i % 4]
            inst = random_coset_instance(g, rng.randint(1, 5), rng.randint(1, 5), rng)
            a, b = coset_to_structures(inst)
            truth = oracle(a, b).answer
            v = emit("c4-aip", aip_decide(a, b, 1), a, b, 1)
            agree += v.answer == truth
            sat += truth == ACCEPT
        notes["note"] = f"{agree}/100 agree ({sat} satisfiable)"
        assert agree == 100


def test_criterion_5_baer_reduct():
    with criterion(5) as notes:
        g = semidirect_z9_z3()
        r = baer_reduct(g)
        assert r.is_abelian() and len(r) == 27
        p = OpTable.from_function(3, 27, lambda x, y, z: r.mul(r.mul(x, r.inv(y)), z))
        rng = random.Random(5)
        for _ in range(20):
            arity = rng.randint(1, 3)
            sub = random_subgroup(g, arity, rng, max_size=81)
            rel = coset(g, sub, tuple(rng.randrange(27) for _ in range(arity)))
            s = RelStructure(Vocabulary((("C", arity),)), g.elements, {"C": rel})
            assert is_polymorphism(p, s)
        agree = sat = 0
        for _ in range(50):
            inst = random_coset_instance(g, rng.randint(2, 4), rng.randint(1, 4), rng, max_arity=2, max_size=81)
            a, b = coset_to_structures(inst)
            truth = oracle(a, b).answer
            v = emit("c5-aip", aip_decide(a, b, 1), a, b, 1)
            agree += v.answer == truth
            sat += truth == ACCEPT
        notes["note"] = f"reduct Abelian, 20 relations preserved, {agree}/50 agree ({sat} satisfiable)"
        assert agree == 50


def _fixture_rows():
    with SWEEP_FIXTURE.open() as fh:
        return [row for row in csv.reader(fh, delimiter="\t")][1:]


def _n_star(rows):
    by_n = {}
    for row in rows:
        by_n.setdefault(int(row[0]), {})[row[2]] = row[4]
    for n in sorted(by_n):
        answers = by_n[n]
        if answers.get("oracle") == REJECT and all(answers.get(name) == ACCEPT for name, _ in FIVE):
            return n
    return None


def test_criterion_6_failure_suite():
    with criterion(6) as notes:
        start = time.perf_counter()
        algos = [("oracle", None)] + FIVE
        rows = run_sweep([4, 6, 8, 10, 12, 14], algos, seed=1, stop_first=True)
        n_star = _n_star(rows)
        if n_star is None:
            rows += run_sweep([16, 18, 20], algos, seed=1, stop_first=True)
            n_star = _n_star(rows)
        notes["note"] = f"n* = {n_star}"
        assert n_star is not None and n_star <= 14
        # the recorded fixture reproduces row for row, timing aside
        assert [r[:-1] for r in rows] == [r[:-1] for r in _fixture_rows()]
        assert _n_star(_fixture_rows()) == n_star
        for row in rows:
            if row[4] == ACCEPT:
                assert row[5] == "true", row
        notes["note"] += f", all five Accept, {time.perf_counter() - start:.0f}s"


def _random_k4_or(rng):
    h = k4()
    z2, z3 = cyclic(2), cyclic(3)
    charges = []
    for g in (z2, z3):
        while True:
            lam = {v: rng.randrange(len(g)) for v in h.vertices}
            want_sat = rng.random() < 0.5
            if (charge_total(g, lam) == g.identity) == want_sat:
                break
        charges.append(lam)
    return tseitin_or(h, (z2, z3), tuple(charges))


def test_criterion_7_cohomology_solves_ort(k4_or):
    with criterion(7) as notes:
        start = time.perf_counter()
        a, b = k4_or.template, k4_or.instance
        v = cohomological_decide(a, b, 4)
        assert v.answer == REJECT
        rng = random.Random(7)
        agree = sat = 0
        for _ in range(20):
            t = _random_k4_or(rng)
            assert len(t.instance) <= 12
            truth = oracle(t.template, t.instance).answer
            v = emit("c7-cohomology", cohomological_decide(t.template, t.instance, 4), t.template, t.instance, 4)
            agree += v.answer == truth
            sat += truth == ACCEPT
        took = time.perf_counter() - start
        notes["note"] = f"K4 instance Rejected, {agree}/20 agree ({sat} satisfiable), {took:.0f}s"
        assert agree == 20
        assert took < 30 * 60


def test_criterion_8_np_complete_template(z2, z3):
    with criterion(8) as notes:
        rng = random.Random(8)
        for _ in range(30):
            cnf = random_monotone_cnf(rng.randint(1, 5), rng.randint(1, 8), rng)
            assert oracle_decide(sat_template(), monotone3sat_to_ornpc(cnf))[0] == monotone_sat_brute(cnf)
        notes["note"] = "30 formulas equisatisfiable"
        if os.environ.get("AFFINECSP_SKIP_SLOW"):
            notes["note"] += "; ORNPC part skipped"
            return
        h = k4()
        t = tseitin_or(h, (z2, z3), (unit_charge(h, z2), unit_charge(h, z3)), mode="npc")
        assert oracle(t.template, t.instance).answer == REJECT
        v = emit("c8-cohomology", cohomological_decide(t.template, t.instance, 2), t.template, t.instance, 2)
        assert v.answer == ACCEPT
        notes["note"] += "; ORNPC on K4 (n=4): oracle Reject, cohomology k=2 Accept"


def _small_graph(rng, n, prefix):
    edges = {(i, j) for i in range(n) for j in range(n) if i < j and rng.random() < 0.5}
    edges |= {(j, i) for i, j in edges}
    base = RelStructure(Vocabulary((("E", 2),)), tuple(f"{prefix}{i}" for i in range(n)), {"E": edges})
    return ColoredStructure(base, ("v",) * n)


def _relabel(s, rng, prefix):
    perm = list(range(len(s.base)))
    rng.shuffle(perm)
    rels = {n: {tuple(perm[x] for x in t) for t in ts} for n, ts in s.base.relations.items()}
    base = RelStructure(s.base.vocabulary, tuple(f"{prefix}{i}" for i in range(len(perm))), rels)
    return ColoredStructure(base, s.color)


def test_criterion_9_isomorphism_encodings(z2):
    with criterion(9) as notes:
        start = time.perf_counter()
        h = k4()
        worst = 0
        for bits in itertools.product((0, 1), repeat=4):
            inst = tseitin_instance(h, z2, dict(zip(h.vertices, bits)))
            truth = oracle_decide(*coset_to_structures(inst))[0]
            a, b = cfi_pair(z2, inst)
            worst = max(worst, a.max_class(), b.max_class())
            assert iso_oracle(a, b)[0] == truth
            assert oracle_decide(*coset_to_structures(iso_encode(a, b, 2)))[0] == truth
        assert worst <= 4 <= len(z2) ** 3
        rng = random.Random(9)
        for trial in range(10):
            pairs, any_iso = [], False
            for i in range(2):
                n = rng.randint(2, 4)
                left = _small_graph(rng, n, "p")
                if rng.random() < 0.5:
                    right = _relabel(left, rng, "q")
                else:
                    right = _small_graph(rng, n, "q")
                iso = iso_oracle(left, right)[0]
                any_iso |= iso
                pairs.append((left, right))
            c0, c1 = or_iso(pairs)
            assert iso_oracle(c0, c1)[0] == any_iso, trial
        took = time.perf_counter() - start
        notes["note"] = f"16 charges agree, max class {worst}, 10 or_iso pairs, {took:.1f}s"
        assert took < 600


def test_criterion_10_relaxation_invariants(k4_or):
    with criterion(10) as notes:
        checked = 0
        for label, v, a, b, k in EMITTED:
            if v.answer == ACCEPT and v.certificate_kind == "assignment":
                assert v.certificate_ok, label
                assert check_subset_marginals(v.certificate, a, b, k), label
                checked += 1
        # the failure-suite solvers, rerun in process on the recorded size
        a, b = k4_or.template, k4_or.instance
        for name, k in (("zaffine", 2), ("blpaip", 1)):
            v = run_algorithm(name, a, b, k)
            assert v.answer == ACCEPT and check_subset_marginals(v.certificate, a, b, k), name
            checked += 1
        rows = _fixture_rows()
        assert all(r[5] == "true" for r in rows if r[4] == ACCEPT)
        reference = dict(k_consistency(a, b, 2))
        rng = random.Random(10)
        for _ in range(50):
            assert dict(k_consistency(a, b, 2, rng=random.Random(rng.random()))) == reference
        variables = feasible = 0
        for seed in range(20):
            s = random_blp_system(random.Random(seed))
            p = relative_interior_point(s)
            if p is None:
                assert lp_feasible(s) is None, seed
                assert not any(can_be_positive(s, key) for key in s.variables), seed
                continue
            feasible += 1
            assert check_solution(s, p)
            for key in s.variables:
                assert (p[key] > 0) == can_be_positive(s, key), (seed, key)
                variables += 1
        notes["note"] = (
            f"{checked} solver solutions + {sum(r[4] == ACCEPT for r in rows)} sweep certificates, "
            f"50 removal orders, {variables} variables on {feasible} feasible of 20 BLP systems"
        )
