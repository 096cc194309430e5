import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinecsp.constructions import (
    k4,
    or_instance,
    ort,
    tag_structure,
    tseitin_instance,
    unit_charge,
)
from affinecsp.groups import CosetInstance, coset_to_structures, cyclic, random_coset_instance
from affinecsp.relaxations import check_subset_marginals
from affinecsp.solvers import (
    ACCEPT,
    REJECT,
    UNKNOWN,
    ALGORITHMS,
    Budget,
    aip_decide,
    bak_decide,
    blpaip_decide,
    clap_decide,
    clap_prime_decide,
    cohomological_decide,
    kcons_decide,
    oracle,
    pad_instance,
    run_algorithm,
    solve_ort_exact,
    zaffine_decide,
)
from affinecsp.structures import ContractError, RelStructure, Vocabulary, oracle_decide


def z3_instance(*constraints):
    g = cyclic(3)
    inst = CosetInstance(g, ("x", "y"))
    for scope, sub, rep in constraints:
        inst.add(scope, sub, rep)
    return coset_to_structures(inst)


def clique(n, prefix="q"):
    names = [f"{prefix}{i}" for i in range(n)]
    return RelStructure.from_names([("E", 2)], names, {"E": [(x, y) for x in names for y in names if x != y]})


def path_instance():
    return RelStructure.from_names([("E", 2)], "abc", {"E": [("a", "b"), ("b", "c")]})


SUM_ZERO = [(a, (-a) % 3) for a in range(3)]


def test_aip_examples():
    a, b = z3_instance((("x", "y"), SUM_ZERO, (1, 0)), (("y",), [(0,)], (2,)))
    v = aip_decide(a, b, 1)
    assert v.answer == ACCEPT and v.certificate_ok
    assert oracle(a, b).answer == ACCEPT
    a, b = z3_instance((("x",), [(0,)], (1,)), (("x",), [(0,)], (2,)))
    assert aip_decide(a, b, 1).answer == REJECT


def test_zaffine_examples():
    a, b = clique(2), path_instance()
    v = zaffine_decide(a, b, 2)
    assert v.answer == ACCEPT and v.certificate_ok
    assert zaffine_decide(clique(2), clique(3, "p"), 3).answer == REJECT


def test_bak_examples():
    a, b = clique(2), path_instance()
    assert bak_decide(a, b, 1).answer == ACCEPT
    assert blpaip_decide(a, b).answer == ACCEPT
    t = RelStructure.from_names([("E", 2), ("U", 1)], "01", {"E": [("0", "1")], "U": []})
    inst = RelStructure.from_names([("E", 2), ("U", 1)], "x", {"U": [("x",)]})
    assert bak_decide(t, inst, 1).answer == REJECT


def test_clap_examples():
    a, b = clique(2), path_instance()
    assert clap_decide(a, b).answer == ACCEPT
    assert clap_prime_decide(a, b).answer == ACCEPT
    t = RelStructure.from_names([("E", 2), ("U", 1)], "01", {"E": [("0", "1")], "U": [("0",)]})
    inst = RelStructure.from_names([("E", 2), ("U", 1)], "xy", {"E": [("x", "y")], "U": [("y",)]})
    v = clap_decide(t, inst)
    assert v.answer == REJECT and v.certificate_kind == "empty-s"


def test_clap_accepts_on_padded_instance_when_clap_prime_does():
    a, b = clique(2), path_instance()
    assert clap_prime_decide(a, b).answer == ACCEPT
    padded = pad_instance(a, b)
    assert len(padded) == len(b) + 2
    assert clap_decide(a, padded).answer == ACCEPT


def test_cohomology_and_kcons_sound():
    a, b = clique(3), path_instance()
    assert cohomological_decide(a, b, 2).answer == ACCEPT
    assert kcons_decide(a, b, 2).answer == ACCEPT
    assert cohomological_decide(clique(2), clique(3, "p"), 3).answer == REJECT


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["aip", "zaffine", "bak", "clapprime", "cohomology", "kcons"]))
def test_sound_on_satisfiable_instances(seed, name):
    inst = random_coset_instance(cyclic(2), 3, 2, random.Random(seed), max_arity=2)
    a, b = coset_to_structures(inst)
    if not oracle_decide(a, b)[0]:
        return
    k = 1 if name in ("aip", "bak") else 2
    v = run_algorithm(name, a, b, k)
    assert v.answer == ACCEPT
    if v.certificate_kind == "assignment":
        assert v.certificate_ok
        assert check_subset_marginals(v.certificate, a, b, 1 if name == "clapprime" else k)


def _side(tag, g, charge):
    h = k4()
    a, b = coset_to_structures(tseitin_instance(h, g, charge))
    return tag_structure(a, tag), tag_structure(b, tag)


@pytest.mark.parametrize("sat1,sat2", [(False, False), (True, False), (False, True), (True, True)])
def test_ort_exact_matches_oracle(sat1, sat2, z2, z3):
    h = k4()
    zero2 = {v: 0 for v in h.vertices}
    zero3 = {v: 0 for v in h.vertices}
    a1, b1 = _side("1:", z2, zero2 if sat1 else unit_charge(h, z2))
    a2, b2 = _side("2:", z3, zero3 if sat2 else unit_charge(h, z3))
    b = or_instance(b1, b2)
    v = solve_ort_exact(a1, a2, b)
    assert v.answer == (ACCEPT if sat1 or sat2 else REJECT)
    assert (v.answer == ACCEPT) == oracle_decide(ort(a1, a2), b)[0]
    if v.accepted:
        assert v.certificate_ok


def _over_full(inst, full, tag):
    """Instance of a coset CSP over the vocabulary of a tagged full coset template."""
    names = {rel: name for name, rel in full.relations.items()}
    rels = {}
    for c in inst.constraints:
        rels.setdefault(names[c.members(inst.group)], set()).add(tuple(inst.variables.index(v) for v in c.scope))
    return RelStructure(full.vocabulary, tuple(tag + v for v in inst.variables), rels)


def test_ort_exact_overlap_and_mixed_components(z2, z3):
    from affinecsp.groups import full_coset_template

    h = k4()
    a1 = full_coset_template(z2, 3)
    a2 = full_coset_template(z3, 3)
    sat1 = _over_full(tseitin_instance(h, z2, {v: 0 for v in h.vertices}), a1, "")
    unsat1 = _over_full(tseitin_instance(h, z2, unit_charge(h, z2)), a1, "")
    unsat2 = _over_full(tseitin_instance(h, z3, unit_charge(h, z3)), a2, "")
    a1, a2 = tag_structure(a1, "1:"), tag_structure(a2, "2:")
    good = or_instance(tag_structure(sat1, "1:"), tag_structure(unsat2, "2:"))
    assert solve_ort_exact(a1, a2, good).answer == ACCEPT

    bad = dict(good.relations)
    name2 = a2.vocabulary.names[0]
    bad[name2] = bad[name2] | {(0, 0, 0)}
    overlap = RelStructure(good.vocabulary, good.universe, bad)
    assert solve_ort_exact(a1, a2, overlap).answer == REJECT

    failing = or_instance(tag_structure(unsat1, "1:"), tag_structure(unsat2, "2:"))
    n = len(good)
    rels = {k: set(v) | {tuple(x + n for x in t) for t in failing.relations[k]} for k, v in good.relations.items()}
    names = tuple("L" + u for u in good.universe) + tuple("R" + u for u in failing.universe)
    union = RelStructure(good.vocabulary, names, rels)
    assert oracle_decide(ort(a1, a2), union)[0] is False
    v = solve_ort_exact(a1, a2, union)
    assert v.answer == REJECT and v.certificate_kind == "component"


def test_budget_gives_unknown():
    a, b = clique(2), path_instance()
    v = bak_decide(a, b, 1, budget=1)
    assert v.answer == UNKNOWN
    assert v.systems <= 1
    assert bak_decide(a, b, 1, budget=Budget(10)).answer == ACCEPT


def test_run_algorithm_contract():
    a, b = clique(2), path_instance()
    with pytest.raises(ContractError):
        run_algorithm("zaffine", a, b)
    with pytest.raises(ContractError):
        run_algorithm("ort-exact", a, b)
    with pytest.raises(ContractError):
        run_algorithm("nope", a, b, 1)
    assert set(ALGORITHMS) >= {"oracle", "kcons", "aip", "zaffine", "blpaip", "bak", "clap", "clapprime", "cohomology", "ort-exact"}


def test_k4_or_instance_cheap_verdicts(k4_or):
    a, b = k4_or.template, k4_or.instance
    assert oracle(a, b).answer == REJECT
    v = zaffine_decide(a, b, 2)
    assert v.answer == ACCEPT and v.certificate_ok
    v = blpaip_decide(a, b)
    assert v.answer == ACCEPT and v.certificate_ok
    assert kcons_decide(a, b, 2).answer == ACCEPT
    (pa1, _), (pa2, _) = k4_or.parts
    assert solve_ort_exact(pa1, pa2, b).answer == REJECT
