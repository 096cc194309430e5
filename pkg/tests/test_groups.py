import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinecsp.constructions import k4, tseitin_instance
from affinecsp.groups import (
    CosetInstance,
    ResourceError,
    all_subgroups,
    baer_reduct,
    brute_force_solve,
    center,
    commutator_subgroup,
    coset,
    coset_to_equations,
    coset_to_structures,
    cyclic,
    direct_product,
    from_table,
    full_coset_template,
    generating_set,
    group_exponent,
    is_2_nilpotent,
    is_subgroup,
    random_coset_instance,
    random_subgroup,
    semidirect_z9_z3,
    subgroup_closure,
    symmetric,
)
from affinecsp.linalg import solve_integral
from affinecsp.structures import ContractError, OpTable, is_polymorphism, oracle_decide


def test_constructors():
    assert cyclic(2).table.tolist() == [[0, 1], [1, 0]]
    assert len(symmetric(3)) == 6
    g = semidirect_z9_z3()
    assert len(g) == 27 and not g.is_abelian()
    assert direct_product(cyclic(2), cyclic(2)).is_abelian()
    with pytest.raises(ResourceError):
        symmetric(9)


def test_from_table_validates():
    with pytest.raises(ContractError):
        from_table(["a", "b"], [["a", "a"], ["a", "b"]])
    with pytest.raises(ContractError):
        from_table(["a", "b"], [["a", "b"]])
    assert from_table(["e", "x"], [["e", "x"], ["x", "e"]]).is_abelian()


def test_symmetric_composition_order():
    g = symmetric(3)
    p, q = g.perm_index[(1, 0, 2)], g.perm_index[(0, 2, 1)]
    pq = g.perms[g.mul(p, q)]
    assert pq == tuple(g.perms[q][g.perms[p][i]] for i in range(3))


def test_subgroup_closure_examples(z2):
    assert subgroup_closure(z2, [], 3) == {(0, 0, 0)}
    even = subgroup_closure(z2, [(1, 1, 0), (0, 1, 1)], 3)
    assert even == {t for t in itertools.product((0, 1), repeat=3) if sum(t) % 2 == 0}
    assert subgroup_closure(z2, even, 3) == even


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["z3", "s3", "z2xz2"]))
def test_random_subgroups_are_subgroups(seed, kind):
    g = {"z3": cyclic(3), "s3": symmetric(3), "z2xz2": direct_product(cyclic(2), cyclic(2))}[kind]
    rng = random.Random(seed)
    s = random_subgroup(g, 2, rng)
    assert is_subgroup(g, s, 2)
    assert subgroup_closure(g, generating_set(g, s, 2), 2) == s
    for x, y in itertools.product(s, repeat=2):
        assert g.tuple_mul(x, g.tuple_inv(y)) in s


def test_is_subgroup_rejects_non_closed(z3):
    assert not is_subgroup(z3, frozenset({(0,), (1,)}), 1)
    with pytest.raises(ContractError):
        CosetInstance(z3, ("x",)).add(("x",), [(0,), (1,)], (0,))


def test_all_subgroups_counts(z2, z3):
    assert len(all_subgroups(z2, 2)) == 5
    assert len(all_subgroups(z3, 2)) == 6
    assert len(all_subgroups(z2, 3)) == 16


def test_coset_to_structures_examples(z2):
    inst = CosetInstance(z2, ("x", "y"))
    a, b = coset_to_structures(inst)
    assert len(a.vocabulary) == 0 and oracle_decide(a, b)[0]
    h = k4()
    a, b = coset_to_structures(tseitin_instance(h, z2, {v: 0 for v in h.vertices}))
    assert sum(len(b.relations[n]) for n in b.vocabulary.names) == 4
    assert len(a.vocabulary) <= 2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3]))
def test_structures_preserve_solvability(seed, p):
    g = cyclic(p)
    inst = random_coset_instance(g, 3, 3, random.Random(seed))
    assert oracle_decide(*coset_to_structures(inst))[0] == (brute_force_solve(inst) is not None)


def test_coset_to_equations_examples(z2, z3):
    inst = CosetInstance(z2, ("x",))
    inst.add(("x",), [(0,)], (1,))
    system, p = coset_to_equations(inst)
    sol = solve_integral(system)
    assert sol[("x", "x")] % p == 1
    inst = CosetInstance(z3, ("x", "y"))
    inst.add(("x", "y"), [(a, a) for a in range(3)], (1, 0))
    sol = solve_integral(coset_to_equations(inst)[0])
    assert (sol[("x", "x")] - sol[("x", "y")]) % 3 == 1
    with pytest.raises(ContractError):
        coset_to_equations(CosetInstance(cyclic(4), ("x",)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([2, 3]))
def test_equations_equisatisfiable(seed, p):
    inst = random_coset_instance(cyclic(p), 4, 4, random.Random(seed))
    sol = solve_integral(coset_to_equations(inst)[0])
    truth = brute_force_solve(inst)
    assert (sol is not None) == (truth is not None)
    if sol is not None:
        assert inst.is_solution({v: sol[("x", v)] % p for v in inst.variables})


def test_nilpotency_examples():
    for g in (cyclic(4), direct_product(cyclic(2), cyclic(2))):
        assert commutator_subgroup(g) == {g.identity}
        assert is_2_nilpotent(g)
        assert group_exponent(g, commutator_subgroup(g)) == 1
    g = semidirect_z9_z3()
    assert is_2_nilpotent(g)
    assert group_exponent(g, commutator_subgroup(g)) == 3
    assert commutator_subgroup(g) <= center(g)
    assert not is_2_nilpotent(symmetric(3))


def test_baer_reduct_examples(z3):
    assert np.array_equal(baer_reduct(z3).table, z3.table)
    g = semidirect_z9_z3()
    r = baer_reduct(g)
    assert len(r) == 27 and r.is_abelian()
    with pytest.raises(ContractError):
        baer_reduct(symmetric(3))


def test_baer_maltsev_preserves_cosets():
    g = semidirect_z9_z3()
    r = baer_reduct(g)
    p = OpTable.from_function(3, 27, lambda x, y, z: r.mul(r.mul(x, r.inv(y)), z))
    rng = random.Random(5)
    for _ in range(6):
        sub = random_subgroup(g, 2, rng, max_size=81)
        rel = coset(g, sub, (rng.randrange(27), rng.randrange(27)))
        inst = CosetInstance(g, ("x", "y"))
        inst.add(("x", "y"), sub, next(iter(rel)))
        a, _ = coset_to_structures(inst)
        assert is_polymorphism(p, a)


def test_full_coset_template(z2):
    t = full_coset_template(z2, 2)
    assert len(t.vocabulary) == sum(4 // len(s) for s in all_subgroups(z2, 2))
