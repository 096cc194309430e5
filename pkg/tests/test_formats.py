import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinecsp.constructions import k4, petersen, random_3regular_2connected, tseitin_instance, unit_charge
from affinecsp.formats import (
    ParseError,
    builtin_group,
    format_coset,
    format_graph,
    format_group,
    format_structure,
    parse_coset,
    parse_graph,
    parse_group,
    parse_structure,
    read_any,
)
from affinecsp.groups import cyclic, random_coset_instance, semidirect_z9_z3, symmetric
from affinecsp.isomorphism import ColoredStructure, cfi_pair
from affinecsp.structures import ContractError, RelStructure, Vocabulary


def random_structure(rng):
    n = rng.randint(0, 5)
    vocab = Vocabulary(tuple((f"R{i}", rng.randint(1, 3)) for i in range(rng.randint(0, 3))))
    rels = {}
    for name, ar in vocab:
        rels[name] = {tuple(rng.randrange(n) for _ in range(ar)) for _ in range(rng.randint(0, 4))} if n else set()
    return RelStructure(vocab, tuple(f"e{i}" for i in range(n)), rels)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_structure_round_trip(seed):
    rng = random.Random(seed)
    s = random_structure(rng)
    assert parse_structure(format_structure(s)) == s
    if len(s):
        c = ColoredStructure(s, tuple(rng.choice("ab") for _ in s.universe))
        assert parse_structure(format_structure(c)) == c


@pytest.mark.parametrize("g", [cyclic(2), cyclic(5), symmetric(3), semidirect_z9_z3()])
def test_group_round_trip(g):
    back = parse_group(format_group(g))
    assert back.elements == g.elements
    assert (back.table == g.table).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["z2", "z3", "sym3"]))
def test_coset_round_trip(seed, gname):
    g = builtin_group(gname)
    inst = random_coset_instance(g, 4, 3, random.Random(seed))
    back = parse_coset(format_coset(inst, f"builtin:{gname}"))
    assert back.variables == inst.variables
    assert back.constraints == inst.constraints


def test_coset_with_group_file(tmp_path):
    g = cyclic(3)
    (tmp_path / "g.grp").write_text(format_group(g))
    inst = tseitin_instance(k4(), g, unit_charge(k4(), g))
    (tmp_path / "i.coset").write_text(format_coset(inst, "g.grp"))
    back = read_any(tmp_path / "i.coset")
    assert back.constraints == inst.constraints


@pytest.mark.parametrize("g", [k4(), petersen(), random_3regular_2connected(10, 3)])
def test_graph_round_trip(g):
    assert parse_graph(format_graph(g)) == g


def test_cfi_round_trip(z2):
    a, b = cfi_pair(z2, tseitin_instance(k4(), z2, unit_charge(k4(), z2)))
    assert parse_structure(format_structure(a)) == a


@pytest.mark.parametrize(
    "text",
    [
        "",
        "cspv1 group\n",
        "cspv1 structure\nrel E 2\n",
        "cspv1 structure\nelements a b\nrel E 2\na\nend\n",
        "cspv1 structure\nelements a b\nrel E 2\na z\nend\n",
        "cspv1 structure\nelements a b\ncolor a red\n",
        "cspv1 structure\nelements a\nbogus\n",
    ],
)
def test_structure_parse_errors(text):
    with pytest.raises(ParseError):
        parse_structure(text)


def test_group_and_coset_parse_errors():
    with pytest.raises(ParseError):
        parse_group("cspv1 group\nelements a b\ntable\na b\nb b\nend\n")
    with pytest.raises(ParseError):
        parse_coset("cspv1 coset\ngroup builtin:z2\nvars x\nconstraint 1 rep 1\nscope x\n1 1\nend\n")
    with pytest.raises(ParseError):
        parse_coset("cspv1 coset\ngroup missing.grp\nvars x\n")
    with pytest.raises(ParseError):
        parse_graph("v a\nx a b\n")


def test_comments_ignored():
    s = parse_structure("# header comment\ncspv1 structure\nelements a b # two\nrel E 2\na b  # edge\nend\n")
    assert s.relations["E"] == {(0, 1)}


def test_unwritable_names():
    s = RelStructure(Vocabulary(()), ("a b",), {})
    with pytest.raises(ContractError):
        format_structure(s)
