from __future__ import annotations

import pytest

from provlog.oracle import (
    BudgetExceeded,
    NotDerivable,
    enumerate_min_proof_tree,
    immediate_consequence_step,
    minimal_height,
    naive_fixpoint,
    provenance_fixpoint,
)
from provlog.parser import parse_program

from conftest import POINTS_TO_SOURCE, row


def instance_of(program, extra=None):
    return {rel: set(rows) for rel, rows in program.facts.items()}


def test_single_step_adds_direct_object_creations(points_to):
    base = {d.name: set() for d in points_to.declarations}
    for rel, rows in points_to.facts.items():
        base[rel] = set(rows)
    stepped = immediate_consequence_step(points_to, base)
    assert stepped["vpt"] == {
        row(points_to, "a", "l1"),
        row(points_to, "c", "l3"),
        row(points_to, "d", "l4"),
    }
    assert stepped["alias"] == set()
    # monotone: everything from the input is kept
    for rel in base:
        assert base[rel] <= stepped[rel]


def test_step_at_fixpoint_is_identity(points_to):
    fixed = naive_fixpoint(points_to)
    again = immediate_consequence_step(points_to, fixed)
    assert again == fixed


def test_empty_program_step_is_identity():
    p = parse_program(".decl p(x: symbol)\np(a).\n")
    base = {"p": set(p.facts["p"])}
    assert immediate_consequence_step(p, base) == base


def test_points_to_fixpoint(points_to):
    fixed = naive_fixpoint(points_to)
    assert fixed["vpt"] == {
        row(points_to, "a", "l1"),
        row(points_to, "b", "l1"),
        row(points_to, "c", "l3"),
        row(points_to, "d", "l4"),
    }
    assert fixed["alias"] == {row(points_to, "a", "b"), row(points_to, "b", "a")}


def test_facts_only_fixpoint_is_the_input():
    p = parse_program(".decl p(x: symbol)\np(a).\np(b).\n")
    fixed = naive_fixpoint(p)
    assert fixed["p"] == set(p.facts["p"])


def test_transitive_closure_of_three_edge_chain():
    src = """\
.decl edge(x: symbol, y: symbol)
.decl path(x: symbol, y: symbol)
edge(a, b).
edge(b, c).
edge(c, d).
path(X, Y) :- edge(X, Y).
path(X, Z) :- path(X, Y), edge(Y, Z).
"""
    p = parse_program(src)
    fixed = naive_fixpoint(p)
    assert fixed["path"] == {
        row(p, "a", "b"), row(p, "b", "c"), row(p, "c", "d"),
        row(p, "a", "c"), row(p, "b", "d"), row(p, "a", "d"),
    }


def test_budget_guard():
    src = """\
.decl e(x: number, y: number)
.decl p(x: number, y: number)
e(1, 2).
e(2, 3).
e(3, 1).
p(X, Y) :- e(X, Y).
p(X, Z) :- p(X, Y), p(Y, Z).
"""
    p = parse_program(src)
    with pytest.raises(BudgetExceeded):
        naive_fixpoint(p, budget=3)


def test_minimal_heights_points_to(points_to):
    _, heights = provenance_fixpoint(points_to)
    assert heights[("vpt", row(points_to, "b", "l1"))] == 2
    assert heights[("vpt", row(points_to, "a", "l1"))] == 1
    assert heights[("alias", row(points_to, "a", "b"))] == 3
    assert heights[("alias", row(points_to, "b", "a"))] == 3
    assert heights[("new", row(points_to, "a", "l1"))] == 0


def test_minimal_height_of_input_tuple(points_to):
    assert minimal_height(points_to, None, ("new", row(points_to, "a", "l1"))) == 0


def test_not_derivable(points_to):
    with pytest.raises(NotDerivable):
        minimal_height(points_to, None, ("vpt", row(points_to, "b", "l4")))


def fig8_heights(program):
    return {("assign", row(program, "b", "a")): 6}


def test_preset_heights_with_inequality_intact(points_to):
    # alias(c, c) is blocked by the disequality, so the cheap rederivation
    # of vpt(b, l1) through the load/store rule never exists: height stays 7.
    h = minimal_height(points_to, fig8_heights(points_to), ("vpt", row(points_to, "b", "l1")))
    assert h == 7


def test_preset_heights_with_inequality_dropped():
    src = POINTS_TO_SOURCE.replace(", Var1 != Var2", "")
    p = parse_program(src)
    presets = {("assign", row(p, "b", "a")): 6}
    assert minimal_height(p, presets, ("vpt", row(p, "b", "l1"))) == 3
    # the enabling instantiation: alias(c, c) at height 2
    assert minimal_height(p, presets, ("alias", row(p, "c", "c"))) == 2


def test_min_proof_tree_shape(points_to):
    tree = enumerate_min_proof_tree(points_to, None, ("alias", row(points_to, "a", "b")))
    assert tree.rule == 4 and tree.relation == "alias"
    assert tree.tree_height() == 3
    kinds = [(c.relation, c.rule) for c in tree.children]
    assert kinds == [("vpt", 1), ("vpt", 2)]
    via_assign = tree.children[1]
    assert [(c.relation, c.rule) for c in via_assign.children] == [
        ("assign", 0),
        ("vpt", 1),
    ]
    assert tree.constraints == ('"a" != "b"',)


def test_min_proof_tree_of_input_is_single_node(points_to):
    tree = enumerate_min_proof_tree(points_to, None, ("new", row(points_to, "a", "l1")))
    assert tree.rule == 0 and tree.children == [] and tree.tree_height() == 0


def test_min_proof_tree_height_matches_annotation(points_to):
    tree = enumerate_min_proof_tree(points_to, None, ("vpt", row(points_to, "b", "l1")))
    assert tree.rule == 2
    assert tree.tree_height() == 2


def test_tree_heights_match_minimal_heights_everywhere(points_to):
    instance, heights = provenance_fixpoint(points_to)
    for (rel, args), h in heights.items():
        tree = enumerate_min_proof_tree(points_to, None, (rel, args))
        assert tree.tree_height() == h, (rel, args)
