from __future__ import annotations

import json

import pytest

import random

from provlog.bench import staged_points_to_source, update_cascade_source
from provlog.engine import (
    delta_variants,
    evaluate,
    height_snapshot,
    instrumented_text,
    provenance_order_leq,
    update_count_bound_check,
)
from provlog.oracle import naive_fixpoint, provenance_fixpoint
from provlog.parser import parse_program
from provlog.store import Annotation

from conftest import POINTS_TO_SOURCE, row


def db_as_sets(db):
    return {name: {r for r, _ in store.scan()} for name, store in db.relations()}


def db_heights(db):
    return {
        (name, r): ann.height
        for name, store in db.relations()
        for r, ann in store.scan()
    }


def test_points_to_annotations(points_to):
    db, stats = evaluate(points_to)
    vpt = db.relation("vpt")
    assert vpt.annotation(row(points_to, "a", "l1")) == Annotation(1, 1)
    assert vpt.annotation(row(points_to, "b", "l1")) == Annotation(2, 2)
    assert vpt.annotation(row(points_to, "c", "l3")) == Annotation(1, 1)
    assert vpt.annotation(row(points_to, "d", "l4")) == Annotation(1, 1)
    alias = db.relation("alias")
    assert alias.annotation(row(points_to, "a", "b")) == Annotation(4, 3)
    assert alias.annotation(row(points_to, "b", "a")) == Annotation(4, 3)
    assert len(vpt) == 4 and len(alias) == 2
    assert stats.rule_firings == 6
    assert stats.annotation_updates == 0
    assert stats.max_height == 3


def test_edb_tuples_annotated_zero(points_to):
    db, _ = evaluate(points_to)
    assert db.relation("new").annotation(row(points_to, "a", "l1")) == Annotation(0, 0)


def test_facts_only_program():
    p = parse_program(".decl p(x: symbol)\np(a).\np(b).\n")
    db, stats = evaluate(p)
    assert len(db.relation("p")) == 2
    assert stats.rule_firings == 0 and stats.annotation_updates == 0


def test_delta_variant_counts(points_to):
    stratum = {"vpt", "alias"}
    r1, r2, r3, r4 = points_to.rules
    v1 = delta_variants(r1, stratum)
    assert len(v1) == 1 and v1[0].delta_index is None
    v2 = delta_variants(r2, stratum)
    assert len(v2) == 1 and v2[0].delta_index == 1
    v3 = delta_variants(r3, stratum)
    assert [v.delta_index for v in v3] == [2, 3]
    v4 = delta_variants(r4, stratum)
    assert [v.delta_index for v in v4] == [0, 1]


def test_instrumented_text(points_to):
    text = instrumented_text(points_to)
    assert "r2: vpt(Var, Obj, 2, max(h1, h2) + 1) :- assign(Var, Var2, _, h1), vpt(Var2, Obj, _, h2)." in text
    assert 'new("a", "l1", 0, 0).' in text
    # the disequality contributes nothing to the height expression
    assert "r4: alias(Var1, Var2, 4, max(h1, h2) + 1) :- vpt(Var1, Obj, _, h1), vpt(Var2, Obj, _, h2), Var1 != Var2." in text


def test_engine_matches_oracle_on_points_to(points_to):
    db, _ = evaluate(points_to)
    assert db_as_sets(db) == naive_fixpoint(points_to)
    _, heights = provenance_fixpoint(points_to)
    assert db_heights(db) == heights


def test_preset_heights_single_stratum_update():
    source = POINTS_TO_SOURCE.replace(", Var1 != Var2", "")
    p = parse_program(source)
    presets = {("assign", row(p, "b", "a")): 6}
    log = []
    db, stats = evaluate(p, edb_heights=presets, update_log=log)
    b_l1 = row(p, "b", "l1")
    assert db.relation("vpt").annotation(b_l1) == Annotation(3, 3)
    events = [e for e in log if e.relation == "vpt" and e.row == b_l1]
    assert events and events[0].old == Annotation(2, 7) and events[0].new == Annotation(3, 3)
    assert stats.annotation_updates >= 1
    _, heights = provenance_fixpoint(p, presets)
    assert db_heights(db) == heights


def test_staged_points_to_reproduces_the_update():
    p = parse_program(staged_points_to_source())
    log = []
    db, stats = evaluate(p, update_log=log)
    b_l1 = row(p, "b", "l1")
    events = [e for e in log if e.relation == "vpt" and e.row == b_l1]
    assert len(events) == 1
    assert events[0].old.height == 7 and events[0].new.height == 3
    assert stats.annotation_updates >= 1
    assert db.relation("assign").annotation(row(p, "b", "a")).height == 6
    assert db_heights(db) == provenance_fixpoint(p)[1]


def test_negation_evaluated_against_lower_stratum():
    src = """\
.decl e(x: symbol, y: symbol)
.decl q(x: symbol)
.decl p(x: symbol)
.output p
e(a, b).
e(b, c).
q(X) :- e(X, Y).
p(X) :- e(Y, X), !q(X).
"""
    p = parse_program(src)
    db, _ = evaluate(p)
    assert db_as_sets(db)["p"] == {row(p, "c")}
    assert db.relation("p").annotation(row(p, "c")).height == 1


def test_constraints_filter_instantiations():
    src = """\
.decl v(x: number)
.decl small(x: number)
.output small
v(1).
v(5).
v(9).
small(X) :- v(X), X < 6.
"""
    p = parse_program(src)
    db, _ = evaluate(p)
    assert db_as_sets(db)["small"] == {(1,), (5,)}


def test_no_provenance_mode(points_to):
    db, stats = evaluate(points_to, provenance=False)
    assert db_as_sets(db) == naive_fixpoint(points_to)
    assert stats.annotation_updates == 0
    for _, store in db.relations():
        for _, ann in store.scan():
            assert ann.height == 0


def test_extra_facts_and_mismatch(points_to):
    extra = {"new": [row(points_to, "z", "l9")]}
    db, _ = evaluate(points_to, facts=extra)
    assert row(points_to, "z", "l9") in db.relation("vpt")
    with pytest.raises(ValueError, match="arity"):
        evaluate(points_to, facts={"new": [(1, 2, 3)]})


def test_parallel_matches_single_threaded(points_to):
    db1, _ = evaluate(points_to, jobs=1)
    db8, _ = evaluate(points_to, jobs=8)
    assert db_as_sets(db1) == db_as_sets(db8)
    assert db_heights(db1) == db_heights(db8)


def test_update_cascade_counts_grow_superlinearly():
    counts = {}
    for k in (4, 8):
        p = parse_program(update_cascade_source(k))
        db, stats = evaluate(p)
        counts[k] = stats.annotation_updates
        n = db.total_tuples()
        assert update_count_bound_check(stats, n, stats.max_height)
    assert counts[8] >= 2 * counts[4] > 0


def test_bound_check_rejects_excess():
    from provlog.engine import EvalStats

    stats = EvalStats(annotation_updates=50)
    assert not update_count_bound_check(stats, 7, 7)
    assert update_count_bound_check(stats, 10, 5)


def test_stats_json_shape(points_to):
    _, stats = evaluate(points_to)
    payload = json.loads(json.dumps(stats.as_json()))
    assert set(payload) == {"iterations", "ruleFirings", "annotationUpdates", "maxHeight"}
    assert payload["iterations"][0] == 0  # base stratum has no rules


def _random_instance(rng):
    return {
        ("r", (rng.randrange(4), rng.randrange(4))): rng.randrange(6)
        for _ in range(rng.randrange(8))
    }


def _shrink(rng, instance):
    # a random successor in the order: more tuples, lower heights
    grown = dict(instance)
    for key in list(grown):
        if rng.random() < 0.5 and grown[key] > 0:
            grown[key] -= rng.randrange(grown[key]) + 1
    for _ in range(rng.randrange(4)):
        grown.setdefault(("r", (rng.randrange(9), rng.randrange(9))), rng.randrange(6))
    return grown


def test_provenance_order_is_a_partial_order():
    rng = random.Random(5)
    for _ in range(300):
        a = _random_instance(rng)
        b = _shrink(rng, a)
        c = _shrink(rng, b)
        # reflexivity
        assert provenance_order_leq(a, a)
        # constructed successors are comparable; transitivity carries through
        assert provenance_order_leq(a, b) and provenance_order_leq(b, c)
        assert provenance_order_leq(a, c)
        # antisymmetry
        if provenance_order_leq(a, b) and provenance_order_leq(b, a):
            assert a == b
        other = _random_instance(rng)
        if provenance_order_leq(a, other) and provenance_order_leq(other, a):
            assert a == other


def test_iterations_climb_the_provenance_order():
    for source in (staged_points_to_source(), update_cascade_source(4)):
        program = parse_program(source)
        snapshots = []
        evaluate(program, iteration_hook=lambda db: snapshots.append(height_snapshot(db)))
        assert len(snapshots) > 2
        for before, after in zip(snapshots, snapshots[1:]):
            assert provenance_order_leq(before, after)
        # strictly increasing somewhere: these programs perform updates
        assert any(a != b for a, b in zip(snapshots, snapshots[1:]))
