"""Semi-naive stratified evaluation with proof annotations.

Each rule is compiled into delta variants: one per body atom whose relation
lives in the current stratum, reading the delta there, the full stable
store to its left and the stable store minus the delta to its right, so an
instantiation is enumerated exactly once per iteration and always depends
on at least one previous-iteration tuple (annotation updates re-enter
through the delta).  Head tuples receive their rule number and one plus
the maximum body height; the stable store keeps the minimum height ever
offered for a tuple.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .ast import Constant, Program, Rule, Variable
from .stratification import Stratification, build_precedence_graph, stratify
from .store import (
    EDB_ANNOTATION,
    Annotation,
    Database,
    InsertOutcome,
    RelationStore,
    make_annotation,
)

LOWER = "lower"  # completed lower stratum (includes pure input relations)
STABLE = "stable"  # current stratum, full pre-iteration store
DELTA = "delta"  # current stratum, previous-iteration novelties
STABLE_NOT_DELTA = "stable-delta"  # current stratum, stable minus delta


@dataclass
class EvalStats:
    iterations: list[int] = field(default_factory=list)
    rule_firings: int = 0
    annotation_updates: int = 0
    max_height: int = 0

    def as_json(self) -> dict:
        return {
            "iterations": list(self.iterations),
            "ruleFirings": self.rule_firings,
            "annotationUpdates": self.annotation_updates,
            "maxHeight": self.max_height,
        }


@dataclass(frozen=True)
class UpdateEvent:
    relation: str
    row: tuple[int, ...]
    old: Annotation
    new: Annotation


def update_count_bound_check(stats: EvalStats, n: int, max_h: int) -> bool:
    """Updates never exceed one full height countdown per derived tuple."""
    return stats.annotation_updates <= n * max_h


def provenance_order_leq(
    a: dict[tuple[str, tuple[int, ...]], int],
    b: dict[tuple[str, tuple[int, ...]], int],
) -> bool:
    """Ordering on provenance instances (tuple-to-height maps): a precedes b
    when b contains every tuple of a, at a height no larger than a's.
    Evaluation only ever moves upward in this order."""
    return all(key in b and b[key] <= height for key, height in a.items())


def height_snapshot(db: Database) -> dict[tuple[str, tuple[int, ...]], int]:
    return {
        (name, row): ann.height
        for name, store in db.relations()
        for row, ann in store.items_unordered()
    }


# -- rule compilation ------------------------------------------------------


@dataclass
class _AtomPlan:
    relation: str
    role: str
    arity: int
    key_positions: tuple[int, ...]
    key_parts: tuple[tuple[bool, int], ...]  # (is_slot, slot or constant)
    outs: tuple[tuple[int, int, bool], ...]  # (position, slot, fills)
    negations_after: tuple["_NegPlan", ...]
    constraints_after: tuple["_ConstraintPlan", ...]


@dataclass
class _NegPlan:
    relation: str
    parts: tuple[tuple[bool, int], ...]  # (is_slot, slot or constant)


@dataclass
class _ConstraintPlan:
    op: str
    lhs: tuple[bool, int]
    rhs: tuple[bool, int]

    def holds(self, slots: list) -> bool:
        lhs = slots[self.lhs[1]] if self.lhs[0] else self.lhs[1]
        rhs = slots[self.rhs[1]] if self.rhs[0] else self.rhs[1]
        if self.op == "=":
            return lhs == rhs
        if self.op == "!=":
            return lhs != rhs
        if self.op == "<":
            return lhs < rhs
        if self.op == "<=":
            return lhs <= rhs
        if self.op == ">":
            return lhs > rhs
        return lhs >= rhs


@dataclass
class Variant:
    rule: Rule
    delta_index: int | None  # body position reading the delta; None: non-recursive
    atoms: tuple[_AtomPlan, ...]
    head_parts: tuple[tuple[bool, int], ...]
    n_slots: int
    initial_checks: tuple[_ConstraintPlan, ...]


def _term_part(term, slot_of: dict[str, int]) -> tuple[bool, int]:
    if isinstance(term, Constant):
        return (False, term.value)
    return (True, slot_of[term.name])


def _compile_variant(rule: Rule, delta_index: int | None, stratum: set[str]) -> Variant:
    slot_of: dict[str, int] = {}
    for atom in rule.body:
        for term in atom.args:
            if isinstance(term, Variable) and term.name not in slot_of:
                slot_of[term.name] = len(slot_of)

    # schedule negations and constraints at the first atom where bound
    bound: set[str] = set()
    neg_after: dict[int, list[_NegPlan]] = {}
    con_after: dict[int, list[_ConstraintPlan]] = {}
    initial: list[_ConstraintPlan] = []
    bound_after: list[set[str]] = []
    for atom in rule.body:
        bound |= {t.name for t in atom.args if isinstance(t, Variable)}
        bound_after.append(set(bound))

    def schedule_index(names: set[str]) -> int:
        for i, have in enumerate(bound_after):
            if names <= have:
                return i
        raise AssertionError("ungrounded variable escaped validation")

    for neg in rule.negations:
        names = {v.name for v in neg.variables()}
        idx = schedule_index(names) if names else 0
        plan = _NegPlan(neg.relation, tuple(_term_part(t, slot_of) for t in neg.args))
        neg_after.setdefault(idx, []).append(plan)
    for c in rule.constraints:
        names = {v.name for v in c.variables()}
        plan = _ConstraintPlan(c.op, _term_part(c.lhs, slot_of), _term_part(c.rhs, slot_of))
        if not names:
            initial.append(plan)
        else:
            con_after.setdefault(schedule_index(names), []).append(plan)

    atoms: list[_AtomPlan] = []
    known: set[str] = set()
    for i, atom in enumerate(rule.body):
        if atom.relation not in stratum:
            role = LOWER
        elif delta_index is None:
            role = STABLE
        elif i == delta_index:
            role = DELTA
        elif i < delta_index:
            role = STABLE
        else:
            role = STABLE_NOT_DELTA
        key_positions: list[int] = []
        key_parts: list[tuple[bool, int]] = []
        outs: list[tuple[int, int, bool]] = []
        filled: set[str] = set()
        for pos, term in enumerate(atom.args):
            if isinstance(term, Constant):
                key_positions.append(pos)
                key_parts.append((False, term.value))
            elif term.name in known:
                key_positions.append(pos)
                key_parts.append((True, slot_of[term.name]))
            else:
                fills = term.name not in filled
                outs.append((pos, slot_of[term.name], fills))
                filled.add(term.name)
        known |= filled
        atoms.append(
            _AtomPlan(
                atom.relation,
                role,
                atom.arity,
                tuple(key_positions),
                tuple(key_parts),
                tuple(outs),
                tuple(neg_after.get(i, ())),
                tuple(con_after.get(i, ())),
            )
        )

    head_parts = tuple(_term_part(t, slot_of) for t in rule.head.args)
    return Variant(rule, delta_index, tuple(atoms), head_parts, len(slot_of), tuple(initial))


def delta_variants(rule: Rule, stratum_relations: set[str]) -> list[Variant]:
    """One variant per body atom in the stratum; a single non-recursive
    variant when the rule has no same-stratum body atom."""
    recursive = [
        i for i, atom in enumerate(rule.body) if atom.relation in stratum_relations
    ]
    if not recursive:
        return [_compile_variant(rule, None, stratum_relations)]
    return [_compile_variant(rule, i, stratum_relations) for i in recursive]


def instrumented_text(program: Program) -> str:
    """The logical rewriting of every rule with its two proof-annotation
    attributes, for inspection."""
    lines: list[str] = []
    for rel in (d.name for d in program.declarations):
        for args in program.facts.get(rel, ()):
            inner = ", ".join(
                program.constant_text(rel, i, v) for i, v in enumerate(args)
            )
            lines.append(f"{rel}({inner}, 0, 0).")
    for rule in program.rules:
        types = program.variable_types(rule)
        heights = [f"h{i + 1}" for i in range(len(rule.body))]
        head_inner = ", ".join(
            program.term_text(t, program.decl(rule.head.relation).attribute_types()[i])
            for i, t in enumerate(rule.head.args)
        )
        if len(heights) == 1:
            height_expr = f"{heights[0]} + 1"
        else:
            height_expr = f"max({', '.join(heights)}) + 1"
        parts = []
        for i, atom in enumerate(rule.body):
            attr_types = program.decl(atom.relation).attribute_types()
            inner = ", ".join(
                program.term_text(t, attr_types[j]) for j, t in enumerate(atom.args)
            )
            parts.append(f"{atom.relation}({inner}, _, {heights[i]})")
        parts += [f"!{program.atom_text(a)}" for a in rule.negations]
        parts += [program.constraint_text(c, types) for c in rule.constraints]
        lines.append(
            f"r{rule.id}: {rule.head.relation}({head_inner}, {rule.id}, {height_expr})"
            f" :- {', '.join(parts)}."
        )
    return "\n".join(lines) + "\n"


# -- evaluation -------------------------------------------------------------


class _StratumRun:
    def __init__(
        self,
        db: Database,
        program: Program,
        relations: tuple[str, ...],
        rules: tuple[Rule, ...],
        provenance: bool,
        jobs: int,
        executor: ThreadPoolExecutor | None,
    ):
        self.db = db
        self.program = program
        self.relations = set(relations)
        self.provenance = provenance
        self.jobs = jobs
        self.executor = executor
        self.nonrecursive: list[Variant] = []
        self.recursive: list[Variant] = []
        for rule in rules:
            for variant in delta_variants(rule, self.relations):
                if variant.delta_index is None:
                    self.nonrecursive.append(variant)
                else:
                    self.recursive.append(variant)
        self.delta: dict[str, RelationStore] = {}

    def _resolve(self, plan: _AtomPlan) -> tuple[RelationStore, RelationStore | None]:
        """Store to scan plus an exclusion store for the stable-minus-delta role."""
        if plan.role == DELTA:
            return self.delta[plan.relation], None
        if plan.role == STABLE_NOT_DELTA:
            return self.db.relation(plan.relation), self.delta.get(plan.relation)
        return self.db.relation(plan.relation), None

    def _prepare_indexes(self, variant: Variant) -> None:
        # eager index construction: parallel workers must not race on the
        # lazily built structures
        for plan in variant.atoms:
            store, _ = self._resolve(plan)
            if len(plan.key_positions) == plan.arity:
                continue
            store.prepare_index(plan.key_positions)

    def _run_variant(self, variant: Variant, new: dict[str, RelationStore]) -> None:
        for check in variant.initial_checks:
            if not check.holds([]):
                return
        if self.executor is not None:
            self._prepare_indexes(variant)
        outer_plan = variant.atoms[0]
        store, exclude = self._resolve(outer_plan)
        key = tuple(
            (0 if is_slot else value) for is_slot, value in outer_plan.key_parts
        )
        # the outer atom never has previously bound variables, so its key
        # holds constants only
        rows = list(store.index_scan(outer_plan.key_positions, key))
        if self.executor is not None and len(rows) >= 2 * self.jobs:
            chunks = [rows[i :: self.jobs] for i in range(self.jobs)]
            futures = [
                self.executor.submit(self._scan_chunk, variant, chunk, exclude, new)
                for chunk in chunks
                if chunk
            ]
            for future in futures:
                future.result()
        else:
            self._scan_chunk(variant, rows, exclude, new)

    def _scan_chunk(self, variant, rows, exclude, new: dict[str, RelationStore]) -> None:
        slots: list[int] = [0] * variant.n_slots
        head_store = self.db.relation(variant.rule.head.relation)
        out_store = new[variant.rule.head.relation]
        head_parts = variant.head_parts
        rule_id = variant.rule.id
        provenance = self.provenance

        def emit(height_max: int) -> None:
            head = tuple(
                slots[value] if is_slot else value for is_slot, value in head_parts
            )
            if provenance:
                height = height_max + 1
                if head_store.contains_with_height_below(head, height):
                    return
                out_store.insert_or_minimize(head, make_annotation(rule_id, height))
            else:
                if head in head_store:
                    return
                out_store.insert_or_minimize(head, EDB_ANNOTATION)

        def match(plan: _AtomPlan, row, skip) -> bool:
            if skip is not None and row in skip:
                return False
            for pos, slot, fills in plan.outs:
                if fills:
                    slots[slot] = row[pos]
                elif slots[slot] != row[pos]:
                    return False
            for neg in plan.negations_after:
                ground = tuple(
                    slots[value] if is_slot else value for is_slot, value in neg.parts
                )
                if ground in self.db.relation(neg.relation):
                    return False
            for check in plan.constraints_after:
                if not check.holds(slots):
                    return False
            return True

        def rec(i: int, height_max: int) -> None:
            plan = variant.atoms[i]
            store, skip = self._resolve(plan)
            last = i == len(variant.atoms) - 1
            if len(plan.key_positions) == plan.arity:
                row = tuple(
                    slots[value] if is_slot else value
                    for is_slot, value in plan.key_parts
                )
                ann = store.annotation(row)
                if ann is None or not match(plan, row, skip):
                    return
                h = max(height_max, ann.height) if provenance else 0
                if last:
                    emit(h)
                else:
                    rec(i + 1, h)
                return
            key = tuple(
                slots[value] if is_slot else value for is_slot, value in plan.key_parts
            )
            for row, ann in store.index_scan(plan.key_positions, key):
                if not match(plan, row, skip):
                    continue
                h = max(height_max, ann.height) if provenance else 0
                if last:
                    emit(h)
                else:
                    rec(i + 1, h)

        plan0 = variant.atoms[0]
        rest = len(variant.atoms) > 1
        for row, ann in rows:
            if not match(plan0, row, exclude):
                continue
            h = ann.height if provenance else 0
            if rest:
                rec(1, h)
            else:
                emit(h)

    def _fresh_new(self) -> dict[str, RelationStore]:
        concurrent = self.executor is not None
        return {
            rel: RelationStore(rel, self.db.relation(rel).arity, concurrent=concurrent)
            for rel in self.relations
        }

    def _merge(
        self,
        new: dict[str, RelationStore],
        stats: EvalStats,
        update_log: list[UpdateEvent] | None,
    ) -> dict[str, RelationStore]:
        delta: dict[str, RelationStore] = {}
        for rel in sorted(new):
            stable = self.db.relation(rel)
            delta_store = RelationStore(rel, stable.arity)
            for row, ann in sorted(new[rel].items_unordered()):
                result = stable.insert_or_minimize(row, ann)
                if result.outcome is InsertOutcome.REJECTED:
                    continue
                stats.rule_firings += 1
                if ann.height > stats.max_height:
                    stats.max_height = ann.height
                if result.outcome is InsertOutcome.UPDATED:
                    stats.annotation_updates += 1
                    if update_log is not None:
                        update_log.append(UpdateEvent(rel, row, result.old, ann))
                delta_store.insert_or_minimize(row, ann)
            delta[rel] = delta_store
        return delta

    def run(
        self,
        stats: EvalStats,
        update_log: list[UpdateEvent] | None,
        iteration_hook=None,
    ) -> int:
        new = self._fresh_new()
        for variant in self.nonrecursive:
            self._run_variant(variant, new)
        self._merge(new, stats, update_log)
        if iteration_hook is not None:
            iteration_hook(self.db)

        iterations = 0
        if not self.recursive:
            return iterations
        # first delta: everything present at stratum start (inputs included)
        self.delta = {}
        for rel in self.relations:
            stable = self.db.relation(rel)
            delta_store = RelationStore(rel, stable.arity)
            for row, ann in stable.items_unordered():
                delta_store.insert_or_minimize(row, ann)
            self.delta[rel] = delta_store
        while any(len(s) for s in self.delta.values()):
            iterations += 1
            new = self._fresh_new()
            for variant in self.recursive:
                self._run_variant(variant, new)
            self.delta = self._merge(new, stats, update_log)
            if iteration_hook is not None:
                iteration_hook(self.db)
        return iterations


def evaluate(
    program: Program,
    facts: dict[str, list[tuple[int, ...]]] | None = None,
    *,
    edb_heights: dict[tuple[str, tuple[int, ...]], int] | None = None,
    jobs: int = 1,
    provenance: bool = True,
    update_log: list[UpdateEvent] | None = None,
    stratification: Stratification | None = None,
    iteration_hook=None,
) -> tuple[Database, EvalStats]:
    """Evaluate a stratified program; every stored tuple carries the rule
    that produced it and the height of its minimal proof tree.

    `facts` adds input tuples on top of the program's inline facts;
    `edb_heights` assigns nonzero starting heights to chosen input tuples
    (they default to 0).  `iteration_hook(db)` fires after every merge, for
    looking at the evaluation as it climbs.
    """
    if stratification is None:
        stratification = stratify(build_precedence_graph(program), program)
    edb_heights = edb_heights or {}

    db = Database()
    for decl in program.declarations:
        db.add_relation(decl.name, decl.arity)
    for rel, rows in itertools.chain(program.facts.items(), (facts or {}).items()):
        decl = program.decl(rel)
        store = db.relation(rel)
        for raw in rows:
            row = tuple(raw)
            if len(row) != decl.arity:
                raise ValueError(
                    f"fact {rel}{row} does not match declared arity {decl.arity}"
                )
            height = edb_heights.get((rel, row), 0) if provenance else 0
            store.insert_or_minimize(row, make_annotation(0, height))

    stats = EvalStats()
    if provenance:
        stats.max_height = max(
            (a.height for _, s in db.relations() for _, a in s.items_unordered()),
            default=0,
        )
    executor = ThreadPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for stratum in stratification.strata:
            run = _StratumRun(
                db,
                program,
                stratum.relations,
                stratum.rules,
                provenance,
                jobs,
                executor,
            )
            stats.iterations.append(run.run(stats, update_log, iteration_hook))
    finally:
        if executor is not None:
            executor.shutdown()
    return db, stats
