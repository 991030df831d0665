"""Reference implementations used by tests and the --oracle flag.

Everything here is deliberately unoptimized and independent of the engine:
rule bodies are matched by full scans over plain tuple sets, each round
re-instantiates every rule from scratch, and minimal proof heights are
computed by an explicit level-by-level construction (tuples entering at
their input heights, a derived tuple entering one level above the highest
level among some generating body).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .ast import Atom, Constant, Program, Rule, Variable
from .stratification import Stratification, build_precedence_graph, stratify

Instance = dict[str, set[tuple[int, ...]]]
HeightMap = dict[tuple[str, tuple[int, ...]], int]


class BudgetExceeded(Exception):
    pass


class NotDerivable(Exception):
    pass


DEFAULT_TUPLE_BUDGET = 200_000


def _compare(op: str, lhs: int, rhs: int) -> bool:
    if op == "=":
        return lhs == rhs
    if op == "!=":
        return lhs != rhs
    if op == "<":
        return lhs < rhs
    if op == "<=":
        return lhs <= rhs
    if op == ">":
        return lhs > rhs
    return lhs >= rhs


def _bind_atom(
    atom: Atom, row: tuple[int, ...], bindings: dict[str, int]
) -> dict[str, int] | None:
    """Extend bindings so that atom matches row, or None on clash."""
    out = bindings
    for term, value in zip(atom.args, row):
        if isinstance(term, Constant):
            if term.value != value:
                return None
        else:
            bound = out.get(term.name)
            if bound is None:
                if out is bindings:
                    out = dict(bindings)
                out[term.name] = value
            elif bound != value:
                return None
    return out if out is not bindings else dict(bindings)


def _ground(atom: Atom, bindings: dict[str, int]) -> tuple[int, ...]:
    return tuple(
        t.value if isinstance(t, Constant) else bindings[t.name] for t in atom.args
    )


def _checks_hold(rule: Rule, bindings: dict[str, int], neg_instance: Instance) -> bool:
    for c in rule.constraints:
        lhs = c.lhs.value if isinstance(c.lhs, Constant) else bindings[c.lhs.name]
        rhs = c.rhs.value if isinstance(c.rhs, Constant) else bindings[c.rhs.name]
        if not _compare(c.op, lhs, rhs):
            return False
    for atom in rule.negations:
        if _ground(atom, bindings) in neg_instance.get(atom.relation, ()):
            return False
    return True


def iter_instantiations(
    rule: Rule,
    instance: Instance,
    head: tuple[int, ...] | None = None,
    negation_instance: Instance | None = None,
):
    """Yield (head_tuple, body_rows, bindings) for every valid instantiation
    of the rule over `instance`, by plain nested scans in sorted tuple order.

    When `head` is given, only instantiations producing that exact head are
    produced (the head atom is unified with it first).  Negated atoms are
    checked against `negation_instance` when given: the truth of a negation
    depends on the completed lower strata even where the positive side of
    the search is restricted (for example to a height level).
    """
    seed: dict[str, int] = {}
    if head is not None:
        seed = _bind_atom(rule.head, head, {})  # type: ignore[assignment]
        if seed is None:
            return
    neg_instance = instance if negation_instance is None else negation_instance

    def search(i: int, bindings: dict[str, int], rows: list[tuple[int, ...]]):
        if i == len(rule.body):
            if _checks_hold(rule, bindings, neg_instance):
                yield _ground(rule.head, bindings), tuple(rows), bindings
            return
        atom = rule.body[i]
        for row in sorted(instance.get(atom.relation, ())):
            extended = _bind_atom(atom, row, bindings)
            if extended is None:
                continue
            rows.append(row)
            yield from search(i + 1, extended, rows)
            rows.pop()

    yield from search(0, seed, [])


def immediate_consequence_step(program: Program, instance: Instance, rules: list[Rule] | None = None) -> Instance:
    """One round of applying rules: the input plus every derivable head."""
    out: Instance = {rel: set(rows) for rel, rows in instance.items()}
    for rule in rules if rules is not None else program.rules:
        for head, _, _ in iter_instantiations(rule, instance):
            out.setdefault(rule.head.relation, set()).add(head)
    return out


def _base_instance(program: Program, extra_facts=None) -> Instance:
    instance: Instance = {d.name: set() for d in program.declarations}
    for rel, rows in program.facts.items():
        instance[rel].update(rows)
    if extra_facts:
        for rel, rows in extra_facts.items():
            instance[rel].update(tuple(r) for r in rows)
    return instance


def naive_fixpoint(
    program: Program,
    extra_facts=None,
    budget: int = DEFAULT_TUPLE_BUDGET,
    stratification: Stratification | None = None,
) -> Instance:
    """Least fixpoint per stratum in topological order."""
    if stratification is None:
        stratification = stratify(build_precedence_graph(program), program)
    instance = _base_instance(program, extra_facts)
    for stratum in stratification.strata:
        if not stratum.rules:
            continue
        while True:
            nxt = immediate_consequence_step(program, instance, list(stratum.rules))
            if sum(len(s) for s in nxt.values()) > budget:
                raise BudgetExceeded(f"more than {budget} tuples")
            if all(nxt[rel] == instance.get(rel, set()) for rel in nxt):
                break
            instance = nxt
    return instance


def provenance_fixpoint(
    program: Program,
    edb_heights: HeightMap | None = None,
    extra_facts=None,
    budget: int = DEFAULT_TUPLE_BUDGET,
) -> tuple[Instance, HeightMap]:
    """Instance plus the minimal proof height of every tuple.

    Input tuples enter at their given heights (0 by default); a derived
    tuple enters one level above the highest entry level among the bodies
    of some generating instantiation.
    """
    edb_heights = edb_heights or {}
    stratification = stratify(build_precedence_graph(program), program)
    instance = _base_instance(program, extra_facts)
    heights: HeightMap = {}

    for stratum in stratification.strata:
        # negation truth is decided by the completed lower strata, never by
        # the level a tuple happens to enter at
        complete: Instance = {d.name: set() for d in program.declarations}
        for rel, row in heights:
            complete[rel].add(row)

        pending: dict[tuple[str, tuple[int, ...]], int] = {}
        for rel in stratum.relations:
            for row in instance.get(rel, ()):
                pending[(rel, row)] = edb_heights.get((rel, row), 0)
        # Tuples carried over from earlier strata re-enter as they become
        # available; this stratum's own inputs queue at their input height.
        buckets: dict[int, list[tuple[str, tuple[int, ...]]]] = {}
        for (rel, row), h in heights.items():
            buckets.setdefault(h, []).append((rel, row))
        available: Instance = {d.name: set() for d in program.declarations}
        seen: set[tuple[str, tuple[int, ...]]] = set(heights)

        rules = list(stratum.rules)
        k = 0
        while True:
            for rel, row in buckets.pop(k - 1, []):
                available[rel].add(row)
            grew = False
            for key, preset in list(pending.items()):
                if preset == k:
                    del pending[key]
                    if key not in seen:
                        seen.add(key)
                        heights[key] = k
                        buckets.setdefault(k, []).append(key)
                        grew = True
            if k > 0 and rules:
                for rule in rules:
                    rel = rule.head.relation
                    for head, _, _ in iter_instantiations(
                        rule, available, negation_instance=complete
                    ):
                        key = (rel, head)
                        if key not in seen:
                            seen.add(key)
                            heights[key] = k
                            buckets.setdefault(k, []).append(key)
                            grew = True
            if len(seen) > budget:
                raise BudgetExceeded(f"more than {budget} tuples")
            if not grew and not pending and not any(b >= k for b in buckets):
                break
            k += 1

    result: Instance = {d.name: set() for d in program.declarations}
    for rel, row in heights:
        result[rel].add(row)
    return result, heights


def minimal_height(
    program: Program,
    edb_heights: HeightMap | None,
    t: tuple[str, tuple[int, ...]],
    extra_facts=None,
) -> int:
    _, heights = provenance_fixpoint(program, edb_heights, extra_facts)
    if t not in heights:
        raise NotDerivable(f"{t[0]}{t[1]} is not derivable")
    return heights[t]


@dataclass
class OracleNode:
    relation: str
    args: tuple[int, ...]
    rule: int  # 0: input leaf
    height: int
    children: list["OracleNode"] = field(default_factory=list)
    constraints: tuple[str, ...] = ()

    def tree_height(self) -> int:
        if not self.children:
            return self.height if self.rule == 0 else 0
        return 1 + max(c.tree_height() for c in self.children)

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)


def enumerate_min_proof_tree(
    program: Program,
    edb_heights: HeightMap | None,
    t: tuple[str, tuple[int, ...]],
    extra_facts=None,
) -> OracleNode:
    """A full proof tree whose height equals the minimal proof height of t."""
    edb_heights = edb_heights or {}
    instance, heights = provenance_fixpoint(program, edb_heights, extra_facts)
    if t not in heights:
        raise NotDerivable(f"{t[0]}{t[1]} is not derivable")
    inputs = {
        (rel, row): edb_heights.get((rel, row), 0)
        for rel, row in itertools.chain(
            ((r, tuple(a)) for r, rows in program.facts.items() for a in rows),
            ((r, tuple(a)) for r, rows in (extra_facts or {}).items() for a in rows),
        )
    }

    def build(key: tuple[str, tuple[int, ...]]) -> OracleNode:
        rel, row = key
        h = heights[key]
        if key in inputs and inputs[key] == h:
            return OracleNode(rel, row, 0, h)
        for rule in program.rules_for(rel):
            for head, body_rows, bindings in iter_instantiations(rule, instance, head=row):
                body_keys = [
                    (atom.relation, body_rows[i]) for i, atom in enumerate(rule.body)
                ]
                if max((heights[k] for k in body_keys), default=0) + 1 != h:
                    continue
                children = [build(k) for k in body_keys]
                texts = tuple(
                    instantiated_constraint_text(program, rule, c, bindings)
                    for c in rule.constraints
                ) + tuple(f"!{program.tuple_text(a.relation, _ground(a, bindings))}"
                          for a in rule.negations)
                return OracleNode(rel, row, rule.id, h, children, texts)
        raise AssertionError(f"no minimal generating instantiation for {key}")

    return build(t)


def instantiated_constraint_text(program: Program, rule: Rule, c, bindings: dict[str, int]) -> str:
    types = program.variable_types(rule)

    def side(term) -> str:
        if isinstance(term, Variable):
            value = bindings[term.name]
            attr_type = types.get(term.name, "symbol")
        else:
            value = term.value
            attr_type = "symbol" if term.symbol else "number"
        return f'"{program.symbols.name(value)}"' if attr_type == "symbol" else str(value)

    return f"{side(c.lhs)} {c.op} {side(c.rhs)}"
