"""Debugging queries over an evaluated store.

For a stored tuple, `subproof` runs a goal search over the rule recorded in
its annotation: it finds the first body configuration whose variable
bindings agree with the tuple, whose constraints hold, and whose members
all have stored heights below the tuple's own, stopping at the first hit.
Recursion over subproofs yields minimal-height proof-tree fragments.

For an absent tuple, the user picks a candidate rule and values for its
unbound variables; the instantiated body is then marked part by part as
holding or failing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .ast import Atom, Constant, Program, Rule, Variable
from .oracle import _compare  # shared comparison-operator semantics
from .store import Annotation, Database

DEFAULT_FRAGMENT_DEPTH = 5


class ExplorerError(Exception):
    pass


class UnknownTuple(ExplorerError):
    pass


class IsEdb(ExplorerError):
    pass


class TupleExists(ExplorerError):
    pass


class NotFound(ExplorerError):
    """The stored annotation has no matching body configuration; this
    signals a corrupted store and is surfaced as an internal error."""


class UnificationError(ExplorerError):
    pass


class IncompleteBindings(ExplorerError):
    pass


@dataclass
class ConstraintLeaf:
    text: str
    holds: bool = True


@dataclass
class ProofNode:
    relation: str
    args: tuple[int, ...]
    rule: int  # 0: input leaf
    height: int
    expanded: bool
    children: list[Union["ProofNode", ConstraintLeaf]] = field(default_factory=list)

    def node_count(self) -> int:
        total = 1
        for child in self.children:
            total += child.node_count() if isinstance(child, ProofNode) else 1
        return total

    def tree_height(self) -> int:
        tuple_children = [c for c in self.children if isinstance(c, ProofNode)]
        if not tuple_children:
            return self.height if self.rule == 0 else 0
        return 1 + max(c.tree_height() for c in tuple_children)


@dataclass
class FailedPart:
    kind: str  # "atom" | "negation" | "constraint"
    text: str
    holds: bool
    relation: str | None = None
    args: tuple[int, ...] | None = None


@dataclass
class FailedSubproof:
    relation: str
    args: tuple[int, ...]
    rule: int
    parts: list[FailedPart]


@dataclass
class NegationSession:
    relation: str
    args: tuple[int, ...]
    step: str = "pick-rule"  # pick-rule -> bind-variables -> done
    candidates: list[Rule] = field(default_factory=list)
    rule: Rule | None = None
    free_variables: list[str] = field(default_factory=list)
    bindings: dict[str, int] = field(default_factory=dict)


def _unify_head(head: Atom, args: tuple[int, ...]) -> dict[str, int] | None:
    bindings: dict[str, int] = {}
    for term, value in zip(head.args, args):
        if isinstance(term, Constant):
            if term.value != value:
                return None
        else:
            bound = bindings.get(term.name)
            if bound is None:
                bindings[term.name] = value
            elif bound != value:
                return None
    return bindings


class Explorer:
    """Read-only query layer over a completed database."""

    def __init__(self, db: Database, program: Program):
        self.db = db
        self.program = program

    # -- existence ---------------------------------------------------------

    def annotation(self, relation: str, args: tuple[int, ...]) -> Annotation | None:
        if relation not in self.db:
            raise UnknownTuple(f"unknown relation {relation}")
        return self.db.relation(relation).annotation(args)

    def subproof(
        self, relation: str, args: tuple[int, ...]
    ) -> tuple[int, list[tuple[str, tuple[int, ...], Annotation]], list[ConstraintLeaf]]:
        ann = self.annotation(relation, args)
        if ann is None:
            raise UnknownTuple(f"{self.program.tuple_text(relation, args)} is not in the store")
        if ann.height == 0:
            raise IsEdb(f"{self.program.tuple_text(relation, args)} is an input tuple")
        rule = self.program.rule(ann.rule)
        bindings = _unify_head(rule.head, args)
        if bindings is None:
            raise NotFound(
                f"annotation of {self.program.tuple_text(relation, args)} does not unify"
            )
        config = self._goal_search(rule, bindings, ann.height)
        if config is None:
            raise NotFound(
                f"no body configuration below height {ann.height} for "
                f"{self.program.tuple_text(relation, args)}"
            )
        rows, full_bindings = config
        children = []
        for atom, row in zip(rule.body, rows):
            child_ann = self.db.relation(atom.relation).annotation(row)
            children.append((atom.relation, row, child_ann))
        leaves = self._rule_leaves(rule, full_bindings)
        return ann.rule, children, leaves

    def _rule_leaves(self, rule: Rule, bindings: dict[str, int]) -> list[ConstraintLeaf]:
        leaves = []
        for neg in rule.negations:
            ground = tuple(
                t.value if isinstance(t, Constant) else bindings[t.name]
                for t in neg.args
            )
            leaves.append(ConstraintLeaf(f"!{self.program.tuple_text(neg.relation, ground)}"))
        types = self.program.variable_types(rule)
        for c in rule.constraints:
            leaves.append(ConstraintLeaf(self._constraint_instance_text(c, bindings, types)))
        return leaves

    def _constraint_instance_text(self, c, bindings, types) -> str:
        def side(term):
            if isinstance(term, Variable):
                value = bindings[term.name]
                attr_type = types.get(term.name, "symbol")
            else:
                value = term.value
                attr_type = "symbol" if term.symbol else "number"
            if attr_type == "symbol":
                return f'"{self.program.symbols.name(value)}"'
            return str(value)

        return f"{side(c.lhs)} {c.op} {side(c.rhs)}"

    def _atom_order(self, rule: Rule, seed: dict[str, int]) -> list[int]:
        """Greedy most-bound-first join order for the goal search; ties keep
        body order, so the first configuration found stays deterministic."""
        bound = set(seed)
        remaining = list(range(len(rule.body)))
        order: list[int] = []
        while remaining:
            def free_score(i: int) -> tuple[int, int, int]:
                atom = rule.body[i]
                free = sum(
                    1
                    for t in atom.args
                    if isinstance(t, Variable) and t.name not in bound
                )
                return (free, len(self.db.relation(atom.relation)), i)

            best = min(remaining, key=free_score)
            order.append(best)
            remaining.remove(best)
            bound |= {v.name for v in rule.body[best].variables()}
        return order

    def _goal_search(
        self, rule: Rule, seed: dict[str, int], height_bound: int
    ) -> tuple[list[tuple[int, ...]], dict[str, int]] | None:
        """First body configuration matching the head bindings with every
        member strictly below the height bound."""
        order = self._atom_order(rule, seed)
        rows: list[tuple[int, ...] | None] = [None] * len(rule.body)

        def constraints_decided(bindings: dict[str, int]) -> bool | None:
            # False as soon as any fully bound constraint or negation fails
            for c in rule.constraints:
                names = [v.name for v in c.variables()]
                if all(n in bindings for n in names):
                    lhs = c.lhs.value if isinstance(c.lhs, Constant) else bindings[c.lhs.name]
                    rhs = c.rhs.value if isinstance(c.rhs, Constant) else bindings[c.rhs.name]
                    if not _compare(c.op, lhs, rhs):
                        return False
            for neg in rule.negations:
                names = [v.name for v in neg.variables()]
                if all(n in bindings for n in names):
                    ground = tuple(
                        t.value if isinstance(t, Constant) else bindings[t.name]
                        for t in neg.args
                    )
                    if ground in self.db.relation(neg.relation):
                        return False
            return True

        def search(i: int, bindings: dict[str, int]):
            if i == len(rule.body):
                yield list(rows), bindings
                return
            atom = rule.body[order[i]]
            store = self.db.relation(atom.relation)
            key_positions: list[int] = []
            key_values: list[int] = []
            free: list[tuple[int, str]] = []
            for pos, term in enumerate(atom.args):
                if isinstance(term, Constant):
                    key_positions.append(pos)
                    key_values.append(term.value)
                elif term.name in bindings:
                    key_positions.append(pos)
                    key_values.append(bindings[term.name])
                else:
                    free.append((pos, term.name))
            if not free:
                row = tuple(
                    t.value if isinstance(t, Constant) else bindings[t.name]
                    for t in atom.args
                )
                ann = store.annotation(row)
                matches = [(row, ann)] if ann is not None else []
            else:
                matches = store.index_scan(tuple(key_positions), tuple(key_values))
            for row, ann in matches:
                if ann.height >= height_bound:
                    continue
                extended = dict(bindings)
                clash = False
                for pos, name in free:
                    prev = extended.get(name)
                    if prev is None:
                        extended[name] = row[pos]
                    elif prev != row[pos]:
                        clash = True
                        break
                if clash or constraints_decided(extended) is False:
                    continue
                rows[order[i]] = row
                yield from search(i + 1, extended)
                rows[order[i]] = None

        for rows_out, bindings_out in search(0, dict(seed)):
            return rows_out, bindings_out
        return None

    def explain(
        self, relation: str, args: tuple[int, ...], depth: int | None = DEFAULT_FRAGMENT_DEPTH
    ) -> ProofNode:
        ann = self.annotation(relation, args)
        if ann is None:
            raise UnknownTuple(f"{self.program.tuple_text(relation, args)} is not in the store")
        return self._expand(relation, args, ann, depth)

    def _expand(
        self, relation: str, args: tuple[int, ...], ann: Annotation, depth: int | None
    ) -> ProofNode:
        if ann.height == 0:
            return ProofNode(relation, args, 0, 0, expanded=True)
        if depth is not None and depth <= 0:
            return ProofNode(relation, args, ann.rule, ann.height, expanded=False)
        rule_id, children, leaves = self.subproof(relation, args)
        node = ProofNode(relation, args, rule_id, ann.height, expanded=True)
        next_depth = None if depth is None else depth - 1
        for child_rel, child_row, child_ann in children:
            node.children.append(self._expand(child_rel, child_row, child_ann, next_depth))
        node.children.extend(leaves)
        return node

    # -- non-existence -----------------------------------------------------

    def negation_candidates(self, relation: str, args: tuple[int, ...]) -> list[Rule]:
        if not self.program.has_relation(relation):
            raise UnknownTuple(f"unknown relation {relation}")
        if self.annotation(relation, args) is not None:
            raise TupleExists(
                f"{self.program.tuple_text(relation, args)} is derivable; explain it instead"
            )
        return self.program.rules_for(relation)

    def negation_free_variables(
        self, rule: Rule, relation: str, args: tuple[int, ...]
    ) -> list[str]:
        bindings = _unify_head(rule.head, args)
        if bindings is None:
            raise UnificationError(
                f"head of rule {rule.id} does not unify with "
                f"{self.program.tuple_text(relation, args)}"
            )
        free: list[str] = []
        for atom in (*rule.body, *rule.negations):
            for v in atom.variables():
                if v.name not in bindings and v.name not in free:
                    free.append(v.name)
        for c in rule.constraints:
            for v in c.variables():
                if v.name not in bindings and v.name not in free:
                    free.append(v.name)
        return free

    def evaluate_failed_subproof(
        self,
        rule: Rule,
        relation: str,
        args: tuple[int, ...],
        bindings: dict[str, int],
    ) -> FailedSubproof:
        head_bindings = _unify_head(rule.head, args)
        if head_bindings is None:
            raise UnificationError(
                f"head of rule {rule.id} does not unify with "
                f"{self.program.tuple_text(relation, args)}"
            )
        full = dict(head_bindings)
        full.update(bindings)
        missing = [
            name
            for name in self.negation_free_variables(rule, relation, args)
            if name not in full
        ]
        if missing:
            raise IncompleteBindings(f"missing values for {', '.join(missing)}")

        parts: list[FailedPart] = []
        types = self.program.variable_types(rule)
        for atom in rule.body:
            row = tuple(
                t.value if isinstance(t, Constant) else full[t.name] for t in atom.args
            )
            holds = row in self.db.relation(atom.relation)
            parts.append(
                FailedPart(
                    "atom",
                    self.program.tuple_text(atom.relation, row),
                    holds,
                    atom.relation,
                    row,
                )
            )
        for neg in rule.negations:
            row = tuple(
                t.value if isinstance(t, Constant) else full[t.name] for t in neg.args
            )
            holds = row not in self.db.relation(neg.relation)
            parts.append(
                FailedPart(
                    "negation",
                    f"!{self.program.tuple_text(neg.relation, row)}",
                    holds,
                    neg.relation,
                    row,
                )
            )
        for c in rule.constraints:
            lhs = c.lhs.value if isinstance(c.lhs, Constant) else full[c.lhs.name]
            rhs = c.rhs.value if isinstance(c.rhs, Constant) else full[c.rhs.name]
            parts.append(
                FailedPart(
                    "constraint",
                    self._constraint_instance_text(c, full, types),
                    _compare(c.op, lhs, rhs),
                )
            )
        if all(p.holds for p in parts):
            raise AssertionError(
                f"all parts hold, so {self.program.tuple_text(relation, args)} "
                "would be derivable"
            )
        return FailedSubproof(relation, args, rule.id, parts)

    def start_negation(self, relation: str, args: tuple[int, ...]) -> NegationSession:
        candidates = self.negation_candidates(relation, args)
        return NegationSession(relation, args, candidates=candidates)

    def choose_rule(self, session: NegationSession, rule_id: int) -> None:
        if session.step != "pick-rule":
            raise ExplorerError("rule already chosen")
        chosen = next((r for r in session.candidates if r.id == rule_id), None)
        if chosen is None:
            raise ExplorerError(f"rule {rule_id} is not a candidate")
        session.rule = chosen
        session.free_variables = self.negation_free_variables(
            chosen, session.relation, session.args
        )
        session.step = "bind-variables" if session.free_variables else "done"

    def bind_variable(self, session: NegationSession, name: str, value: int) -> None:
        if session.step != "bind-variables":
            raise ExplorerError("session is not waiting for variable values")
        if name not in session.free_variables:
            raise ExplorerError(f"{name} is not an unbound variable here")
        session.bindings[name] = value
        if all(v in session.bindings for v in session.free_variables):
            session.step = "done"

    def finish_negation(self, session: NegationSession) -> FailedSubproof:
        if session.step != "done" or session.rule is None:
            raise ExplorerError("session is not complete")
        return self.evaluate_failed_subproof(
            session.rule, session.relation, session.args, session.bindings
        )
