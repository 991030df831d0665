"""Program representation for the Datalog dialect.

Terms, atoms, rules and declarations are plain immutable dataclasses.
Symbol constants are interned to dense integer ids through a per-program
SymbolTable, so tuples flowing through the engine are tuples of ints;
whether an int is a symbol id or a plain number is determined by the
declared attribute type of its position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union


class ProgramError(Exception):
    """Semantic error in a program (undeclared relation, arity clash, ...)."""


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Constant:
    value: int
    symbol: bool = True  # False: plain number literal

    def __str__(self) -> str:
        return f"sym#{self.value}" if self.symbol else str(self.value)


Term = Union[Variable, Constant]

COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")
ORDER_OPS = ("<", "<=", ">", ">=")


@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> list[Variable]:
        return [t for t in self.args if isinstance(t, Variable)]


@dataclass(frozen=True)
class Constraint:
    op: str  # one of COMPARISON_OPS
    lhs: Term
    rhs: Term

    def variables(self) -> list[Variable]:
        return [t for t in (self.lhs, self.rhs) if isinstance(t, Variable)]


@dataclass(frozen=True)
class Rule:
    id: int  # 1-based, source order
    head: Atom
    body: tuple[Atom, ...]  # positive atoms
    negations: tuple[Atom, ...]
    constraints: tuple[Constraint, ...]

    def body_relations(self) -> list[str]:
        return [a.relation for a in self.body]

    def positive_variables(self) -> set[str]:
        return {v.name for atom in self.body for v in atom.variables()}


@dataclass
class RelationDecl:
    name: str
    attributes: tuple[tuple[str, str], ...]  # (attr name, "symbol" | "number")
    io: str = "internal"  # "input" | "output" | "internal"

    @property
    def arity(self) -> int:
        return len(self.attributes)

    def attribute_types(self) -> tuple[str, ...]:
        return tuple(t for _, t in self.attributes)


class SymbolTable:
    """Bidirectional interning of symbol text to dense integer ids."""

    def __init__(self) -> None:
        self._ids: dict[str, int] = {}
        self._names: list[str] = []

    def intern(self, text: str) -> int:
        ident = self._ids.get(text)
        if ident is None:
            ident = len(self._names)
            self._ids[text] = ident
            self._names.append(text)
        return ident

    def name(self, ident: int) -> str:
        return self._names[ident]

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, text: str) -> bool:
        return text in self._ids


@dataclass
class Program:
    declarations: list[RelationDecl]
    rules: list[Rule]
    facts: dict[str, list[tuple[int, ...]]]  # relation -> ground argument tuples
    symbols: SymbolTable = field(default_factory=SymbolTable)

    def __post_init__(self) -> None:
        self._decls = {d.name: d for d in self.declarations}
        self._rules_by_head: dict[str, list[Rule]] = {}
        for rule in self.rules:
            self._rules_by_head.setdefault(rule.head.relation, []).append(rule)

    def decl(self, relation: str) -> RelationDecl:
        try:
            return self._decls[relation]
        except KeyError:
            raise ProgramError(f"unknown relation '{relation}'") from None

    def has_relation(self, relation: str) -> bool:
        return relation in self._decls

    def rules_for(self, relation: str) -> list[Rule]:
        return self._rules_by_head.get(relation, [])

    def rule(self, rule_id: int) -> Rule:
        if not 1 <= rule_id <= len(self.rules):
            raise ProgramError(f"no rule with number {rule_id}")
        return self.rules[rule_id - 1]

    # -- text helpers -------------------------------------------------

    def constant_text(self, relation: str, position: int, value: int) -> str:
        if self.decl(relation).attribute_types()[position] == "symbol":
            return f'"{self.symbols.name(value)}"'
        return str(value)

    def tuple_text(self, relation: str, args: Iterable[int]) -> str:
        parts = [self.constant_text(relation, i, v) for i, v in enumerate(args)]
        return f"{relation}({', '.join(parts)})"

    def term_text(self, term: Term, attr_type: str) -> str:
        if isinstance(term, Variable):
            # generated anonymous variables print back as their source form
            return "_" if term.name.startswith("_") else term.name
        if attr_type == "symbol":
            return f'"{self.symbols.name(term.value)}"'
        return str(term.value)

    def atom_text(self, atom: Atom) -> str:
        types = self.decl(atom.relation).attribute_types()
        inner = ", ".join(self.term_text(t, types[i]) for i, t in enumerate(atom.args))
        return f"{atom.relation}({inner})"

    def constraint_text(self, c: Constraint, var_types: dict[str, str]) -> str:
        def side(term: Term) -> str:
            if isinstance(term, Variable):
                return term.name
            return self.term_text(term, "symbol" if term.symbol else "number")

        return f"{side(c.lhs)} {c.op} {side(c.rhs)}"

    def rule_text(self, rule: Rule, multiline: bool = False) -> str:
        types = self.variable_types(rule)
        parts = [self.atom_text(a) for a in rule.body]
        parts += [f"!{self.atom_text(a)}" for a in rule.negations]
        parts += [self.constraint_text(c, types) for c in rule.constraints]
        head = self.atom_text(rule.head)
        if multiline:
            sep = ",\n   "
            return f"{head} :-\n   {sep.join(parts)}."
        return f"{head} :- {', '.join(parts)}."

    # -- typing -------------------------------------------------------

    def variable_types(self, rule: Rule) -> dict[str, str]:
        """Attribute type of each rule variable, inferred from positive atoms."""
        types: dict[str, str] = {}
        for atom in rule.body:
            attr_types = self.decl(atom.relation).attribute_types()
            for i, term in enumerate(atom.args):
                if isinstance(term, Variable):
                    types.setdefault(term.name, attr_types[i])
        return types

    # -- structural identity (symbol ids replaced by their names) ------

    def structure(self) -> tuple:
        def term_key(term: Term):
            if isinstance(term, Variable):
                return ("var", term.name)
            if term.symbol:
                return ("sym", self.symbols.name(term.value))
            return ("num", term.value)

        def atom_key(atom: Atom):
            return (atom.relation, tuple(term_key(t) for t in atom.args))

        decls = tuple((d.name, d.attributes, d.io) for d in self.declarations)
        rules = tuple(
            (
                r.id,
                atom_key(r.head),
                tuple(atom_key(a) for a in r.body),
                tuple(atom_key(a) for a in r.negations),
                tuple((c.op, term_key(c.lhs), term_key(c.rhs)) for c in r.constraints),
            )
            for r in self.rules
        )
        facts = tuple(
            sorted(
                (rel, tuple(self.constant_text(rel, i, v) for i, v in enumerate(args)))
                for rel, rows in self.facts.items()
                for args in rows
            )
        )
        return (decls, rules, facts)


def check_groundedness(rule: Rule) -> None:
    """Every head/negation/constraint variable must occur in a positive body atom."""
    grounded = rule.positive_variables()
    for v in rule.head.variables():
        if v.name not in grounded:
            raise ProgramError(
                f"ungrounded variable {v.name} in head of rule {rule.id}"
            )
    for atom in rule.negations:
        for v in atom.variables():
            if v.name not in grounded:
                raise ProgramError(
                    f"ungrounded variable {v.name} in negation of rule {rule.id}"
                )
    for c in rule.constraints:
        for v in c.variables():
            if v.name not in grounded:
                raise ProgramError(
                    f"ungrounded variable {v.name} in constraint of rule {rule.id}"
                )
