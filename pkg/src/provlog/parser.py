"""Parser for the Datalog dialect.

Syntax:
    .decl vpt(v: symbol, o: symbol)     declarations (types: symbol | number)
    .input new                          relation is read from <name>.facts
    .output vpt                         relation is written on evaluation
    vpt(Var, Obj) :- new(Var, Obj).     rules; body atoms, !negations, constraints
    new(a, l1).                         inline facts (all arguments constant)
    // line comment

Identifiers starting with an upper-case letter are variables; lower-case
identifiers and quoted strings are symbol constants; bare integers are
number constants; `_` is an anonymous variable (positive body atoms only).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .ast import (
    Atom,
    ORDER_OPS,
    Constant,
    Constraint,
    Program,
    ProgramError,
    RelationDecl,
    Rule,
    SymbolTable,
    Term,
    Variable,
    check_groundedness,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Token:
    kind: str  # IDENT STRING NUMBER PUNCT EOF
    text: str
    line: int
    col: int


_PUNCT = (":-", "!=", "<=", ">=", "(", ")", ",", ".", "!", "=", "<", ">", ":")


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r":
            i, col = i + 1, col + 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n and source[j] != '"':
                if source[j] == "\n":
                    raise ParseError("unterminated string", line, col)
                j += 1
            if j >= n:
                raise ParseError("unterminated string", line, col)
            tokens.append(_Token("STRING", source[i + 1 : j], line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and source[i + 1].isdigit()):
            j = i + 1
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(_Token("NUMBER", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(_Token("IDENT", source[i:j], line, col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                tokens.append(_Token("PUNCT", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.symbols = SymbolTable()
        self.declarations: list[RelationDecl] = []
        self.decls: dict[str, RelationDecl] = {}
        self.rules: list[Rule] = []
        self.facts: dict[str, list[tuple[int, ...]]] = {}
        self._anon = 0

    # -- token plumbing -------------------------------------------------

    def _peek(self) -> _Token:
        return self.tokens[self.pos]

    def _next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _expect(self, kind: str, text: str | None = None) -> _Token:
        tok = self._next()
        if tok.kind != kind or (text is not None and tok.text != text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def _at_punct(self, text: str) -> bool:
        tok = self._peek()
        return tok.kind == "PUNCT" and tok.text == text

    # -- grammar ----------------------------------------------------------

    def parse(self) -> Program:
        while self._peek().kind != "EOF":
            if self._at_punct("."):
                self._directive()
            else:
                self._clause()
        program = Program(self.declarations, self.rules, self.facts, self.symbols)
        self._validate(program)
        return program

    def _directive(self) -> None:
        self._expect("PUNCT", ".")
        kw = self._expect("IDENT")
        if kw.text == "decl":
            self._declaration()
        elif kw.text in ("input", "output"):
            name = self._expect("IDENT")
            decl = self.decls.get(name.text)
            if decl is None:
                raise ParseError(f"undeclared relation {name.text}", name.line, name.col)
            decl.io = kw.text
        else:
            raise ParseError(f"unknown directive .{kw.text}", kw.line, kw.col)

    def _declaration(self) -> None:
        name = self._expect("IDENT")
        if name.text in self.decls:
            raise ParseError(f"duplicate declaration of {name.text}", name.line, name.col)
        self._expect("PUNCT", "(")
        attributes: list[tuple[str, str]] = []
        while True:
            attr = self._expect("IDENT")
            self._expect("PUNCT", ":")
            attr_type = self._expect("IDENT")
            if attr_type.text not in ("symbol", "number"):
                raise ParseError(
                    f"attribute type must be symbol or number, found {attr_type.text}",
                    attr_type.line,
                    attr_type.col,
                )
            attributes.append((attr.text, attr_type.text))
            if self._at_punct(","):
                self._next()
                continue
            break
        self._expect("PUNCT", ")")
        decl = RelationDecl(name.text, tuple(attributes))
        self.declarations.append(decl)
        self.decls[name.text] = decl

    def _clause(self) -> None:
        head = self._atom(allow_anonymous=False)
        if self._at_punct("."):
            self._next()
            self._fact(head)
            return
        self._expect("PUNCT", ":-")
        body: list[Atom] = []
        negations: list[Atom] = []
        constraints: list[Constraint] = []
        while True:
            if self._at_punct("!"):
                self._next()
                negations.append(self._atom(allow_anonymous=False))
            else:
                item = self._body_item()
                if isinstance(item, Atom):
                    body.append(item)
                else:
                    constraints.append(item)
            if self._at_punct(","):
                self._next()
                continue
            break
        self._expect("PUNCT", ".")
        if not body:
            tok = self._peek()
            raise ParseError("rule requires at least one positive body atom", tok.line, tok.col)
        rule = Rule(
            id=len(self.rules) + 1,
            head=head,
            body=tuple(body),
            negations=tuple(negations),
            constraints=tuple(constraints),
        )
        self.rules.append(rule)

    def _fact(self, head: Atom) -> None:
        args = []
        for term in head.args:
            if isinstance(term, Variable):
                raise ProgramError(
                    f"fact {head.relation} has non-constant argument {term.name}"
                )
            args.append(term.value)
        self.facts.setdefault(head.relation, []).append(tuple(args))
        self._fact_types = getattr(self, "_fact_types", [])
        self._fact_types.append((head.relation, head.args))

    def _body_item(self) -> Atom | Constraint:
        # Either R(...) or a comparison between two terms.
        tok = self._peek()
        if tok.kind == "IDENT" and self.tokens[self.pos + 1].text == "(" and tok.text[0].islower():
            return self._atom(allow_anonymous=True)
        lhs = self._term(allow_anonymous=False)
        op_tok = self._next()
        if op_tok.kind != "PUNCT" or op_tok.text not in ("=", "!=", "<", "<=", ">", ">="):
            raise ParseError(
                f"expected comparison operator, found {op_tok.text!r}",
                op_tok.line,
                op_tok.col,
            )
        rhs = self._term(allow_anonymous=False)
        return Constraint(op_tok.text, lhs, rhs)

    def _atom(self, allow_anonymous: bool) -> Atom:
        name = self._expect("IDENT")
        if not name.text[0].islower():
            raise ParseError(
                f"relation name must start lower-case, found {name.text}",
                name.line,
                name.col,
            )
        self._expect("PUNCT", "(")
        args: list[Term] = []
        while True:
            args.append(self._term(allow_anonymous))
            if self._at_punct(","):
                self._next()
                continue
            break
        self._expect("PUNCT", ")")
        return Atom(name.text, tuple(args))

    def _term(self, allow_anonymous: bool) -> Term:
        tok = self._next()
        if tok.kind == "STRING":
            return Constant(self.symbols.intern(tok.text), symbol=True)
        if tok.kind == "NUMBER":
            return Constant(int(tok.text), symbol=False)
        if tok.kind == "IDENT":
            if tok.text == "_":
                if not allow_anonymous:
                    raise ParseError(
                        "anonymous variable only allowed in positive body atoms",
                        tok.line,
                        tok.col,
                    )
                self._anon += 1
                return Variable(f"_{self._anon}")
            if tok.text[0] == "_":
                raise ParseError(
                    "identifiers starting with '_' are reserved", tok.line, tok.col
                )
            if tok.text[0].isupper():
                return Variable(tok.text)
            return Constant(self.symbols.intern(tok.text), symbol=True)
        raise ParseError(f"expected term, found {tok.text!r}", tok.line, tok.col)

    # -- validation -------------------------------------------------------

    def _validate(self, program: Program) -> None:
        for rel, rows in program.facts.items():
            if rel not in self.decls:
                raise ProgramError(f"fact for undeclared relation '{rel}'")
        for rel, head_args in getattr(self, "_fact_types", []):
            decl = self.decls[rel]
            self._check_atom_shape(Atom(rel, head_args), decl, context="fact")
        for rule in program.rules:
            for atom in (rule.head, *rule.body, *rule.negations):
                if atom.relation not in self.decls:
                    raise ProgramError(
                        f"undeclared relation '{atom.relation}' in rule {rule.id}"
                    )
                self._check_atom_shape(atom, self.decls[atom.relation], f"rule {rule.id}")
            check_groundedness(rule)
            self._check_rule_types(program, rule)

    def _check_atom_shape(self, atom: Atom, decl: RelationDecl, context: str) -> None:
        if atom.arity != decl.arity:
            raise ProgramError(
                f"arity mismatch in {context}: {atom.relation} expects "
                f"{decl.arity} arguments, found {atom.arity}"
            )
        for i, term in enumerate(atom.args):
            if isinstance(term, Constant):
                want = decl.attribute_types()[i]
                have = "symbol" if term.symbol else "number"
                if want != have:
                    raise ProgramError(
                        f"type mismatch in {context}: argument {i + 1} of "
                        f"{atom.relation} is {want}, found a {have} constant"
                    )

    def _check_rule_types(self, program: Program, rule: Rule) -> None:
        types: dict[str, str] = {}
        for atom in (*rule.body, rule.head, *rule.negations):
            attr_types = self.decls[atom.relation].attribute_types()
            for i, term in enumerate(atom.args):
                if isinstance(term, Variable):
                    prev = types.setdefault(term.name, attr_types[i])
                    if prev != attr_types[i]:
                        raise ProgramError(
                            f"variable {term.name} in rule {rule.id} used as both "
                            f"{prev} and {attr_types[i]}"
                        )

        def term_type(term: Term) -> str:
            if isinstance(term, Variable):
                return types[term.name]
            return "symbol" if term.symbol else "number"

        for c in rule.constraints:
            lt, rt = term_type(c.lhs), term_type(c.rhs)
            if lt != rt:
                raise ProgramError(
                    f"constraint in rule {rule.id} compares {lt} with {rt}"
                )
            if c.op in ORDER_OPS and lt != "number":
                raise ProgramError(
                    f"order comparison in rule {rule.id} requires number-typed terms"
                )


def parse_program(source: str) -> Program:
    """Parse and validate a program; raises ParseError or ProgramError."""
    return _Parser(source).parse()


def program_text(program: Program) -> str:
    """Pretty-print a program so that re-parsing yields the same structure."""
    lines: list[str] = []
    for decl in program.declarations:
        attrs = ", ".join(f"{n}: {t}" for n, t in decl.attributes)
        lines.append(f".decl {decl.name}({attrs})")
        if decl.io != "internal":
            lines.append(f".{decl.io} {decl.name}")
    for rel in (d.name for d in program.declarations):
        for args in program.facts.get(rel, ()):
            lines.append(f"{program.tuple_text(rel, args)}.")
    for rule in program.rules:
        lines.append(program.rule_text(rule))
    return "\n".join(lines) + "\n"


def load_fact_files(program: Program, directory: str) -> dict[str, list[tuple[int, ...]]]:
    """Read <relation>.facts (tab-separated, no header) for every .input relation.

    Missing files count as empty relations. Returns the loaded tuples; the
    program's inline facts are not modified.
    """
    loaded: dict[str, list[tuple[int, ...]]] = {}
    for decl in program.declarations:
        if decl.io != "input":
            continue
        path = os.path.join(directory, f"{decl.name}.facts")
        if not os.path.exists(path):
            continue
        rows: list[tuple[int, ...]] = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != decl.arity:
                    raise ProgramError(
                        f"{path}:{lineno}: expected {decl.arity} fields, found {len(fields)}"
                    )
                args = []
                for value, (_, attr_type) in zip(fields, decl.attributes):
                    if attr_type == "number":
                        try:
                            args.append(int(value))
                        except ValueError:
                            raise ProgramError(
                                f"{path}:{lineno}: {value!r} is not a number"
                            ) from None
                    else:
                        args.append(program.symbols.intern(value))
                rows.append(tuple(args))
        loaded[decl.name] = rows
    return loaded
