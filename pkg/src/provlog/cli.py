"""Command-line entry point: evaluate a program, write outputs, and run the
interactive explain REPL."""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from typing import IO

from .ast import Program, ProgramError
from .engine import evaluate, instrumented_text
from .explorer import (
    DEFAULT_FRAGMENT_DEPTH,
    Explorer,
    ExplorerError,
    IsEdb,
    NotFound,
    TupleExists,
    UnificationError,
    UnknownTuple,
)
from .oracle import BudgetExceeded, naive_fixpoint, provenance_fixpoint
from .parser import ParseError, load_fact_files, parse_program
from .render import (
    dump_json,
    failed_subproof_payload,
    proof_node_payload,
    render_failed_subproof,
    render_proof_tree,
    render_rule_listing,
)
from .store import Database
from .stratification import CyclicNegation, build_precedence_graph, strata_text, stratify


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # user errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


_TUPLE_RE = re.compile(r"^([A-Za-z_]\w*)\s*\((.*)\)$")


class TupleLiteralError(Exception):
    pass


def parse_tuple_literal(program: Program, text: str) -> tuple[str, tuple[int, ...]]:
    """`alias("a", "b")` or `p(1, 2)`; symbols quoted or bare, numbers bare."""
    match = _TUPLE_RE.match(text.strip())
    if not match:
        raise TupleLiteralError(f"cannot parse tuple literal: {text.strip()!r}")
    relation = match.group(1)
    if not program.has_relation(relation):
        raise TupleLiteralError(f"unknown relation {relation}")
    decl = program.decl(relation)
    raw_args = [a.strip() for a in match.group(2).split(",")] if match.group(2).strip() else []
    if len(raw_args) != decl.arity:
        raise TupleLiteralError(
            f"{relation} expects {decl.arity} arguments, found {len(raw_args)}"
        )
    values: list[int] = []
    for raw, (_, attr_type) in zip(raw_args, decl.attributes):
        if attr_type == "number":
            try:
                values.append(int(raw))
            except ValueError:
                raise TupleLiteralError(f"{raw!r} is not a number") from None
        else:
            if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
                raw = raw[1:-1]
            if not raw:
                raise TupleLiteralError("empty symbol constant")
            values.append(program.symbols.intern(raw))
    return relation, tuple(values)


class Repl:
    def __init__(self, program: Program, db: Database, out: IO[str], echo: bool):
        self.program = program
        self.explorer = Explorer(db, program)
        self.out = out
        self.echo = echo
        self.depth: int | None = DEFAULT_FRAGMENT_DEPTH
        self.format = "text"

    def _print(self, text: str = "") -> None:
        self.out.write(text + "\n")

    def _ask(self, prompt: str, source: IO[str]) -> str | None:
        self.out.write(prompt)
        self.out.flush()
        line = source.readline()
        if not line:
            self.out.write("\n")
            return None
        answer = line.rstrip("\n")
        if self.echo:
            self.out.write(answer + "\n")
        return answer

    def run(self, source: IO[str]) -> None:
        while True:
            line = self._ask("Enter command > ", source)
            if line is None:
                return
            line = line.strip()
            if not line:
                continue
            if line in ("quit", "exit"):
                return
            try:
                self.dispatch(line, source)
            except TupleLiteralError as err:
                self._print(f"error: {err}")
            except (UnknownTuple, IsEdb, TupleExists, UnificationError, ExplorerError) as err:
                self._print(f"error: {err}")

    def dispatch(self, line: str, source: IO[str]) -> None:
        command, _, rest = line.partition(" ")
        rest = rest.strip()
        if command == "explain":
            self.cmd_explain(rest)
        elif command == "explainnegation":
            self.cmd_explain_negation(rest, source)
        elif command == "setdepth":
            self.cmd_setdepth(rest)
        elif command == "format":
            self.cmd_format(rest)
        else:
            self._print(f"Unknown command: {command}")

    def cmd_explain(self, literal: str) -> None:
        relation, args = parse_tuple_literal(self.program, literal)
        node = self.explorer.explain(relation, args, self.depth)
        if self.format == "json":
            self._print(dump_json(proof_node_payload(self.program, node)))
        else:
            self._print(render_proof_tree(self.program, node))

    def cmd_explain_negation(self, literal: str, source: IO[str]) -> None:
        relation, args = parse_tuple_literal(self.program, literal)
        session = self.explorer.start_negation(relation, args)
        if not session.candidates:
            self._print(f"No rules derive {relation}.")
            return
        self._print(render_rule_listing(self.program, session.candidates))
        self._print()
        answer = self._ask("Pick a rule number: ", source)
        if answer is None:
            return
        try:
            rule_id = int(answer.strip())
        except ValueError:
            self._print(f"error: not a rule number: {answer.strip()!r}")
            return
        self.explorer.choose_rule(session, rule_id)
        var_types = self.program.variable_types(session.rule)
        for name in list(session.free_variables):
            answer = self._ask(f"Pick a value for {name}: ", source)
            if answer is None:
                return
            value = answer.strip()
            if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
                value = value[1:-1]
            if var_types.get(name) == "number":
                try:
                    numeric = int(value)
                except ValueError:
                    self._print(f"error: {value!r} is not a number")
                    return
                self.explorer.bind_variable(session, name, numeric)
            else:
                self.explorer.bind_variable(session, name, self.program.symbols.intern(value))
        failed = self.explorer.finish_negation(session)
        if self.format == "json":
            self._print(dump_json(failed_subproof_payload(self.program, failed)))
        else:
            self._print(render_failed_subproof(self.program, failed))

    def cmd_setdepth(self, rest: str) -> None:
        try:
            depth = int(rest)
        except ValueError:
            self._print(f"error: not a depth: {rest!r}")
            return
        if depth < 1:
            self._print("error: depth must be at least 1")
            return
        self.depth = depth
        self._print(f"Fragment depth set to {depth}")

    def cmd_format(self, rest: str) -> None:
        if rest not in ("text", "json"):
            self._print("error: format is text or json")
            return
        self.format = rest
        self._print(f"Output format set to {rest}")


def write_outputs(program: Program, db: Database, directory: str, provenance: bool) -> None:
    os.makedirs(directory, exist_ok=True)
    for decl in program.declarations:
        if decl.io != "output":
            continue
        types = decl.attribute_types()
        path = os.path.join(directory, f"{decl.name}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            for row, ann in db.relation(decl.name).scan():
                fields = [
                    program.symbols.name(v) if types[i] == "symbol" else str(v)
                    for i, v in enumerate(row)
                ]
                if provenance:
                    fields += [str(ann.rule), str(ann.height)]
                fh.write("\t".join(fields) + "\n")


def check_against_oracle(program: Program, db: Database, facts, provenance: bool) -> list[str]:
    problems: list[str] = []
    expected = naive_fixpoint(program, extra_facts=facts)
    for rel, rows in expected.items():
        have = {r for r, _ in db.relation(rel).scan()}
        if have != rows:
            problems.append(f"{rel}: tuple sets differ")
    if provenance:
        _, heights = provenance_fixpoint(program, extra_facts=facts)
        for (rel, row), h in heights.items():
            ann = db.relation(rel).annotation(row)
            if ann is None or ann.height != h:
                problems.append(
                    f"{program.tuple_text(rel, row)}: height "
                    f"{'missing' if ann is None else ann.height} != {h}"
                )
    return problems


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(
        prog="provlog",
        description="Evaluate a Datalog program with proof annotations and "
        "explore proof trees interactively.",
    )
    parser.add_argument("program", help="Datalog source file (.dl)")
    parser.add_argument("--facts", metavar="DIR", help="directory with <relation>.facts files")
    parser.add_argument("--output", metavar="DIR", help="write .output relations as TSV here")
    parser.add_argument("--jobs", type=int, default=1, metavar="N", help="worker threads")
    parser.add_argument("--no-provenance", action="store_true", help="plain semi-naive evaluation")
    parser.add_argument("--stats", action="store_true", help="print evaluation statistics as JSON")
    parser.add_argument("--explain", action="store_true", help="enter the explain REPL after evaluation")
    parser.add_argument("--oracle", action="store_true", help="cross-check results against the reference evaluator (small inputs only)")
    parser.add_argument("--serve", type=int, metavar="PORT", help="serve the HTTP explorer API")
    parser.add_argument("--dump-strata", action="store_true", help="print the stratification, one stratum per line")
    parser.add_argument("--dump-instrumented", action="store_true", help="print rules rewritten with proof annotations")
    args = parser.parse_args(argv)

    try:
        with open(args.program, encoding="utf-8") as fh:
            source = fh.read()
    except OSError as err:
        print(f"provlog: error: cannot read {args.program}: {err.strerror}", file=sys.stderr)
        return 1

    try:
        program = parse_program(source)
        stratification = stratify(build_precedence_graph(program), program)
        facts = load_fact_files(program, args.facts) if args.facts else None
    except (ParseError, ProgramError, CyclicNegation) as err:
        print(f"provlog: error: {err}", file=sys.stderr)
        return 1

    if args.dump_strata:
        sys.stdout.write(strata_text(stratification))
    if args.dump_instrumented:
        sys.stdout.write(instrumented_text(program))

    provenance = not args.no_provenance
    try:
        db, stats = evaluate(
            program,
            facts,
            jobs=max(args.jobs, 1),
            provenance=provenance,
            stratification=stratification,
        )
    except (NotFound, AssertionError) as err:
        print(f"provlog: internal error: {err}", file=sys.stderr)
        return 2

    if args.oracle:
        try:
            problems = check_against_oracle(program, db, facts, provenance)
        except BudgetExceeded as err:
            print(f"provlog: error: oracle check skipped: {err}", file=sys.stderr)
            return 1
        if problems:
            for p in problems:
                print(f"provlog: oracle mismatch: {p}", file=sys.stderr)
            return 2
        print(f"oracle check passed ({db.total_tuples()} tuples)")

    if args.output:
        write_outputs(program, db, args.output, provenance)
    if args.stats:
        print(json.dumps(stats.as_json()))

    try:
        if args.explain:
            echo = not sys.stdin.isatty()
            Repl(program, db, sys.stdout, echo).run(sys.stdin)
        if args.serve is not None:
            from .api import serve_forever

            serve_forever(db, program, stats, args.serve)
    except (NotFound, AssertionError) as err:
        print(f"provlog: internal error: {err}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        pass
    except BrokenPipeError:
        # reader went away (e.g. piped into head); leave quietly
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return 0


if __name__ == "__main__":
    sys.exit(main())
