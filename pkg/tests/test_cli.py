from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from conftest import POINTS_TO_SOURCE

EXPLAIN_TREE = """\
                                      new("a", "l1")
                                      --------------(R1)
new("a", "l1")      assign("b", "a")  vpt("a", "l1")
--------------(R1)  ------------------------------------(R2)
vpt("a", "l1")                 vpt("b", "l1")                 "a" != "b"
------------------------------------------------------------------------(R4)
                            alias("a", "b")
"""

NEGATION_TRANSCRIPT = """\
Enter command > explainnegation vpt("b", "l4")
1: vpt(Var, Obj) :-
   new(Var, Obj).

2: vpt(Var, Obj) :-
   assign(Var, Var2),
   vpt(Var2, Obj).

3: vpt(Var, Obj) :-
   load(Var, Y, F),
   store(P, F, Q),
   vpt(Q, Obj),
   alias(P, Y).

Pick a rule number: 2
Pick a value for Var2: d
assign("b", "d") ✗  vpt("d", "l4") ✓
------------------------------------(R2)
           vpt("b", "l4")
""" + "Enter command > \n"


@pytest.fixture(scope="module")
def program_file(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("cli") / "points_to.dl"
    path.write_text(POINTS_TO_SOURCE)
    return path


def run_cli(*args: str, stdin: str = "") -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "provlog", *args],
        input=stdin,
        capture_output=True,
        text=True,
        timeout=120,
    )


def test_output_files_with_provenance(program_file, tmp_path):
    out = tmp_path / "out"
    result = run_cli(str(program_file), "--output", str(out))
    assert result.returncode == 0, result.stderr
    alias = (out / "alias.csv").read_text()
    assert alias == "a\tb\t4\t3\nb\ta\t4\t3\n"
    vpt = (out / "vpt.csv").read_text()
    assert vpt.count("\n") == 4


def test_output_files_without_provenance(program_file, tmp_path):
    out = tmp_path / "out"
    result = run_cli(str(program_file), "--no-provenance", "--output", str(out))
    assert result.returncode == 0
    assert (out / "alias.csv").read_text() == "a\tb\nb\ta\n"


def test_jobs_flag_produces_identical_outputs(program_file, tmp_path):
    out1, out8 = tmp_path / "out1", tmp_path / "out8"
    assert run_cli(str(program_file), "--output", str(out1)).returncode == 0
    assert run_cli(str(program_file), "--jobs", "8", "--output", str(out8)).returncode == 0
    for name in ("vpt.csv", "alias.csv"):
        assert (out1 / name).read_bytes() == (out8 / name).read_bytes()


def test_missing_file_exit_code():
    result = run_cli("/nonexistent/prog.dl")
    assert result.returncode == 1
    assert "/nonexistent/prog.dl" in result.stderr


def test_user_error_exit_code(tmp_path):
    bad = tmp_path / "bad.dl"
    bad.write_text(".decl p(x: symbol)\np(X) :- q(X).\n")
    result = run_cli(str(bad))
    assert result.returncode == 1
    assert "undeclared relation" in result.stderr


def test_stats_json(program_file):
    result = run_cli(str(program_file), "--stats")
    assert result.returncode == 0
    payload = json.loads(result.stdout)
    assert payload["ruleFirings"] == 6
    assert payload["annotationUpdates"] == 0
    assert payload["maxHeight"] == 3


def test_dump_strata(program_file):
    result = run_cli(str(program_file), "--dump-strata")
    assert result.stdout.startswith("0: new assign load store\n1: vpt alias\n")


def test_dump_instrumented(program_file):
    result = run_cli(str(program_file), "--dump-instrumented")
    assert "r2: vpt(Var, Obj, 2, max(h1, h2) + 1)" in result.stdout


def test_oracle_flag(program_file):
    result = run_cli(str(program_file), "--oracle")
    assert result.returncode == 0
    assert "oracle check passed (14 tuples)" in result.stdout


def test_facts_dir(tmp_path):
    src = """\
.decl edge(x: symbol, y: symbol)
.decl path(x: symbol, y: symbol)
.input edge
.output path
path(X, Y) :- edge(X, Y).
path(X, Z) :- path(X, Y), edge(Y, Z).
"""
    prog = tmp_path / "tc.dl"
    prog.write_text(src)
    facts = tmp_path / "facts"
    facts.mkdir()
    (facts / "edge.facts").write_text("a\tb\nb\tc\n")
    out = tmp_path / "out"
    result = run_cli(str(prog), "--facts", str(facts), "--output", str(out))
    assert result.returncode == 0
    assert (out / "path.csv").read_text() == (
        "a\tb\t1\t1\na\tc\t2\t2\nb\tc\t1\t1\n"
    )


def test_repl_explain_transcript(program_file):
    result = run_cli(str(program_file), "--explain", stdin='explain alias("a", "b")\n')
    assert result.returncode == 0
    expected = 'Enter command > explain alias("a", "b")\n' + EXPLAIN_TREE + "Enter command > \n"
    assert result.stdout == expected


def test_repl_transcript_is_byte_stable(program_file):
    stdin = 'explain alias("a", "b")\nsetdepth 2\nexplain alias("a", "b")\nquit\n'
    first = run_cli(str(program_file), "--explain", stdin=stdin)
    second = run_cli(str(program_file), "--explain", stdin=stdin)
    assert first.stdout == second.stdout
    assert first.returncode == 0
    assert "Fragment depth set to 2" in first.stdout


def test_repl_setdepth_limits_fragment(program_file):
    stdin = 'setdepth 2\nexplain alias("a", "b")\nquit\n'
    result = run_cli(str(program_file), "--explain", stdin=stdin)
    # at depth 2 the inner vpt("a", "l1") stays unexpanded: exactly two
    # inference lines for R1/R2 are gone compared to the full tree
    assert result.stdout.count("(R1)") == 1
    assert result.stdout.count("(R2)") == 1
    assert result.stdout.count("(R4)") == 1


def test_repl_negation_transcript_matches_golden(program_file):
    stdin = 'explainnegation vpt("b", "l4")\n2\nd\n'
    result = run_cli(str(program_file), "--explain", stdin=stdin)
    assert result.returncode == 0
    assert result.stdout == NEGATION_TRANSCRIPT


def test_repl_negation_immediate_subproof(program_file):
    stdin = 'explainnegation vpt("b", "l4")\n1\nquit\n'
    result = run_cli(str(program_file), "--explain", stdin=stdin)
    assert 'new("b", "l4") ✗' in result.stdout


def test_repl_negation_of_derivable_tuple(program_file):
    stdin = 'explainnegation vpt("a", "l1")\nquit\n'
    result = run_cli(str(program_file), "--explain", stdin=stdin)
    assert "derivable" in result.stdout


def test_repl_negation_with_constraint_rule(program_file):
    # alias(a, d) is absent; rule 4 leaves Obj unbound and carries the
    # disequality, which holds under the head bindings
    stdin = 'explainnegation alias("a", "d")\n4\nl1\nquit\n'
    result = run_cli(str(program_file), "--explain", stdin=stdin)
    assert "Pick a value for Obj: l1" in result.stdout
    assert 'vpt("a", "l1") ✓' in result.stdout
    assert 'vpt("d", "l1") ✗' in result.stdout
    assert '"a" != "d" ✓' in result.stdout


def test_repl_json_mode_round_trips(program_file):
    stdin = 'format json\nexplain alias("a", "b")\nquit\n'
    result = run_cli(str(program_file), "--explain", stdin=stdin)
    start = result.stdout.index("{")
    end = result.stdout.rindex("}") + 1
    payload = json.loads(result.stdout[start:end])
    assert payload["tuple"] == ["alias", "a", "b"]
    assert payload["rule"] == 4 and payload["height"] == 3

    def count(node) -> int:
        if node["kind"] == "constraint":
            return 1
        return 1 + sum(count(c) for c in node["children"])

    assert count(payload) == 8


def test_repl_errors(program_file):
    stdin = "explain nosuch(1)\nexplain vpt(\nfrobnicate\nquit\n"
    result = run_cli(str(program_file), "--explain", stdin=stdin)
    assert result.returncode == 0
    assert "unknown relation nosuch" in result.stdout
    assert "cannot parse tuple literal" in result.stdout
    assert "Unknown command: frobnicate" in result.stdout


def test_repl_explain_unknown_tuple(program_file):
    result = run_cli(str(program_file), "--explain", stdin='explain vpt("b", "l4")\nquit\n')
    assert "error:" in result.stdout and "not in the store" in result.stdout


def test_repl_numbers_in_tuple_literals(tmp_path):
    from provlog.bench import update_cascade_source

    prog = tmp_path / "cascade.dl"
    prog.write_text(update_cascade_source(3))
    result = run_cli(str(prog), "--explain", stdin='explain wlift("b0", 1)\nquit\n')
    assert result.returncode == 0
    # numbers render bare, symbols quoted; the ladder step is an input leaf
    assert 'wlift("b0", 0)  wstep(0, 1)' in result.stdout
    assert "(R" in result.stdout

    bad = run_cli(str(prog), "--explain", stdin='explain wlift("b0", x)\nquit\n')
    assert "is not a number" in bad.stdout
