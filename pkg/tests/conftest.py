from __future__ import annotations

import pytest

from provlog.parser import parse_program

# The running points-to example: four input relations, two outputs, four
# rules (vpt and alias are mutually recursive through r3/r4).
POINTS_TO_SOURCE = """\
.decl new(v: symbol, o: symbol)
.decl assign(v: symbol, w: symbol)
.decl load(v: symbol, y: symbol, f: symbol)
.decl store(p: symbol, f: symbol, q: symbol)
.decl vpt(v: symbol, o: symbol)
.decl alias(v: symbol, w: symbol)
.input new
.input assign
.input load
.input store
.output vpt
.output alias

new(a, l1).
assign(b, a).
new(c, l3).
new(d, l4).
store(c, f, a).
load(e, d, f).
load(b, c, f).
assign(a, b).

vpt(Var, Obj) :- new(Var, Obj).
vpt(Var, Obj) :- assign(Var, Var2), vpt(Var2, Obj).
vpt(Var, Obj) :- load(Var, Y, F), store(P, F, Q), vpt(Q, Obj), alias(P, Y).
alias(Var1, Var2) :- vpt(Var1, Obj), vpt(Var2, Obj), Var1 != Var2.
"""


@pytest.fixture(scope="session")
def points_to():
    return parse_program(POINTS_TO_SOURCE)


def sym(program, text: str) -> int:
    return program.symbols.intern(text)


def row(program, *names: str) -> tuple[int, ...]:
    return tuple(program.symbols.intern(n) for n in names)
