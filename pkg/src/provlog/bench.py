"""Program families for trend measurements and crafted update scenarios.

`update_cascade_source` builds the two-chain reachability family in which a
far tuple is rediscovered through progressively cheaper chords, so update
counts grow quadratically with the chain length.  `staged_points_to_source`
stages the points-to example behind a derivation chain so one input analog
arrives at height 6, which makes the first materialization of vpt(b, l1)
land at height 7 before being minimized to 3.
"""

from __future__ import annotations

import random


def staged_points_to_source() -> str:
    """Two-phase points-to program: assign(b, a) is derived at height 6 by a
    chain stratum; the alias rule carries no disequality, so alias(c, c)
    exists and rederives vpt(b, l1) cheaply."""
    return """\
.decl seed(x: symbol)
.decl s1(x: symbol)
.decl s2(x: symbol)
.decl s3(x: symbol)
.decl s4(x: symbol)
.decl s5(x: symbol)
.decl new(v: symbol, o: symbol)
.decl assign(v: symbol, w: symbol)
.decl load(v: symbol, y: symbol, f: symbol)
.decl store(p: symbol, f: symbol, q: symbol)
.decl vpt(v: symbol, o: symbol)
.decl alias(v: symbol, w: symbol)
.output vpt
.output alias

seed(b).
new(a, l1).
new(c, l3).
new(d, l4).
store(c, f, a).
load(e, d, f).
load(b, c, f).
assign(a, b).

s1(X) :- seed(X).
s2(X) :- s1(X).
s3(X) :- s2(X).
s4(X) :- s3(X).
s5(X) :- s4(X).
assign(X, a) :- s5(X).
vpt(Var, Obj) :- new(Var, Obj).
vpt(Var, Obj) :- assign(Var, Var2), vpt(Var2, Obj).
vpt(Var, Obj) :- load(Var, Y, F), store(P, F, Q), vpt(Q, Obj), alias(P, Y).
alias(Var1, Var2) :- vpt(Var1, Obj), vpt(Var2, Obj).
"""


def update_cascade_source(k: int) -> str:
    """Two chains of k nodes; every bottom-chain node has a chord onto the
    head of the top chain, derived at a height that shrinks along the chain.
    Rediscovering the chord target through longer bottom paths updates it
    and each update cascades down the top chain."""
    if k < 2:
        raise ValueError("k must be at least 2")
    bottom = [f"b{i}" for i in range(k)]
    top = [f"t{i}" for i in range(k)]
    lines = [
        ".decl step(m: number, n: number)",
        ".decl src(x: symbol, n: number)",
        ".decl lift(x: symbol, n: number)",
        ".decl edge(x: symbol, y: symbol)",
        ".decl reach(x: symbol, y: symbol)",
        ".output reach",
        "",
    ]
    ladder_top = 2 * k
    lines += [f"step({i}, {i + 1})." for i in range(ladder_top)]
    # chord of bottom node i is derived at height 2*(k-1-i)+2
    for i in range(k - 1):
        lines.append(f"src({bottom[i]}, {2 * (k - 1 - i)}).")
    lines += [f"edge({bottom[i]}, {bottom[i + 1]})." for i in range(k - 1)]
    lines += [f"edge({top[i]}, {top[i + 1]})." for i in range(k - 1)]
    lines.append(f"edge({bottom[k - 1]}, {top[0]}).")
    lines += [
        "",
        "lift(X, 0) :- src(X, _).",
        "lift(X, N) :- lift(X, M), step(M, N), src(X, T), N <= T.",
        f"edge(X, {top[0]}) :- lift(X, T), src(X, T).",
        f"reach({bottom[0]}, N) :- edge({bottom[0]}, N).",
        f"reach({bottom[0]}, N) :- reach({bottom[0]}, M), edge(M, N).",
    ]
    return "\n".join(lines) + "\n"


def transitive_closure_source(
    nodes: int, out_degree: int, seed: int, cycle: bool = False
) -> str:
    """Transitive closure over a random digraph (about nodes*out_degree
    edges).  With `cycle`, the graph is drawn from the family containing a
    Hamiltonian cycle plus random chords: reachability is then total and
    shortest paths stay long, which makes proof trees deep."""
    rng = random.Random(seed)
    lines = [
        ".decl edge(x: symbol, y: symbol)",
        ".decl path(x: symbol, y: symbol)",
        ".input edge",
        ".output path",
        "",
    ]
    edges = set()
    if cycle:
        edges.update((i, (i + 1) % nodes) for i in range(nodes))
    for _ in range(int(nodes * out_degree)):
        a, b = rng.randrange(nodes), rng.randrange(nodes)
        if a != b:
            edges.add((a, b))
    lines += [f"edge(v{a}, v{b})." for a, b in sorted(edges)]
    lines += [
        "",
        "path(X, Y) :- edge(X, Y).",
        "path(X, Z) :- path(X, Y), edge(Y, Z).",
    ]
    return "\n".join(lines) + "\n"
