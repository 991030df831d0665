"""Precedence graph construction and SCC-based stratification.

Relations are grouped into strata: relations never derived by any rule form
a single leading stratum, then each strongly connected component of the
precedence graph becomes a stratum, in topological order.  A negated
dependency inside a component is rejected (stratified negation).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .ast import Program, Rule


class CyclicNegation(Exception):
    def __init__(self, negated: str, head: str):
        super().__init__(
            f"negation of {negated} in the definition of {head} lies inside a cycle"
        )
        self.negated = negated
        self.head = head


@dataclass
class PrecedenceGraph:
    nodes: tuple[str, ...]  # declaration order
    positive: set[tuple[str, str]]  # (body relation, head relation)
    negative: set[tuple[str, str]]

    def successors(self, node: str) -> list[str]:
        index = {n: i for i, n in enumerate(self.nodes)}
        succ = {dst for src, dst in self.positive | self.negative if src == node}
        return sorted(succ, key=index.__getitem__)

    def edges(self) -> list[tuple[str, str, str]]:
        """All edges as (src, dst, polarity), deterministically ordered."""
        index = {n: i for i, n in enumerate(self.nodes)}
        out = [(s, d, "positive") for s, d in self.positive]
        out += [(s, d, "negative") for s, d in self.negative]
        return sorted(out, key=lambda e: (index[e[0]], index[e[1]], e[2]))


@dataclass
class Stratum:
    relations: tuple[str, ...]  # declaration order
    rules: tuple[Rule, ...]  # rules whose head lies in this stratum, by id


@dataclass
class Stratification:
    strata: list[Stratum]
    stratum_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.stratum_of:
            for i, stratum in enumerate(self.strata):
                for rel in stratum.relations:
                    self.stratum_of[rel] = i


def build_precedence_graph(program: Program) -> PrecedenceGraph:
    nodes = tuple(d.name for d in program.declarations)
    positive: set[tuple[str, str]] = set()
    negative: set[tuple[str, str]] = set()
    for rule in program.rules:
        head = rule.head.relation
        for atom in rule.body:
            positive.add((atom.relation, head))
        for atom in rule.negations:
            negative.add((atom.relation, head))
    return PrecedenceGraph(nodes, positive, negative)


def _tarjan_sccs(nodes: tuple[str, ...], succ: dict[str, list[str]]) -> list[list[str]]:
    """Iterative Tarjan; components returned in reverse topological order."""
    index_of: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    sccs: list[list[str]] = []
    counter = 0

    for root in nodes:
        if root in index_of:
            continue
        work = [(root, iter(succ[root]))]
        index_of[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index_of:
                    index_of[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index_of[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index_of[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                sccs.append(component)
    return sccs


def stratify(graph: PrecedenceGraph, program: Program) -> Stratification:
    decl_index = {n: i for i, n in enumerate(graph.nodes)}
    derived = {r.head.relation for r in program.rules}
    base = [n for n in graph.nodes if n not in derived]

    succ = {n: graph.successors(n) for n in graph.nodes}
    sccs = _tarjan_sccs(graph.nodes, succ)
    component_of: dict[str, int] = {}
    for i, scc in enumerate(sccs):
        for rel in scc:
            component_of[rel] = i

    for src, dst in graph.negative:
        if component_of[src] == component_of[dst]:
            raise CyclicNegation(src, dst)

    # Topological order of derived components, ties broken by declaration order.
    derived_components = [
        i for i, scc in enumerate(sccs) if any(rel in derived for rel in scc)
    ]
    indegree = {i: 0 for i in derived_components}
    out_edges: dict[int, set[int]] = {i: set() for i in derived_components}
    for src, dst in graph.positive | graph.negative:
        cs, cd = component_of[src], component_of[dst]
        if cs != cd and cs in indegree and cd in indegree and cd not in out_edges[cs]:
            out_edges[cs].add(cd)
            indegree[cd] += 1

    def key(component: int) -> int:
        return min(decl_index[rel] for rel in sccs[component])

    ready = [(key(c), c) for c in derived_components if indegree[c] == 0]
    heapq.heapify(ready)
    ordered: list[int] = []
    while ready:
        _, component = heapq.heappop(ready)
        ordered.append(component)
        for nxt in out_edges[component]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(ready, (key(nxt), nxt))
    if len(ordered) != len(derived_components):
        raise AssertionError("precedence graph condensation is not acyclic")

    strata: list[Stratum] = []
    if base:
        strata.append(Stratum(tuple(sorted(base, key=decl_index.__getitem__)), ()))
    rules_by_head: dict[str, list[Rule]] = {}
    for rule in program.rules:
        rules_by_head.setdefault(rule.head.relation, []).append(rule)
    for component in ordered:
        relations = tuple(sorted(sccs[component], key=decl_index.__getitem__))
        rules = sorted(
            (r for rel in relations for r in rules_by_head.get(rel, [])),
            key=lambda r: r.id,
        )
        strata.append(Stratum(relations, tuple(rules)))

    result = Stratification(strata)
    _check(result, program)
    return result


def _check(strat: Stratification, program: Program) -> None:
    for rule in program.rules:
        head = strat.stratum_of[rule.head.relation]
        for atom in rule.body:
            if strat.stratum_of[atom.relation] > head:
                raise AssertionError(
                    f"rule {rule.id}: body relation {atom.relation} above its head"
                )
        for atom in rule.negations:
            if strat.stratum_of[atom.relation] >= head:
                raise CyclicNegation(atom.relation, rule.head.relation)
    seen: set[str] = set()
    for stratum in strat.strata:
        for rel in stratum.relations:
            if rel in seen:
                raise AssertionError(f"relation {rel} in two strata")
            seen.add(rel)
    if seen != {d.name for d in program.declarations}:
        raise AssertionError("strata do not cover all declared relations")


def strata_text(strat: Stratification) -> str:
    lines = [
        f"{i}: {' '.join(s.relations)}" for i, s in enumerate(strat.strata)
    ]
    return "\n".join(lines) + "\n"
