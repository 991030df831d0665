"""Text and JSON rendering of proof fragments, shared by the REPL and the
HTTP service so both emit identical bytes for identical queries.

Proof trees are drawn in natural-deduction style: premises side by side,
an inference line labeled with the firing rule, and the conclusion
centered underneath.  Unexpanded frontier nodes print as plain tuples in
text mode; the JSON form carries their annotation and expanded flag.
"""

from __future__ import annotations

import json

from .ast import Program
from .explorer import ConstraintLeaf, FailedSubproof, ProofNode

HOLDS_MARK = "✓"  # check mark
FAILS_MARK = "✗"  # ballot x


class _Block:
    def __init__(self, lines: list[str], width: int):
        self.lines = lines
        self.width = width


def _leaf_block(text: str) -> _Block:
    return _Block([text], len(text))


def _join_blocks(blocks: list[_Block], gap: int = 2) -> _Block:
    height = max(len(b.lines) for b in blocks)
    rows = []
    for i in range(height):
        cells = []
        for b in blocks:
            offset = height - len(b.lines)
            cells.append(b.lines[i - offset].ljust(b.width) if i >= offset else " " * b.width)
        rows.append((" " * gap).join(cells))
    width = sum(b.width for b in blocks) + gap * (len(blocks) - 1)
    return _Block(rows, width)


def _node_block(program: Program, node: ProofNode | ConstraintLeaf) -> _Block:
    if isinstance(node, ConstraintLeaf):
        return _leaf_block(node.text)
    text = program.tuple_text(node.relation, node.args)
    if node.rule == 0 or not node.expanded:
        return _leaf_block(text)
    premises = _join_blocks([_node_block(program, c) for c in node.children])
    label = f"(R{node.rule})"
    line = "-" * premises.width + label
    offset = max((premises.width - len(text)) // 2, 0)
    conclusion = " " * offset + text
    width = max(premises.width + len(label), len(conclusion))
    lines = [row.ljust(width) for row in premises.lines]
    lines.append(line.ljust(width))
    lines.append(conclusion.ljust(width))
    return _Block(lines, width)


def render_proof_tree(program: Program, node: ProofNode) -> str:
    block = _node_block(program, node)
    return "\n".join(row.rstrip() for row in block.lines)


def render_failed_subproof(program: Program, failed: FailedSubproof) -> str:
    cells = [
        f"{part.text} {HOLDS_MARK if part.holds else FAILS_MARK}" for part in failed.parts
    ]
    premises = "  ".join(cells)
    label = f"(R{failed.rule})"
    line = "-" * len(premises) + label
    head = program.tuple_text(failed.relation, failed.args)
    offset = max((len(premises) - len(head)) // 2, 0)
    return "\n".join([premises, line, " " * offset + head])


def render_rule_listing(program: Program, rules) -> str:
    chunks = [f"{rule.id}: {program.rule_text(rule, multiline=True)}" for rule in rules]
    return "\n\n".join(chunks)


# -- JSON -------------------------------------------------------------------


def tuple_values(program: Program, relation: str, args: tuple[int, ...]) -> list:
    types = program.decl(relation).attribute_types()
    return [
        program.symbols.name(v) if types[i] == "symbol" else v
        for i, v in enumerate(args)
    ]


def proof_node_payload(program: Program, node: ProofNode | ConstraintLeaf) -> dict:
    if isinstance(node, ConstraintLeaf):
        return {"kind": "constraint", "text": node.text, "holds": node.holds}
    return {
        "kind": "tuple",
        "tuple": [node.relation, *tuple_values(program, node.relation, node.args)],
        "rule": node.rule,
        "height": node.height,
        "expanded": node.expanded,
        "children": [proof_node_payload(program, c) for c in node.children],
    }


def failed_subproof_payload(program: Program, failed: FailedSubproof) -> dict:
    parts = []
    for part in failed.parts:
        payload = {"kind": part.kind, "text": part.text, "holds": part.holds}
        if part.relation is not None:
            payload["tuple"] = [
                part.relation,
                *tuple_values(program, part.relation, part.args),
            ]
        parts.append(payload)
    return {
        "tuple": [failed.relation, *tuple_values(program, failed.relation, failed.args)],
        "rule": failed.rule,
        "parts": parts,
    }


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2)
