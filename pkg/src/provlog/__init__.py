"""Datalog engine with minimal-proof-height annotations and a proof explorer."""

from .ast import Program, ProgramError
from .parser import ParseError, parse_program, program_text
from .stratification import CyclicNegation, build_precedence_graph, stratify

__all__ = [
    "CyclicNegation",
    "ParseError",
    "Program",
    "ProgramError",
    "build_precedence_graph",
    "parse_program",
    "program_text",
    "stratify",
]
