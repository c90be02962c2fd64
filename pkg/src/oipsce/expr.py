"""Requirement expression DSL: parser, AST, and evaluator.

Catalog authors write one-line branch rules such as::

    v(DRC) && !fact(restrictions)

Grammar, loosest to tightest binding::

    expr  := or
    or    := and  ("||" and)*
    and   := unary ("&&" unary)*
    unary := "!" unary | atom
    atom  := "true" | "false" | "v" "(" PHASE ")" | "fact" "(" NAME ")"
           | "(" expr ")"

``v(X)`` reads as "phase X passed" (verdict 1, or at/above its graded
threshold). ``fact(name)`` reads a boolean branch fact recorded on the
dialogue; unknown facts evaluate false and are reported, never raised.

Expressions are parsed once at catalog load; the AST is immutable and
round-trips through :func:`to_text`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .errors import DocumentSyntaxError

PHASE_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")
FACT_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


class ExprSyntaxError(DocumentSyntaxError):
    pass


class Expr:
    """Base class for AST nodes."""

    def evaluate(self, passed: Mapping[str, bool], facts: Mapping[str, bool],
                 missing_facts: set[str] | None = None) -> bool:
        raise NotImplementedError

    def phase_refs(self) -> frozenset[str]:
        return frozenset()

    def fact_refs(self) -> frozenset[str]:
        return frozenset()

    def to_text(self) -> str:
        raise NotImplementedError

    # precedence used by the printer; higher binds tighter
    _prec = 4


@dataclass(frozen=True)
class Lit(Expr):
    value: bool

    def evaluate(self, passed, facts, missing_facts=None) -> bool:
        return self.value

    def to_text(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class VerdictRef(Expr):
    phase: str

    def evaluate(self, passed, facts, missing_facts=None) -> bool:
        return bool(passed[self.phase])

    def phase_refs(self) -> frozenset[str]:
        return frozenset({self.phase})

    def to_text(self) -> str:
        return f"v({self.phase})"


@dataclass(frozen=True)
class FactRef(Expr):
    name: str

    def evaluate(self, passed, facts, missing_facts=None) -> bool:
        if self.name not in facts:
            if missing_facts is not None:
                missing_facts.add(self.name)
            return False
        return bool(facts[self.name])

    def fact_refs(self) -> frozenset[str]:
        return frozenset({self.name})

    def to_text(self) -> str:
        return f"fact({self.name})"


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr

    _prec = 3

    def evaluate(self, passed, facts, missing_facts=None) -> bool:
        return not self.operand.evaluate(passed, facts, missing_facts)

    def phase_refs(self) -> frozenset[str]:
        return self.operand.phase_refs()

    def fact_refs(self) -> frozenset[str]:
        return self.operand.fact_refs()

    def to_text(self) -> str:
        return "!" + _wrap(self.operand, self._prec)


@dataclass(frozen=True)
class And(Expr):
    left: Expr
    right: Expr

    _prec = 2

    def evaluate(self, passed, facts, missing_facts=None) -> bool:
        # no short-circuit: both sides run so every unknown fact is reported
        lhs = self.left.evaluate(passed, facts, missing_facts)
        rhs = self.right.evaluate(passed, facts, missing_facts)
        return lhs and rhs

    def phase_refs(self) -> frozenset[str]:
        return self.left.phase_refs() | self.right.phase_refs()

    def fact_refs(self) -> frozenset[str]:
        return self.left.fact_refs() | self.right.fact_refs()

    def to_text(self) -> str:
        # right child at equal precedence keeps its parens so the text
        # re-parses to an identical (left-associated) tree
        return f"{_wrap(self.left, self._prec)} && {_wrap(self.right, self._prec + 1)}"


@dataclass(frozen=True)
class Or(Expr):
    left: Expr
    right: Expr

    _prec = 1

    def evaluate(self, passed, facts, missing_facts=None) -> bool:
        lhs = self.left.evaluate(passed, facts, missing_facts)
        rhs = self.right.evaluate(passed, facts, missing_facts)
        return lhs or rhs

    def phase_refs(self) -> frozenset[str]:
        return self.left.phase_refs() | self.right.phase_refs()

    def fact_refs(self) -> frozenset[str]:
        return self.left.fact_refs() | self.right.fact_refs()

    def to_text(self) -> str:
        return f"{_wrap(self.left, self._prec)} || {_wrap(self.right, self._prec + 1)}"


def _wrap(node: Expr, minimum: int) -> str:
    text = node.to_text()
    if node._prec < minimum:
        return f"({text})"
    return text


# --- tokenizer / parser ----------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<op>&&|\|\||!|\(|\))|(?P<word>[A-Za-z][A-Za-z0-9_]*))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            # nothing but trailing whitespace is fine
            if text[pos:].strip():
                raise ExprSyntaxError(
                    f"unexpected character {text[pos:].lstrip()[0]!r} "
                    f"at position {pos} in {text!r}"
                )
            break
        if m.group("op"):
            tokens.append(("op", m.group("op"), m.start("op")))
        else:
            tokens.append(("word", m.group("word"), m.start("word")))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise ExprSyntaxError(f"unexpected end of expression in {self.text!r}")
        self.i += 1
        return tok

    def expect_op(self, op: str):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            raise ExprSyntaxError(
                f"expected {op!r} at position {tok[2]} in {self.text!r}, got {tok[1]!r}"
            )

    def parse(self) -> Expr:
        node = self.parse_or()
        tok = self.peek()
        if tok is not None:
            raise ExprSyntaxError(
                f"trailing input {tok[1]!r} at position {tok[2]} in {self.text!r}"
            )
        return node

    def parse_or(self) -> Expr:
        node = self.parse_and()
        while (tok := self.peek()) and tok[:2] == ("op", "||"):
            self.take()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> Expr:
        node = self.parse_unary()
        while (tok := self.peek()) and tok[:2] == ("op", "&&"):
            self.take()
            node = And(node, self.parse_unary())
        return node

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok and tok[:2] == ("op", "!"):
            self.take()
            return Not(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        tok = self.take()
        if tok[:2] == ("op", "("):
            node = self.parse_or()
            self.expect_op(")")
            return node
        if tok[0] != "word":
            raise ExprSyntaxError(
                f"unexpected {tok[1]!r} at position {tok[2]} in {self.text!r}"
            )
        word = tok[1]
        if word == "true":
            return Lit(True)
        if word == "false":
            return Lit(False)
        if word == "v":
            self.expect_op("(")
            name = self.take()
            if name[0] != "word" or not PHASE_RE.match(name[1]):
                raise ExprSyntaxError(
                    f"v(...) needs a phase id, got {name[1]!r} in {self.text!r}"
                )
            self.expect_op(")")
            return VerdictRef(name[1])
        if word == "fact":
            self.expect_op("(")
            name = self.take()
            if name[0] != "word" or not FACT_RE.match(name[1]):
                raise ExprSyntaxError(
                    f"fact(...) needs a lowercase name, got {name[1]!r} in {self.text!r}"
                )
            self.expect_op(")")
            return FactRef(name[1])
        raise ExprSyntaxError(
            f"unknown token {word!r} at position {tok[2]} in {self.text!r} "
            f"(did you mean v({word}) or fact({word})?)"
        )


def parse_expr(text: str) -> Expr:
    """Parse a requirement expression, raising ExprSyntaxError on bad input."""
    return _Parser(text).parse()
