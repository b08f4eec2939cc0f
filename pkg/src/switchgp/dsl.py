"""A small textual language for covariance expressions.

Grammar (whitespace-insensitive)::

    expr   := term ('+' term)*
    term   := factor ('*' factor)*
    factor := kernel '(' args ')' | '(' expr ')'
    kernel := 'se' | 'poly2' | 'sdof' | 'sw' | 'swneg'

``se`` takes one or more column names; ``poly2`` and ``sdof`` take one.
``sw``/``swneg`` take a column (optionally wrapped in a feature transform,
``cos2(col)`` or ``neg(col)``) followed by a switch tag; gates sharing a
tag share their slope and location parameters.

Example::

    sw(cos2(theta),S)*sw(U,W)*poly2(U) + swneg(cos2(theta),S)*swneg(U,W)*se(U)
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dataset import Dataset
from .errors import ConfigError
from .kernels import (
    ColumnRef,
    KernelExpr,
    Poly2,
    Product,
    Sdof,
    SigmoidGate,
    SqExp,
    Sum,
    default_params,
    validate_switch_tags,
)
from .params import ParamVector, apply_overrides

KERNEL_NAMES = ("se", "poly2", "sdof", "sw", "swneg")
_TRANSFORM_NAMES = {"cos2": "cos2", "neg": "negate"}
_TRANSFORM_PRINT = {"cos2": "cos2", "negate": "neg"}


@dataclass(frozen=True)
class LeafSpec:
    kind: str
    columns: tuple
    transform: str = "identity"
    tag: str | None = None


@dataclass(frozen=True)
class SumSpec:
    children: tuple


@dataclass(frozen=True)
class ProductSpec:
    children: tuple


@dataclass
class _Token:
    kind: str  # 'name', 'punct', 'eof'
    text: str
    line: int
    col: int


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            col += 1
            i += 1
            continue
        if ch in "+*(),":
            tokens.append(_Token("punct", ch, line, col))
            col += 1
            i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("name", text[i:j], line, col))
            col += j - i
            i = j
            continue
        raise ConfigError(f"parse error at line {line}, column {col}: unexpected character {ch!r}")
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, tok=None):
        tok = tok or self.peek()
        raise ConfigError(f"parse error at line {tok.line}, column {tok.col}: {message}")

    def expect(self, text):
        tok = self.peek()
        if tok.kind == "punct" and tok.text == text:
            return self.advance()
        got = tok.text or "end of input"
        self.fail(f"expected {text!r}, got {got!r}", tok)

    def expect_name(self, what):
        tok = self.peek()
        if tok.kind == "name":
            return self.advance()
        got = tok.text or "end of input"
        self.fail(f"expected {what}, got {got!r}", tok)

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "eof":
            self.fail(f"unexpected trailing input {tok.text!r}", tok)
        return node

    def expr(self):
        children = [self.term()]
        while self.peek().kind == "punct" and self.peek().text == "+":
            self.advance()
            children.append(self.term())
        return children[0] if len(children) == 1 else SumSpec(tuple(children))

    def term(self):
        children = [self.factor()]
        while self.peek().kind == "punct" and self.peek().text == "*":
            self.advance()
            children.append(self.factor())
        return children[0] if len(children) == 1 else ProductSpec(tuple(children))

    def factor(self):
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        name_tok = self.expect_name("a kernel name")
        kind = name_tok.text
        if kind not in KERNEL_NAMES:
            self.fail(f"unknown kernel {kind!r}; expected one of {', '.join(KERNEL_NAMES)}", name_tok)
        self.expect("(")
        if kind in ("sw", "swneg"):
            leaf = self._gate_args(kind)
        else:
            leaf = self._column_args(kind)
        self.expect(")")
        return leaf

    def _column_args(self, kind):
        cols = [self.expect_name("a column name").text]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.advance()
            cols.append(self.expect_name("a column name").text)
        if kind in ("poly2", "sdof") and len(cols) != 1:
            self.fail(f"{kind} takes exactly one column, got {len(cols)}")
        return LeafSpec(kind, tuple(cols))

    def _gate_args(self, kind):
        tok = self.expect_name("a column name or transform")
        transform = "identity"
        if tok.text in _TRANSFORM_NAMES and self.peek().kind == "punct" and self.peek().text == "(":
            transform = _TRANSFORM_NAMES[tok.text]
            self.advance()
            col = self.expect_name("a column name").text
            self.expect(")")
        else:
            col = tok.text
        self.expect(",")
        tag = self.expect_name("a switch tag").text
        return LeafSpec(kind, (col,), transform, tag)


def parse_kernel_spec(text: str) -> SumSpec | ProductSpec | LeafSpec:
    """Parse DSL text to a spec tree; raises ConfigError with line/column."""
    ast = _Parser(text).parse()
    _validate_tags(ast)
    return ast


def _iter_leaves(ast):
    if isinstance(ast, LeafSpec):
        yield ast
    else:
        for c in ast.children:
            yield from _iter_leaves(c)


def _validate_tags(ast):
    bindings = {}
    for leaf in _iter_leaves(ast):
        if leaf.tag is None:
            continue
        key = (leaf.columns[0], leaf.transform)
        prev = bindings.get(leaf.tag)
        if prev is not None and prev != key:
            raise ConfigError(
                f"switch tag {leaf.tag!r} is bound inconsistently: "
                f"{prev[1]}({prev[0]}) vs {key[1]}({key[0]})"
            )
        bindings[leaf.tag] = key


def print_kernel_spec(ast) -> str:
    """Canonical text form; parses back to an identical tree."""
    if isinstance(ast, LeafSpec):
        if ast.kind in ("sw", "swneg"):
            col = ast.columns[0]
            if ast.transform != "identity":
                col = f"{_TRANSFORM_PRINT[ast.transform]}({col})"
            return f"{ast.kind}({col},{ast.tag})"
        return f"{ast.kind}({','.join(ast.columns)})"
    if isinstance(ast, ProductSpec):
        parts = []
        for c in ast.children:
            text = print_kernel_spec(c)
            parts.append(f"({text})" if isinstance(c, SumSpec) else text)
        return "*".join(parts)
    if isinstance(ast, SumSpec):
        return " + ".join(print_kernel_spec(c) for c in ast.children)
    raise ConfigError(f"not a kernel spec node: {ast!r}")


def to_kernel(ast) -> KernelExpr:
    """Convert a spec tree to a KernelExpr with deterministic leaf names."""
    counters = {}

    def build(node):
        if isinstance(node, SumSpec):
            return Sum(tuple(build(c) for c in node.children))
        if isinstance(node, ProductSpec):
            return Product(tuple(build(c) for c in node.children))
        if node.kind == "sw":
            return SigmoidGate(ColumnRef(node.columns[0], node.transform), node.tag)
        if node.kind == "swneg":
            return SigmoidGate(ColumnRef(node.columns[0], node.transform), node.tag, negated=True)
        i = counters.get(node.kind, 0)
        counters[node.kind] = i + 1
        name = f"{node.kind}_{i}"
        if node.kind == "se":
            return SqExp(node.columns, name=name)
        if node.kind == "poly2":
            return Poly2(node.columns[0], name=name)
        return Sdof(node.columns[0], name=name)

    expr = build(ast)
    validate_switch_tags(expr)
    return expr


def build_kernel(text: str, data: Dataset | None = None, overrides: dict | None = None):
    """Parse DSL text and build (KernelExpr, ParamVector with defaults).

    With ``data`` given, column bindings are validated against it and
    data statistics seed lengthscales and switch-location bounds.
    """
    ast = parse_kernel_spec(text)
    expr = to_kernel(ast)
    if data is not None:
        for col in expr.columns():
            if not data.has_column(col):
                raise ConfigError(
                    f"kernel references unknown column {col!r}; available: {data.columns}"
                )
    params = default_params(expr, data)
    return expr, apply_overrides(params, overrides)
