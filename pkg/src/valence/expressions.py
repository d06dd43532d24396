"""Guard and score expression language.

A tiny statically-typed expression language over the ordered finite state
variables of a scenario.  Variable references evaluate to the domain index of
the variable's current level; level names are literals resolved to their
domain index at bind time.  Supported: + - * /, comparisons, and/or/not,
parentheses, numeric and boolean literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

NUMBER = "number"
BOOLEAN = "boolean"


class ExpressionError(ValueError):
    """Parse/bind-time error in an expression, with a column offset."""

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.message = message
        self.column = column


class EvalError(ValueError):
    """Runtime evaluation error (currently only division by zero)."""

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.message = message
        self.column = column


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class VarRef:
    name: str
    position: int  # index into the scenario's variable order


@dataclass(frozen=True)
class LevelRef:
    name: str
    index: int  # resolved domain index


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "not"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / == != < <= > >= and or
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Bool, VarRef, LevelRef, Unary, Binary]

_COMPARISONS = {"==", "!=", "<", "<=", ">", ">="}
_ARITH = {"+", "-", "*", "/"}


def expr_type(node: Expr) -> str:
    if isinstance(node, (Num, VarRef, LevelRef)):
        return NUMBER
    if isinstance(node, Bool):
        return BOOLEAN
    if isinstance(node, Unary):
        return NUMBER if node.op == "-" else BOOLEAN
    if node.op in _ARITH:
        return NUMBER
    return BOOLEAN


class BindingEnv:
    """Resolves identifiers to variable positions or level indices."""

    def __init__(self, variable_names: list[str], level_index: dict[str, int],
                 ambiguous_levels: frozenset[str] = frozenset()):
        self.var_position = {name: i for i, name in enumerate(variable_names)}
        self.level_index = level_index
        self.ambiguous_levels = ambiguous_levels

    def resolve(self, name: str, column: int) -> Expr:
        if name in self.var_position:
            return VarRef(name, self.var_position[name])
        if name in self.ambiguous_levels:
            raise ExpressionError(
                f"level name '{name}' is ambiguous: it occurs at different "
                f"indices in multiple variable domains", column)
        if name in self.level_index:
            return LevelRef(name, self.level_index[name])
        raise ExpressionError(f"unknown identifier '{name}'", column)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?|\.\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>==|!=|<=|>=|[+\-*/()<>]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            raise ExpressionError(
                f"unexpected character {stripped[0]!r}", pos + 1)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num") + 1))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident") + 1))
        else:
            tokens.append(("op", m.group("op"), m.start("op") + 1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str, int]], env: BindingEnv,
                 length: int):
        self.tokens = tokens
        self.env = env
        self.i = 0
        self.end_column = length + 1

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next_column(self) -> int:
        tok = self.peek()
        return tok[2] if tok else self.end_column

    def accept(self, kind: str, value: str | None = None):
        tok = self.peek()
        if tok and tok[0] == kind and (value is None or tok[1] == value):
            self.i += 1
            return tok
        return None

    def expect_op(self, value: str):
        if not self.accept("op", value):
            raise ExpressionError(f"expected '{value}'", self.next_column())

    def require_type(self, node: Expr, wanted: str, what: str, column: int):
        if expr_type(node) != wanted:
            raise ExpressionError(
                f"{what} must be {wanted}, got {expr_type(node)}", column)

    def parse(self) -> Expr:
        node = self.or_expr()
        if self.peek() is not None:
            raise ExpressionError("trailing input", self.next_column())
        return node

    def or_expr(self) -> Expr:
        col = self.next_column()
        node = self.and_expr()
        while self.accept("ident", "or"):
            self.require_type(node, BOOLEAN, "'or' operand", col)
            col2 = self.next_column()
            right = self.and_expr()
            self.require_type(right, BOOLEAN, "'or' operand", col2)
            node = Binary("or", node, right)
        return node

    def and_expr(self) -> Expr:
        col = self.next_column()
        node = self.not_expr()
        while self.accept("ident", "and"):
            self.require_type(node, BOOLEAN, "'and' operand", col)
            col2 = self.next_column()
            right = self.not_expr()
            self.require_type(right, BOOLEAN, "'and' operand", col2)
            node = Binary("and", node, right)
        return node

    def not_expr(self) -> Expr:
        if self.accept("ident", "not"):
            col = self.next_column()
            operand = self.not_expr()
            self.require_type(operand, BOOLEAN, "'not' operand", col)
            return Unary("not", operand)
        return self.comparison()

    def comparison(self) -> Expr:
        col = self.next_column()
        node = self.arith()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] in _COMPARISONS:
            self.i += 1
            self.require_type(node, NUMBER, "comparison operand", col)
            col2 = self.next_column()
            right = self.arith()
            self.require_type(right, NUMBER, "comparison operand", col2)
            node = Binary(tok[1], node, right)
        return node

    def arith(self) -> Expr:
        col = self.next_column()
        node = self.term()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in ("+", "-"):
                self.i += 1
                self.require_type(node, NUMBER, "arithmetic operand", col)
                col2 = self.next_column()
                right = self.term()
                self.require_type(right, NUMBER, "arithmetic operand", col2)
                node = Binary(tok[1], node, right)
            else:
                return node

    def term(self) -> Expr:
        col = self.next_column()
        node = self.factor()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in ("*", "/"):
                self.i += 1
                self.require_type(node, NUMBER, "arithmetic operand", col)
                col2 = self.next_column()
                right = self.factor()
                self.require_type(right, NUMBER, "arithmetic operand", col2)
                if tok[1] == "/" and isinstance(right, Num) and right.value == 0:
                    raise ExpressionError("division by zero", col2)
                node = Binary(tok[1], node, right)
            else:
                return node

    def factor(self) -> Expr:
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "-":
            self.i += 1
            col = self.next_column()
            operand = self.factor()
            self.require_type(operand, NUMBER, "negation operand", col)
            if isinstance(operand, Num):
                return Num(-operand.value)
            return Unary("-", operand)
        return self.primary()

    def primary(self) -> Expr:
        tok = self.peek()
        if tok is None:
            raise ExpressionError("unexpected end of expression",
                                  self.end_column)
        kind, value, col = tok
        if kind == "num":
            self.i += 1
            return Num(float(value))
        if kind == "ident":
            self.i += 1
            if value == "true":
                return Bool(True)
            if value == "false":
                return Bool(False)
            return self.env.resolve(value, col)
        if kind == "op" and value == "(":
            self.i += 1
            node = self.or_expr()
            self.expect_op(")")
            return node
        raise ExpressionError(f"unexpected token {value!r}", col)


def parse_expression(text: str, env: BindingEnv) -> Expr:
    """Parse and bind an expression; raises ExpressionError on failure."""
    return _Parser(_tokenize(text), env, len(text)).parse()


def eval_expression(node: Expr, levels: tuple[int, ...]):
    """Evaluate a bound expression over one state's level indices."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Bool):
        return node.value
    if isinstance(node, VarRef):
        return float(levels[node.position])
    if isinstance(node, LevelRef):
        return float(node.index)
    if isinstance(node, Unary):
        if node.op == "-":
            return -eval_expression(node.operand, levels)
        return not eval_expression(node.operand, levels)
    op = node.op
    if op == "and":
        return bool(eval_expression(node.left, levels)) and \
            bool(eval_expression(node.right, levels))
    if op == "or":
        return bool(eval_expression(node.left, levels)) or \
            bool(eval_expression(node.right, levels))
    a = eval_expression(node.left, levels)
    b = eval_expression(node.right, levels)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise EvalError("division by zero", 0)
        return a / b
    if op == "==":
        return a == b
    if op == "!=":
        return a != b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


_PRECEDENCE = {
    "or": 1, "and": 2,
    "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6,
}
# "not" binds at 3, unary minus at 7.


def _render_num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def render_expression(node: Expr, parent_prec: int = 0,
                      right_side: bool = False) -> str:
    """Render a bound AST to canonical text that reparses to the same AST."""
    if isinstance(node, Num):
        if node.value < 0:
            return "-" + _render_num(-node.value)
        return _render_num(node.value)
    if isinstance(node, Bool):
        return "true" if node.value else "false"
    if isinstance(node, (VarRef, LevelRef)):
        return node.name
    if isinstance(node, Unary):
        if node.op == "-":
            return "-" + render_expression(node.operand, 7)
        inner = render_expression(node.operand, 3)
        text = f"not {inner}"
        return f"({text})" if parent_prec > 3 else text
    prec = _PRECEDENCE[node.op]
    left = render_expression(node.left, prec, right_side=False)
    right = render_expression(node.right, prec, right_side=True)
    text = f"{left} {node.op} {right}"
    # All binary operators associate left: a same-precedence right child
    # needs parentheses to survive a round-trip.
    if prec < parent_prec or (prec == parent_prec and right_side):
        return f"({text})"
    return text
