"""Arithmetic expressions for user-defined right-hand sides.

Grammar, loosest to tightest binding: ``+ -``, ``* /``, unary ``-``, ``^``
(right-associative). Calls take a fixed number of arguments; see FUNCTIONS.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "exp": (1, np.exp),
    "ln": (1, np.log),
    "sqrt": (1, np.sqrt),
    "abs": (1, np.abs),
    "pow": (2, np.power),
}


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnboundVariableError(NameError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)

# binding powers: (left, right); right < left makes ^ right-associative
_INFIX = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (40, 39)}
_PREFIX_BP = 30


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        mt = _TOKEN.match(text, pos)
        if mt is None or mt.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = mt.lastgroup
        start = mt.start(kind)
        tokens.append((kind, mt.group(kind), start))
        pos = mt.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.advance()
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", pos)

    def expression(self, min_bp: int = 0) -> Node:
        left = self.prefix()
        while True:
            kind, val, _ = self.peek()
            if kind != "op" or val not in _INFIX:
                break
            lbp, rbp = _INFIX[val]
            if lbp < min_bp:
                break
            self.advance()
            left = BinOp(val, left, self.expression(rbp))
        return left

    def prefix(self) -> Node:
        kind, val, pos = self.advance()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(":
                return self.call(val, pos)
            return Var(val)
        if val == "-":
            return Neg(self.expression(_PREFIX_BP))
        if val == "+":
            return self.expression(_PREFIX_BP)
        if val == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        what = "end of input" if kind == "end" else repr(val)
        raise ExprSyntaxError(f"unexpected {what}", pos)

    def call(self, name: str, pos: int) -> Node:
        if name not in FUNCTIONS:
            raise ExprSyntaxError(f"unknown function {name!r}", pos)
        arity = FUNCTIONS[name][0]
        self.advance()  # "("
        args = [self.expression()]
        while self.peek()[1] == ",":
            self.advance()
            args.append(self.expression())
        self.expect(")")
        if len(args) != arity:
            raise ExprSyntaxError(f"{name} takes {arity} argument(s), got {len(args)}", pos)
        return Call(name, tuple(args))


def parse(text: str) -> Node:
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(text)
    node = p.expression()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {val!r}", pos)
    return node


def variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    return set().union(*(variables(a) for a in node.args))


_BINARY = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


def _eval(node: Node, env: Mapping[str, float]):
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Var):
        try:
            return np.float64(env[node.name])
        except KeyError:
            raise UnboundVariableError(node.name) from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, BinOp):
        return _BINARY[node.op](_eval(node.left, env), _eval(node.right, env))
    return FUNCTIONS[node.func][1](*(_eval(a, env) for a in node.args))


def evaluate(node: Node, bindings: Mapping[str, float]) -> float:
    """Evaluate in IEEE double precision; x/0 gives inf rather than raising."""
    with np.errstate(all="ignore"):
        return float(_eval(node, bindings))


def to_string(node: Node) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_string(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    return f"{node.func}({', '.join(to_string(a) for a in node.args)})"


def compile_rhs(texts, state_names, params: Mapping[str, float]):
    """Build ``rhs(t, y)`` from one expression per state.

    States are bound both as ``y1..yN`` and under their names. Every variable
    must resolve to t, a state or a parameter; otherwise UnboundVariableError.
    """
    asts = [parse(s) for s in texts]
    n = len(state_names)
    if len(asts) != n:
        raise ValueError(f"{n} states but {len(asts)} expressions")
    known = {"t", *params, *state_names, *(f"y{i + 1}" for i in range(n))}
    for ast in asts:
        missing = variables(ast) - known
        if missing:
            raise UnboundVariableError(sorted(missing)[0])
    base = {k: float(v) for k, v in params.items()}

    def rhs(t, y):
        env = dict(base)
        env["t"] = t
        for i, (name, v) in enumerate(zip(state_names, y)):
            env[name] = v
            env[f"y{i + 1}"] = v
        return np.array([evaluate(a, env) for a in asts])

    return rhs
