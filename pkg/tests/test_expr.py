import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridfrac.expr import (
    BinOp,
    Call,
    ExprSyntaxError,
    Neg,
    Num,
    UnboundVariableError,
    Var,
    compile_rhs,
    evaluate,
    parse,
    to_string,
)


def ev(text, **env):
    return evaluate(parse(text), env)


def test_shape_of_quadratic_rhs():
    assert parse("y1 + y2^2") == BinOp("+", Var("y1"), BinOp("^", Var("y2"), Num(2.0)))


def test_unary_minus_after_product():
    assert ev("2*-3") == -6


def test_syntax_error_position():
    with pytest.raises(ExprSyntaxError) as info:
        parse("sin(")
    assert info.value.position == 4


@pytest.mark.parametrize("text", ["", "  ", "1 +", "(1", "1)", "2 $ 3", "pow(1)", "sin(1, 2)", "3 4"])
def test_syntax_errors(text):
    with pytest.raises(ExprSyntaxError):
        parse(text)


def test_unknown_function():
    with pytest.raises(ExprSyntaxError, match="unknown function"):
        parse("tanh(1)")


def test_eval_examples():
    assert ev("t*x", t=0.5, x=4) == 2.0
    assert ev("exp(1)") == pytest.approx(2.718281828459045, abs=1e-15)
    assert ev("2*y2^2", y2=3) == 18


def test_unbound_variable():
    with pytest.raises(UnboundVariableError, match="zz"):
        ev("1 + zz")


def test_division_by_zero_is_infinite():
    assert ev("1/0") == math.inf
    assert math.isnan(ev("0/0"))


CORPUS = [
    ("1 + 2 * 3", 7.0),
    ("(1 + 2) * 3", 9.0),
    ("2 ^ 3 ^ 2", 512.0),
    ("(2 ^ 3) ^ 2", 64.0),
    ("-2 ^ 2", -4.0),
    ("(-2) ^ 2", 4.0),
    ("2 ^ -1", 0.5),
    ("10 / 4 / 5", 0.5),
    ("10 - 4 - 3", 3.0),
    ("- - 3", 3.0),
    ("+4", 4.0),
    ("1.5e2 + .5", 150.5),
    ("sqrt(16) + abs(-3)", 7.0),
    ("pow(2, 10)", 1024.0),
    ("ln(exp(2.5))", 2.5),
    ("sin(0) + cos(0)", 1.0),
    ("2 * x + y / 4", 2 * 1.25 + 3.0 / 4),
    ("x ^ 2 - y ^ 2", 1.25**2 - 9.0),
    ("(x + y) * (x - y)", (1.25 + 3) * (1.25 - 3)),
    ("3 * -x ^ 2", -3 * 1.25**2),
]


@pytest.mark.parametrize("text,value", CORPUS)
def test_corpus(text, value):
    assert ev(text, x=1.25, y=3.0) == pytest.approx(value, rel=1e-14)


def test_corpus_size():
    assert len(CORPUS) == 20


@pytest.mark.parametrize("text", [t for t, _ in CORPUS] + ["y1 + y2^2", "a*-b^c/d"])
def test_print_round_trip(text):
    ast = parse(text)
    assert parse(to_string(ast)) == ast


names = st.sampled_from(["t", "x", "y1", "beta"])
leaves = st.one_of(st.floats(0, 1e6, allow_nan=False).map(Num), names.map(Var))
trees = st.recursive(
    leaves,
    lambda ch: st.one_of(
        ch.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), ch, ch).map(lambda a: BinOp(*a)),
        ch.map(lambda c: Call("sin", (c,))),
        st.tuples(ch, ch).map(lambda a: Call("pow", a)),
    ),
    max_leaves=12,
)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_round_trip_property(ast):
    assert parse(to_string(ast)) == ast


def test_compile_rhs_bindings():
    rhs = compile_rhs(["k*y1 + t", "x - y2"], ["x", "v"], {"k": 2.0})
    np.testing.assert_array_equal(rhs(0.5, np.array([3.0, 4.0])), [6.5, -1.0])
    with pytest.raises(UnboundVariableError):
        compile_rhs(["q"], ["x"], {})
    with pytest.raises(ValueError):
        compile_rhs(["1", "2"], ["x"], {})
