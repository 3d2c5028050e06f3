from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from gpseries.dsl import (Apply, Bin, Call, Name, Neg, Num, Pow, emit, emit_equation, parse_document,
                          parse_equation, parse_equation_ast, parse_expression)
from gpseries.errors import MixedOperators, ParseError, UnknownOperator, ValidationError
from gpseries.series import Differential, Mahler, QDifference

from conftest import load


def test_expression_tree_shape():
    ast = parse_expression("sigma^2(y) - q*x^2")
    assert ast == Bin("-", Apply("sigma", 2, Name("y")), Bin("*", Name("q"), Pow(Name("x"), Num("2"))))
    assert parse_expression("-x^2") == Neg(Pow(Name("x"), Num("2")))
    assert parse_expression("2i") == Num("2i")


def test_euler_equation_lowers_to_exact_polynomial():
    eq = parse_equation("x*delta(y) - y + x = 0")
    assert isinstance(eq.op, Differential) and eq.order == 1
    assert eq.F.terms == {(1, 0, 1): 1, (0, 1, 0): -1, (1, 0, 0): 1}


def test_params_feed_operators():
    eq = parse_equation("sigma(y) - 2*y = x", {"q": "1/2"})
    assert isinstance(eq.op, QDifference) and eq.op.q == Fraction(1, 2)
    eq = parse_equation("mu(y) = y^2 + x", {"ell": 3})
    assert isinstance(eq.op, Mahler) and eq.op.ell == 3


def test_complex_exponents_evaluate():
    eq = parse_equation("sigma(y) - q^(1+i)*y = 0", {"q": "2"})
    coeff = eq.F.coefficient((0, 1, 0))
    assert abs(coeff + mpmath.power(2, mpmath.mpc(1, 1))) < mpmath.mpf(10) ** -50


def test_errors_carry_positions():
    with pytest.raises(ParseError) as info:
        parse_equation_ast("y + * x = 0")
    assert info.value.column == 5
    with pytest.raises(UnknownOperator):
        parse_equation("tau(y) = x")
    with pytest.raises(MixedOperators):
        parse_equation("delta(y) + sigma(y) = x", {"q": 2})
    with pytest.raises(ValidationError):
        parse_equation("sigma(y) = x")
    with pytest.raises(ValidationError):
        parse_equation("y/y = x")


def test_document_directives():
    text = """
    # comment line
    param omega = sqrt2
    let q = exp(2*pi*i*omega)   # trailing comment
    lattice 1, omega
    init (1,0) = 1/3
    task certify depth=4 mode=fast
    sigma(y) - y + x*y^2 = 0
    """
    doc = parse_document(text)
    assert doc.task == "certify" and doc.options == {"depth": 4, "mode": "fast"}
    assert doc.init == {(1, 0): Fraction(1, 3)}
    assert abs(doc.lattice[1] - mpmath.sqrt(2)) < mpmath.mpf(10) ** -50
    assert isinstance(doc.equation.op, QDifference)


def test_document_overrides_and_errors():
    doc = parse_document("param q = 2\nsigma(y) - y = x\n", {"q": "3"})
    assert doc.equation.op.q == 3
    with pytest.raises(ParseError) as info:
        parse_document("param q = 2\nsigma(y) = x\nsigma(y) = y\n")
    assert info.value.line == 3
    with pytest.raises(ParseError):
        parse_document("param x = 2\n")


def test_map_directive_builds_germ():
    doc = parse_document("map 2*x + x^2\n")
    assert doc.germ == {1: 2, 2: 1}


def test_corpus_documents_parse():
    for name in ("euler", "q_two_generator_rotation", "boettcher_l2", "q_liouville_exponent"):
        assert load(name).task


def test_emit_equation_round_trip():
    eq = load("mahler_binomial").equation
    back = parse_equation(emit_equation(eq), {"ell": 2})
    assert back.F.equals(eq.F)


_names = st.sampled_from(["x", "y", "q", "a"]).map(Name)
_nums = st.sampled_from(["1", "2", "3/2", "0.5", "2i", "1e3"]).flatmap(
    lambda t: st.just(Num(t)) if "/" not in t else st.just(Bin("/", Num("3"), Num("2"))))


def _extend(children):
    return st.one_of(
        st.builds(Bin, st.sampled_from(["+", "-", "*", "/"]), children, children),
        st.builds(Neg, children),
        st.builds(Pow, children, st.one_of(_names, _nums, children)),
        st.builds(Call, st.sampled_from(["exp", "sqrt", "cos"]), children),
        st.builds(Apply, st.sampled_from(["delta", "sigma", "mu"]), st.integers(1, 3), children),
    )


_trees = st.recursive(st.one_of(_names, _nums), _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(_trees)
def test_emit_parse_round_trip(tree):
    assert parse_expression(emit(tree)) == tree
