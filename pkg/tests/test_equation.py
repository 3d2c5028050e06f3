from fractions import Fraction

import mpmath
import pytest

from gpseries.equation import (FunctionalEquation, check_solution, leading_data, partials_along, poly_eval,
                               poly_roots, poly_trim, residual)
from gpseries.errors import NotSatisfied, ValidationError
from gpseries.lattice import certify
from gpseries.numbers import to_mpc
from gpseries.series import Differential, GSeries, Mahler, MultiSeries, QDifference

from conftest import gaussian_lattice, load, poly

TAYLOR = certify([Fraction(1)])


def test_order_is_inferred_from_variable_count():
    eq = FunctionalEquation(poly(3, {(1, 0, 1): 1, (0, 1, 0): -1}), Differential())
    assert eq.n == 1
    with pytest.raises(ValidationError):
        FunctionalEquation(poly(3, {(1, 0, 1): 1}), Differential(), order=2)
    with pytest.raises(ValidationError):
        FunctionalEquation(MultiSeries(2, {}), Differential())


def test_linear_coefficients_ignore_mixed_monomials():
    eq = FunctionalEquation(poly(3, {(1, 0, 1): 1, (0, 1, 0): -1, (0, 2, 0): 5}), Differential())
    assert eq.linear_coefficients() == [-1, 0]
    assert eq.x_degrees() == {0, 1}


def test_residual_vanishes_on_geometric_solution():
    # y = x/(1-x) solves y - x - x*y = 0
    eq = FunctionalEquation(poly(3, {(0, 1, 0): 1, (1, 0, 0): -1, (1, 1, 0): -1}), Differential(), order=1)
    phi = GSeries(TAYLOR, {(k,): Fraction(1) for k in range(1, 9)}, trunc_re=8)
    assert residual(eq, phi).coeff((9,)) == 0
    assert check_solution(eq, phi) == 0


def test_poly_helpers():
    assert poly_trim([1, 2, 0, 0]) == [1, 2]
    assert poly_eval([Fraction(1), Fraction(0), Fraction(1)], Fraction(2)) == 5
    roots = sorted(poly_roots([Fraction(0), Fraction(-1), Fraction(1)]), key=lambda r: abs(r))
    assert abs(roots[0]) == 0 and abs(roots[1] - 1) < mpmath.mpf(10) ** -50
    with pytest.raises(ValidationError):
        poly_roots([0, 0])


def test_leading_data_on_mixed_lattice_example():
    doc = load("q_divergent_mixed")
    sg = certify(doc.lattice)
    phi = GSeries(sg, doc.init, trunc_re=2)
    ld = leading_data(partials_along(doc.equation, phi), doc.equation.op)
    q = doc.equation.op.q
    assert ld.nu == (0, 0)
    assert ld.attained == [1, 2]
    assert ld.A[0] == 0 and ld.A[2] == 1
    assert abs(to_mpc(ld.A[1]) + q ** mpmath.mpc(1, 1)) < mpmath.mpf(10) ** -50
    assert not ld.a0_nonzero and ld.an_nonzero


def test_leading_data_symbol_uses_operator():
    doc = load("q_divergent_mixed")
    sg = certify(doc.lattice)
    ld = leading_data(partials_along(doc.equation, GSeries(sg, doc.init, trunc_re=2)), doc.equation.op)
    q = doc.equation.op.q
    lam = mpmath.mpc(1, 1)
    z = q ** lam
    assert abs(to_mpc(ld.symbol(lam)) - (z * z - q ** lam * z)) < mpmath.mpf(10) ** -50


def test_crowded_mahler_partial_is_reported():
    doc = load("mahler_binomial")
    sg = certify(doc.lattice)
    phi = GSeries(sg, doc.init, trunc_re=2)
    with pytest.raises(NotSatisfied) as info:
        leading_data(partials_along(doc.equation, phi), doc.equation.op)
    assert "equal real part" in str(info.value)
    assert info.value.details["nu"] == [0, 1]


def test_mahler_leading_data_is_partial_along_y0():
    eq = FunctionalEquation(poly(3, {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): -1, (0, 2, 0): 1}), Mahler(2))
    phi = GSeries(TAYLOR, {(1,): Fraction(-1)}, trunc_re=1)
    ld = leading_data(partials_along(eq, phi), eq.op)
    assert ld.nu == (0,) and ld.A == [1, 0]
    assert ld.symbol(Fraction(5)) == 1


def test_crowded_leading_term_breaks_common_exponent():
    sg = gaussian_lattice()
    phi = GSeries(sg, {(1, 0): Fraction(1), (0, 1): Fraction(1)}, trunc_re=2)
    # partial along y_0 is 2*phi, whose two lowest terms share real part 1
    eq = FunctionalEquation(poly(3, {(0, 2, 0): 1, (2, 0, 1): 1}), QDifference(mpmath.mpf(2)))
    with pytest.raises(NotSatisfied) as info:
        leading_data(partials_along(eq, phi), eq.op)
    assert info.value.details["attained"] == [0]
    # a lone leading term is fine
    eq2 = FunctionalEquation(poly(3, {(0, 1, 0): 1, (2, 0, 1): 1}), QDifference(mpmath.mpf(2)))
    ld = leading_data(partials_along(eq2, phi), eq2.op)
    assert ld.nu == (0, 0) and ld.attained == [0]


def test_to_json_shape():
    eq = FunctionalEquation(poly(3, {(1, 0, 1): 1, (0, 1, 0): -1}), QDifference(Fraction(1, 2)))
    out = eq.to_json()
    assert out["order"] == 1 and out["op"]["kind"] == "sigma"
