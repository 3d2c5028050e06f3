import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from gpseries.errors import (AmbiguousRepresentation, DependencyUndetected, NonTerminating, NotRepresentable,
                             ValidationError)
from gpseries.numbers import to_mpc
from gpseries.lattice import HalfspaceConstraint, Semigroup, certify, dickson_minimal, express, find_relation, regularize

from oracles import brute_minimal, integer_relation


def test_semigroup_rejects_nonpositive_real_part():
    with pytest.raises(ValidationError):
        Semigroup((Fraction(1), mpmath.mpc(0, 1)))


def test_values_and_order_key():
    sg = certify([mpmath.mpc(1, 1), mpmath.mpc(1, -1)])
    assert sg.value((2, 1)) == mpmath.mpc(3, 1)
    assert sg.re_value((2, 1)) == 3
    assert sg.key((0, 1)) < sg.key((1, 0))


def test_dickson_single_generator_threshold():
    c = HalfspaceConstraint((Fraction(1),), Fraction(-5, 2))
    assert dickson_minimal(c, 1) == {(3,)}


def test_dickson_non_strict_includes_boundary():
    c = HalfspaceConstraint((Fraction(1), Fraction(2)), Fraction(-2), strict=False)
    assert dickson_minimal(c, 2) == {(2, 0), (0, 1)}


def test_dickson_matches_brute_force_on_random_constraints():
    rng = random.Random(20240611)
    for _ in range(50):
        dim = rng.randint(1, 3)
        weights = tuple(Fraction(rng.randint(2, 12), 2) for _ in range(dim))
        offset = -Fraction(rng.randint(0, 11), rng.randint(1, 2))
        strict = rng.random() < 0.5
        c = HalfspaceConstraint(weights, offset, strict)
        assert dickson_minimal(c, dim) == brute_minimal(weights, offset, strict, dim)


def test_dickson_with_irrational_weights_matches_brute_force():
    w = (mpmath.sqrt(2), mpmath.mpf(1) / 3)
    c = HalfspaceConstraint(w, -mpmath.mpf(3))
    assert dickson_minimal(c, 2) == brute_minimal(w, -mpmath.mpf(3), True, 2)


def test_dickson_cap_raises():
    c = HalfspaceConstraint((Fraction(1, 1000),), Fraction(-100))
    with pytest.raises(NonTerminating):
        dickson_minimal(c, 1, cap=50)


def test_find_relation_agrees_with_exhaustive_search():
    assert find_relation([Fraction(2), Fraction(3)]) is not None
    assert find_relation([mpmath.mpf(1), mpmath.sqrt(2)]) is None
    assert integer_relation([mpmath.mpf(1), mpmath.sqrt(2)], 30) is None
    rel = find_relation([mpmath.sqrt(2), 3 * mpmath.sqrt(2)])
    assert rel is not None and integer_relation([mpmath.sqrt(2), 3 * mpmath.sqrt(2)], 5) is not None


def _contained(raw, sg, rows):
    for g, row in zip(raw, rows):
        assert all(k >= 0 for k in row)
        total = sum((k * b for k, b in zip(row, sg.generators)), Fraction(0) if sg.exact else mpmath.mpc(0))
        assert abs(to_mpc(total) - to_mpc(g)) < mpmath.mpf(2) ** -150
        assert express(sg, g, 64) == tuple(row)


@pytest.mark.parametrize("raw", [
    [Fraction(1), mpmath.sqrt(2), 2 - mpmath.sqrt(2)],
    [Fraction(2), Fraction(3)],
    [mpmath.mpc(1, 1), mpmath.mpc(1, -1), Fraction(2)],
    [Fraction(1, 2), Fraction(1, 3), mpmath.sqrt(3)],
])
def test_regularize_independent_and_containing(raw):
    sg, rows = regularize(raw)
    if sg.dim > 1:
        assert find_relation(list(sg.generators), 1000) is None
    _contained(raw, sg, rows)


def test_regularize_two_and_three_gives_one():
    sg, rows = regularize([Fraction(2), Fraction(3)])
    assert sg.generators == (Fraction(1),)
    assert rows == [[2], [3]]


def test_certify_refuses_dependent_generators():
    with pytest.raises(DependencyUndetected):
        certify([mpmath.sqrt(2), 2 * mpmath.sqrt(2)])


def test_express_unique_and_failures():
    sg = certify([mpmath.mpc(1, 1), mpmath.mpc(1, -1)])
    assert express(sg, mpmath.mpc(5, 1), 20) == (3, 2)
    with pytest.raises(NotRepresentable):
        express(sg, mpmath.mpc(5, 2), 20)
    raw = Semigroup((Fraction(1), Fraction(2)))
    with pytest.raises(AmbiguousRepresentation):
        express(raw, Fraction(2), 5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 6), min_size=2, max_size=2))
def test_express_inverts_value(m):
    sg = certify([Fraction(1), mpmath.sqrt(2)])
    assert express(sg, sg.value(m), 20) == tuple(m)
