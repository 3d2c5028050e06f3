"""Functional equations F(x, y, Dy, ..., D^n y) = 0 and their leading data."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import NotSatisfied, ValidationError
from .lattice import Semigroup
from .numbers import is_exact, is_zero, real_part, to_json, to_mpc, tolerance
from .series import (INF, Differential, GSeries, Mahler, MultiSeries, QDifference, apply_operator,
                     operator_to_json, substitute)


@dataclass
class FunctionalEquation:
    """F is a MultiSeries in (x, y_0, ..., y_n); y_j stands for D^j y."""

    F: MultiSeries
    op: object
    order: int = field(default=-1)

    def __post_init__(self):
        if self.order < 0:
            self.order = self.F.nvars - 2
        if self.F.nvars != self.order + 2:
            raise ValidationError(f"F has {self.F.nvars} variables, expected {self.order + 2}")
        if self.F.is_zero():
            raise ValidationError("F is identically zero")
        if not isinstance(self.op, (Differential, QDifference, Mahler)):
            raise ValidationError(f"unsupported operator {self.op!r}")

    @property
    def n(self) -> int:
        return self.order

    def constant_term(self):
        return self.F.coefficient((0,) * self.F.nvars)

    def linear_coefficients(self) -> list:
        """Coefficient of the bare monomial y_j in F, for each j."""
        out = []
        for j in range(self.order + 1):
            e = [0] * self.F.nvars
            e[j + 1] = 1
            out.append(self.F.coefficient(e))
        return out

    def x_degrees(self) -> set:
        return {e[0] for e in self.F.terms}

    def to_json(self) -> dict:
        return {"F": self.F.to_json(), "op": operator_to_json(self.op), "order": self.order}


def arguments(eq: FunctionalEquation, phi: GSeries) -> list:
    """(phi, D phi, ..., D^n phi)."""
    return [apply_operator(eq.op, j, phi) for j in range(eq.order + 1)]


def residual(eq: FunctionalEquation, phi: GSeries) -> GSeries:
    return substitute(eq.F, [None, *arguments(eq, phi)], phi.sg)


def partials_along(eq: FunctionalEquation, phi: GSeries) -> list:
    args = [None, *arguments(eq, phi)]
    return [substitute(eq.F.derivative(j + 1), args, phi.sg) for j in range(eq.order + 1)]


# ----------------------------------------------------------------------------
# polynomials as coefficient lists, lowest degree first


def poly_trim(coeffs: Sequence) -> list:
    out = list(coeffs)
    while out and is_zero(out[-1]):
        out.pop()
    return out


def poly_eval(coeffs: Sequence, z):
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def poly_roots(coeffs: Sequence) -> list:
    """Complex roots with multiplicity; zero roots are split off exactly."""
    cs = poly_trim(coeffs)
    if not cs:
        raise ValidationError("the zero polynomial has no isolated roots")
    zeros = 0
    while zeros < len(cs) and is_zero(cs[zeros]):
        zeros += 1
    rest = cs[zeros:]
    roots = [mpmath.mpc(0)] * zeros
    if len(rest) > 1:
        hi_first = [to_mpc(c) for c in reversed(rest)]
        found = mpmath.polyroots(hi_first, maxsteps=200, extraprec=2 * mpmath.mp.prec)
        roots.extend(mpmath.mpc(r) for r in found)
    return roots


def poly_to_json(coeffs: Sequence) -> list:
    return [to_json(c) for c in coeffs]


# ----------------------------------------------------------------------------
# leading data


@dataclass
class LeadingData:
    nu: tuple
    nu_value: object
    A: list
    common_exponent: bool
    attained: list
    leading: list
    op: object

    @property
    def L(self) -> list:
        """Coefficients of L(z) = A_n z^n + ... + A_0, lowest first."""
        return list(self.A)

    def symbol(self, lam):
        """L evaluated at the operator symbol of x^lam: L(lam), L(q^lam) or A_0."""
        if isinstance(self.op, Mahler):
            return self.A[0]
        return poly_eval(self.A, self.op.symbol(lam))

    @property
    def a0_nonzero(self) -> bool:
        return not is_zero(self.A[0])

    @property
    def an_nonzero(self) -> bool:
        return not is_zero(self.A[-1])

    def min_partial_re(self):
        vals = [v for _, v in self.leading if v is not None]
        return min((real_part(v) for v in vals), key=_re_key) if vals else None

    def to_json(self) -> dict:
        return {
            "nu": list(self.nu),
            "nu_value": to_json(self.nu_value),
            "A": [to_json(a) for a in self.A],
            "common_exponent": self.common_exponent,
            "attained": list(self.attained),
            "leading": [None if m is None else list(m) for m, _ in self.leading],
        }


def _re_key(v):
    return v if is_exact(v) else mpmath.mpf(v)


def _same_re(sg: Semigroup, a, b) -> bool:
    ra, rb = sg.re_value(a), sg.re_value(b)
    if is_exact(ra) and is_exact(rb):
        return ra == rb
    return abs(ra - rb) < tolerance()


def _crowded(p: GSeries, nu) -> bool:
    """True when p has a term other than x^nu with the same real part."""
    return any(m != nu and _same_re(p.sg, m, nu) for m in p.terms)


def leading_data(partials: Sequence[GSeries], op) -> LeadingData:
    """Extract nu, A_0..A_n from the partials of F along a candidate series."""
    if not partials:
        raise NotSatisfied("no partial derivatives given")
    sg = partials[0].sg
    lows = [p.lowest() for p in partials]
    leading = [(None, None) if lo is None else (lo[0], sg.value(lo[0])) for lo in lows]
    details = {"leading": [None if m is None else list(m) for m, _ in leading]}

    if isinstance(op, Mahler):
        if lows[0] is None:
            raise NotSatisfied("the partial along y_0 vanishes identically", details)
        nu = lows[0][0]
        if _crowded(partials[0], nu):
            details["nu"] = list(nu)
            raise NotSatisfied("the partial along y_0 has several leading terms of equal real part", details)
        A = [lows[0][1]] + [Fraction(0)] * (len(partials) - 1)
        return LeadingData(nu, sg.value(nu), A, True, [0], leading, op)

    present = [lo for lo in lows if lo is not None]
    if not present:
        raise NotSatisfied("every partial derivative vanishes along the series", details)
    nu = min((lo[0] for lo in present), key=sg.key)
    A, attained, common = [], [], True
    for j, lo in enumerate(lows):
        if lo is not None and lo[0] == nu:
            if _crowded(partials[j], nu):
                common = False
            A.append(lo[1])
            attained.append(j)
            continue
        if lo is not None and _same_re(sg, lo[0], nu):
            common = False
        p = partials[j]
        if lo is None and not p.is_known(nu):
            common = False
        A.append(Fraction(0))
    if not common:
        details["nu"] = list(nu)
        details["attained"] = attained
        raise NotSatisfied("partials do not share a common leading exponent", details)
    return LeadingData(nu, sg.value(nu), A, True, attained, leading, op)


def check_solution(eq: FunctionalEquation, phi: GSeries, frontier=None):
    """Largest residual magnitude at exponents with Re <= frontier (default: phi's bound)."""
    res = residual(eq, phi)
    bound = phi.trunc_re if frontier is None else frontier
    worst = mpmath.mpf(0)
    for m, c in res.items():
        if bound != INF and not _within(res.sg.re_value(m), bound):
            continue
        worst = max(worst, abs(to_mpc(c)))
    return worst


def _within(r, bound) -> bool:
    if is_exact(r) and is_exact(bound):
        return r <= bound
    return r <= bound + tolerance()
