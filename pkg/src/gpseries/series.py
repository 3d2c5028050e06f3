"""Truncated generalized power series over an exponent lattice.

A ``GSeries`` maps lattice vectors to coefficients.  Its *known region* is the
set of vectors ``m`` with ``|m| <= trunc_deg`` and ``Re(value(m)) <= trunc_re``;
every coefficient inside the region is final (absent means zero), nothing
outside it is stored.  Because lattice values have nonnegative real part the
region is an order ideal, so sums and products are known on the intersection of
their inputs' regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .errors import (NonPositiveLeadingExponent, SemigroupMismatch, UncertifiedSemigroup,
                     ValidationError)
from .lattice import Semigroup, express
from .numbers import (from_json, is_exact, is_zero, log_branch, power, real_part, to_json,
                      to_mpc, to_mpf, tolerance)

INF = math.inf


# ----------------------------------------------------------------------------
# operators


@dataclass(frozen=True)
class Differential:
    """Euler derivative x d/dx."""

    name = "delta"

    def symbol(self, lam):
        return lam

    def term_factor(self, sg: Semigroup, m, j: int):
        return sg.value(m) ** j


@dataclass(frozen=True)
class QDifference:
    """Dilation y(x) -> y(qx); q**lam uses the log branch with 0 <= arg q < 2 pi."""

    q: object
    name = "sigma"

    def __post_init__(self):
        q = self.q if isinstance(self.q, Fraction) else (Fraction(self.q) if isinstance(self.q, int) else to_mpc(self.q))
        if (is_exact(q) and q in (0, 1)) or (not is_exact(q) and (q == 0 or q == 1)):
            raise ValidationError("q must differ from 0 and 1")
        object.__setattr__(self, "q", q)

    @property
    def log_q(self):
        return log_branch(self.q)

    def symbol(self, lam):
        return power(self.q, lam, None if is_exact(self.q) and is_exact(lam) else self.log_q)

    def term_factor(self, sg: Semigroup, m, j: int):
        return self.symbol(j * sg.value(m))


@dataclass(frozen=True)
class Mahler:
    """Substitution y(x) -> y(x**ell)."""

    ell: int
    name = "mu"

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 2:
            raise ValidationError("ell must be an integer >= 2")
        object.__setattr__(self, "ell", int(self.ell))

    def symbol(self, lam):
        return Fraction(1)


OperatorKind = Differential | QDifference | Mahler


def operator_to_json(op) -> dict:
    if isinstance(op, Differential):
        return {"kind": "delta"}
    if isinstance(op, QDifference):
        return {"kind": "sigma", "q": to_json(op.q), "log_q": to_json(op.log_q)}
    return {"kind": "mu", "ell": op.ell}


# ----------------------------------------------------------------------------
# GSeries


def _bound(sg: Semigroup, x):
    if x is None or x == INF:
        return INF
    if sg.exact and is_exact(x):
        return Fraction(x)
    return to_mpf(real_part(x)) if not isinstance(x, mpmath.mpf) else x


def _min_bound(a, b):
    if a == INF:
        return b
    if b == INF:
        return a
    return a if a <= b else b


class GSeries:
    __slots__ = ("sg", "terms", "trunc_re", "trunc_deg", "_order")

    def __init__(self, sg: Semigroup, terms=None, trunc_re=INF, trunc_deg=INF, prune=True):
        self.sg = sg
        self.trunc_re = _bound(sg, trunc_re)
        self.trunc_deg = INF if trunc_deg == INF else int(trunc_deg)
        self._order = None
        self.terms = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for m, c in items:
                m = tuple(int(v) for v in m)
                if len(m) != sg.dim:
                    raise ValidationError(f"vector {m} has wrong length for {sg.dim} generators")
                if prune and (is_zero(c) or not self.is_known(m)):
                    continue
                self.terms[m] = c

    # region ---------------------------------------------------------------
    def is_known(self, m) -> bool:
        if self.trunc_deg != INF and sum(m) > self.trunc_deg:
            return False
        if self.trunc_re == INF:
            return True
        r = self.sg.re_value(m)
        if self.sg.exact and is_exact(self.trunc_re):
            return r <= self.trunc_re
        return r <= self.trunc_re + tolerance()

    @property
    def exact_series(self) -> bool:
        return self.trunc_re == INF and self.trunc_deg == INF

    # construction -----------------------------------------------------------
    @classmethod
    def zero(cls, sg, trunc_re=INF, trunc_deg=INF):
        return cls(sg, None, trunc_re, trunc_deg)

    @classmethod
    def monomial(cls, sg, m, c=Fraction(1), trunc_re=INF, trunc_deg=INF):
        return cls(sg, {tuple(m): c}, trunc_re, trunc_deg)

    @classmethod
    def x_power(cls, sg, exponent, bound=64, c=Fraction(1)):
        """c * x**exponent, locating the exponent on the lattice."""
        if exponent == 0:
            return cls(sg, {sg.zero(): c})
        return cls(sg, {express(sg, exponent, bound): c})

    def copy(self, trunc_re=None, trunc_deg=None) -> "GSeries":
        tr = self.trunc_re if trunc_re is None else _min_bound(self.trunc_re, _bound(self.sg, trunc_re))
        td = self.trunc_deg if trunc_deg is None else _min_bound(self.trunc_deg, trunc_deg)
        return GSeries(self.sg, self.terms, tr, td)

    truncate = copy

    # access -----------------------------------------------------------------
    def ordered(self) -> list:
        if self._order is None:
            self._order = sorted(self.terms, key=self.sg.key)
        return self._order

    def items(self):
        for m in self.ordered():
            yield m, self.terms[m]

    def __iter__(self):
        return iter(self.ordered())

    def __len__(self):
        return len(self.terms)

    def coeff(self, m):
        return self.terms.get(tuple(m), Fraction(0))

    def __getitem__(self, m):
        return self.coeff(m)

    def lowest(self):
        """(vector, coefficient) of the lowest term, or None for a zero series."""
        order = self.ordered()
        if not order:
            return None
        return order[0], self.terms[order[0]]

    def min_re(self):
        low = self.lowest()
        return None if low is None else self.sg.re_value(low[0])

    def is_zero(self) -> bool:
        return not self.terms

    def value(self, m):
        return self.sg.value(m)

    # arithmetic -------------------------------------------------------------
    def _check(self, other: "GSeries"):
        if not isinstance(other, GSeries):
            raise TypeError("expected a GSeries")
        if other.sg.generators != self.sg.generators:
            raise SemigroupMismatch("series live on different exponent lattices")

    def __add__(self, other):
        if not isinstance(other, GSeries):
            if other == 0:
                return self
            return self + GSeries.monomial(self.sg, self.sg.zero(), other)
        self._check(other)
        tr = _min_bound(self.trunc_re, other.trunc_re)
        td = _min_bound(self.trunc_deg, other.trunc_deg)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms[m] + c if m in terms else c
        return GSeries(self.sg, terms, tr, td)

    __radd__ = __add__

    def __neg__(self):
        return GSeries(self.sg, {m: -c for m, c in self.terms.items()}, self.trunc_re, self.trunc_deg, prune=False)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "GSeries":
        return GSeries(self.sg, {m: c * v for m, v in self.terms.items()}, self.trunc_re, self.trunc_deg)

    def __mul__(self, other):
        if not isinstance(other, GSeries):
            return self.scale(other)
        self._check(other)
        tr = _min_bound(self.trunc_re, other.trunc_re)
        td = _min_bound(self.trunc_deg, other.trunc_deg)
        sg = self.sg
        exact_re = sg.exact and (tr == INF or is_exact(tr))
        limit = tr if (tr == INF or exact_re) else tr + tolerance()
        a = [(m, c, sum(m), sg.re_value(m)) for m, c in self.terms.items()]
        b = [(m, c, sum(m), sg.re_value(m)) for m, c in other.terms.items()]
        out = {}
        for ma, ca, da, ra in a:
            for mb, cb, db, rb in b:
                if td != INF and da + db > td:
                    continue
                if limit != INF and ra + rb > limit:
                    continue
                key = tuple(x + y for x, y in zip(ma, mb))
                v = ca * cb
                out[key] = out[key] + v if key in out else v
        return GSeries(sg, out, tr, td)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not supported")
        result = GSeries.monomial(self.sg, self.sg.zero(), Fraction(1))
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def shift(self, v: Sequence[int]) -> "GSeries":
        """Multiply by x**value(v); ``v`` may have negative entries."""
        v = tuple(v)
        terms = {tuple(a + b for a, b in zip(m, v)): c for m, c in self.terms.items()}
        tr = INF if self.trunc_re == INF else self.trunc_re + self.sg.re_value(v)
        td = INF if self.trunc_deg == INF else self.trunc_deg + sum(v)
        out = GSeries(self.sg, None, tr, td)
        out.terms = {m: c for m, c in terms.items() if not is_zero(c)}
        return out

    def map_coeffs(self, fn) -> "GSeries":
        return GSeries(self.sg, {m: fn(m, c) for m, c in self.terms.items()}, self.trunc_re, self.trunc_deg)

    def max_abs_diff(self, other: "GSeries", within=None):
        """Largest |coefficient difference| over the union of supports."""
        keys = set(self.terms) | set(other.terms)
        worst = mpmath.mpf(0)
        for m in keys:
            if within is not None and not within(m):
                continue
            d = abs(to_mpc(self.coeff(m) - other.coeff(m)))
            if d > worst:
                worst = d
        return worst

    def __repr__(self):
        body = " + ".join(f"({mpmath.nstr(to_mpc(c), 8) if not is_exact(c) else c})*x^{m}" for m, c in list(self.items())[:6])
        more = "" if len(self.terms) <= 6 else f" + ... ({len(self.terms)} terms)"
        return f"GSeries[{body or '0'}{more}; Re<={self.trunc_re}, |m|<={self.trunc_deg}]"

    # serialization ----------------------------------------------------------
    def to_json(self) -> dict:
        def bound(x):
            return None if x == INF else (str(x) if is_exact(x) else mpmath.nstr(x, 30))
        return {
            "semigroup": self.sg.to_json(),
            "terms": [{"m": list(m), **to_json(c)} for m, c in self.items()],
            "trunc_re": bound(self.trunc_re),
            "trunc_deg": None if self.trunc_deg == INF else self.trunc_deg,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GSeries":
        sg = Semigroup.from_json(obj["semigroup"])
        tr = obj.get("trunc_re")
        tr = INF if tr is None else (Fraction(tr) if sg.exact else mpmath.mpf(tr))
        td = obj.get("trunc_deg")
        terms = {tuple(t["m"]): from_json(t) for t in obj["terms"]}
        return cls(sg, terms, tr, INF if td is None else td)


def add(a: GSeries, b: GSeries) -> GSeries:
    return a + b


def mul(a: GSeries, b: GSeries) -> GSeries:
    return a * b


def apply_operator(op, j: int, s: GSeries) -> GSeries:
    """Apply delta**j, sigma**j or mu**j termwise."""
    if j < 0:
        raise ValueError("operator power must be nonnegative")
    if j == 0:
        return s
    sg = s.sg
    if isinstance(op, Mahler):
        f = op.ell ** j
        out = GSeries(sg, None, INF if s.trunc_re == INF else s.trunc_re * f,
                      INF if s.trunc_deg == INF else s.trunc_deg * f)
        out.terms = {tuple(f * v for v in m): c for m, c in s.terms.items()}
        return out
    if isinstance(op, QDifference):
        base = [op.symbol(g) for g in sg.generators]
        terms = {}
        for m, c in s.terms.items():
            factor = Fraction(1)
            for bi, mi in zip(base, m):
                if mi:
                    factor = factor * bi ** (j * mi)
            terms[m] = c * factor
        return GSeries(sg, terms, s.trunc_re, s.trunc_deg)
    return GSeries(sg, {m: c * sg.value(m) ** j for m, c in s.terms.items()}, s.trunc_re, s.trunc_deg)


def evaluate(s: GSeries, x, sector_branch=0):
    """Partial sum at the point x, with arg x taken in (center - pi, center + pi]."""
    z = to_mpc(x)
    if z == 0:
        raise ValidationError("cannot evaluate at x = 0")
    center = to_mpf(sector_branch)
    arg = mpmath.arg(z)
    while arg <= center - mpmath.pi:
        arg += 2 * mpmath.pi
    while arg > center + mpmath.pi:
        arg -= 2 * mpmath.pi
    logx = mpmath.log(abs(z)) + 1j * arg
    gen_pow = [mpmath.exp(to_mpc(g) * logx) for g in s.sg.generators]
    total = mpmath.mpc(0)
    for m, c in s.terms.items():
        t = to_mpc(c)
        for p, k in zip(gen_pow, m):
            if k:
                t *= p ** k
        total += t
    return total


# ----------------------------------------------------------------------------
# MultiSeries


class MultiSeries:
    """Polynomial / truncated Taylor series in ``nvars`` variables.

    Coefficients are scalars or GSeries (the latter for equations whose
    x-dependence has already been absorbed into generalized series).
    """

    __slots__ = ("nvars", "terms", "trunc_deg")

    def __init__(self, nvars: int, terms=None, trunc_deg=INF):
        self.nvars = nvars
        self.trunc_deg = trunc_deg
        self.terms = {}
        if terms:
            items = terms.items() if isinstance(terms, dict) else terms
            for e, c in items:
                e = tuple(int(v) for v in e)
                if len(e) != nvars:
                    raise ValidationError("exponent tuple has the wrong length")
                if trunc_deg != INF and sum(e) > trunc_deg:
                    continue
                if _coeff_zero(c):
                    continue
                self.terms[e] = c

    @classmethod
    def variable(cls, nvars, i, trunc_deg=INF):
        return cls(nvars, {tuple(1 if j == i else 0 for j in range(nvars)): Fraction(1)}, trunc_deg)

    @classmethod
    def constant(cls, nvars, c, trunc_deg=INF):
        return cls(nvars, {(0,) * nvars: c}, trunc_deg)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def uses(self, i: int) -> bool:
        return any(e[i] for e in self.terms)

    def _combine(self, other, sign):
        if not isinstance(other, MultiSeries):
            other = MultiSeries.constant(self.nvars, other)
        if other.nvars != self.nvars:
            raise ValidationError("variable count mismatch")
        terms = dict(self.terms)
        for e, c in other.terms.items():
            c = c if sign > 0 else -c
            terms[e] = terms[e] + c if e in terms else c
        return MultiSeries(self.nvars, terms, _min_bound(self.trunc_deg, other.trunc_deg))

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return MultiSeries(self.nvars, {e: -c for e, c in self.terms.items()}, self.trunc_deg)

    def __mul__(self, other):
        if not isinstance(other, MultiSeries):
            return MultiSeries(self.nvars, {e: c * other for e, c in self.terms.items()}, self.trunc_deg)
        if other.nvars != self.nvars:
            raise ValidationError("variable count mismatch")
        td = _min_bound(self.trunc_deg, other.trunc_deg)
        out = {}
        for ea, ca in self.terms.items():
            da = sum(ea)
            for eb, cb in other.terms.items():
                if td != INF and da + sum(eb) > td:
                    continue
                e = tuple(x + y for x, y in zip(ea, eb))
                v = ca * cb
                out[e] = out[e] + v if e in out else v
        return MultiSeries(self.nvars, out, td)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = MultiSeries.constant(self.nvars, Fraction(1), self.trunc_deg)
        for _ in range(k):
            result = result * self
        return result

    def derivative(self, i: int) -> "MultiSeries":
        terms = {}
        for e, c in self.terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                terms[tuple(f)] = c * e[i]
        td = self.trunc_deg if self.trunc_deg == INF else self.trunc_deg - 1
        return MultiSeries(self.nvars, terms, td)

    def evaluate(self, point: Sequence):
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for v, k in zip(point, e):
                if k:
                    t = t * v ** k
            total = total + t
        return total

    def coefficient(self, e):
        return self.terms.get(tuple(e), Fraction(0))

    def equals(self, other: "MultiSeries", tol=None) -> bool:
        keys = set(self.terms) | set(other.terms)
        for e in keys:
            d = self.coefficient(e) - other.coefficient(e)
            if isinstance(d, GSeries):
                if not all(is_zero(v) for v in d.terms.values()):
                    return False
            elif tol is None:
                if not is_zero(d):
                    return False
            elif abs(to_mpc(d)) > tol:
                return False
        return True

    def to_json(self) -> dict:
        out = []
        for e, c in sorted(self.terms.items()):
            if isinstance(c, GSeries):
                out.append({"e": list(e), "series": c.to_json()})
            else:
                out.append({"e": list(e), **to_json(c)})
        return {"nvars": self.nvars, "trunc_deg": None if self.trunc_deg == INF else self.trunc_deg,
                "terms": out}

    @classmethod
    def from_json(cls, obj: dict) -> "MultiSeries":
        terms = {}
        for t in obj["terms"]:
            terms[tuple(t["e"])] = GSeries.from_json(t["series"]) if "series" in t else from_json(t)
        td = obj.get("trunc_deg")
        return cls(obj["nvars"], terms, INF if td is None else td)

    def __repr__(self):
        return f"MultiSeries({self.nvars} vars, {len(self.terms)} terms)"


def _coeff_zero(c) -> bool:
    if isinstance(c, GSeries):
        return c.is_zero() and c.exact_series
    return is_zero(c)


def substitute(F: MultiSeries, x_and_args: Sequence, sg: Semigroup | None = None) -> GSeries:
    """F(x, y_0, ..., y_n) with generalized series plugged in.

    ``x_and_args[0]`` is the series for x, or None to build each x**a directly
    on the lattice (useful when 1 itself is not a lattice value).
    """
    xs, args = x_and_args[0], list(x_and_args[1:])
    if len(args) + 1 != F.nvars:
        raise ValidationError("argument count does not match the equation")
    if sg is None:
        sg = (xs or args[0]).sg
    for a in args:
        low = a.lowest()
        if low is not None and a.sg.re_value(low[0]) <= 0:
            raise NonPositiveLeadingExponent("arguments must start at an exponent with positive real part")
    tr = INF
    td = INF
    for a in args:
        tr = _min_bound(tr, a.trunc_re)
        td = _min_bound(td, a.trunc_deg)
    cache: dict = {}

    def pw(i, k):
        key = (i, k)
        if key not in cache:
            if k == 0:
                cache[key] = GSeries.monomial(sg, sg.zero(), Fraction(1))
            elif i == 0:
                cache[key] = (xs ** k) if xs is not None else GSeries.x_power(sg, k)
            else:
                cache[key] = pw(i, k - 1) * args[i - 1] if k > 1 else args[i - 1]
        return cache[key]

    total = GSeries(sg, None, tr, td)
    for e, c in F.terms.items():
        term = None
        for i, k in enumerate(e):
            if k:
                p = pw(i, k)
                term = p if term is None else term * p
        if term is None:
            term = GSeries.monomial(sg, sg.zero(), Fraction(1))
        if isinstance(c, GSeries):
            term = term * c
        else:
            term = term.scale(c)
        total = total + term.copy(tr, td)
    return total


# ----------------------------------------------------------------------------
# iota: generalized series <-> Taylor series in tau variables


def iota(s: GSeries) -> MultiSeries:
    if not s.sg.certified:
        raise UncertifiedSemigroup("the lattice has no independence certificate")
    return MultiSeries(s.sg.dim, dict(s.terms), s.trunc_deg)


def iota_inv(m: MultiSeries, sg: Semigroup) -> GSeries:
    if not sg.certified:
        raise UncertifiedSemigroup("the lattice has no independence certificate")
    if m.nvars != sg.dim:
        raise ValidationError("variable count differs from the number of generators")
    return GSeries(sg, dict(m.terms), INF, m.trunc_deg)


def transported_operator(op, j: int, m: MultiSeries, sg: Semigroup) -> MultiSeries:
    """delta, sigma or mu moved to Taylor series: monomial x_1^m_1...x_t^m_t is
    scaled by value(m)**j, by q**(j*value(m)), or has its exponents multiplied by ell**j."""
    if isinstance(op, Mahler):
        f = op.ell ** j
        td = INF if m.trunc_deg == INF else m.trunc_deg * f
        return MultiSeries(m.nvars, {tuple(f * v for v in e): c for e, c in m.terms.items()}, td)
    terms = {}
    for e, c in m.terms.items():
        val = sum(k * g for k, g in zip(e, sg.generators))
        terms[e] = c * (val ** j if isinstance(op, Differential) else op.symbol(j * val))
    return MultiSeries(m.nvars, terms, m.trunc_deg)


def lattice_points(dim: int, max_deg: int, min_deg: int = 1) -> Iterable[tuple]:
    """All vectors of Z_+^dim with min_deg <= |m| <= max_deg, level by level, lex within a level."""
    for d in range(min_deg, max_deg + 1):
        yield from _compositions(d, dim)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
