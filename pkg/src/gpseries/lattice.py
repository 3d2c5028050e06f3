"""Exponent lattices: semigroups of complex exponents and their integer coordinates.

An exponent is stored as an integer vector ``m`` over generators ``rho``; its
value is ``sum(m_i * rho_i)``.  Equality of exponents is always decided on the
coordinates.  Floating comparisons only happen when a raw complex number has to
be located on the lattice (``express``) or when looking for integer relations
(``regularize``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import (AmbiguousRepresentation, DependencyUndetected, NonTerminating,
                     NotRepresentable, ValidationError)
from .numbers import (as_scalar, from_json, imag_part, is_exact, real_part, to_json,
                      to_mpc, to_mpf, tolerance)

DEFAULT_RELATION_BOUND = 1000
DEFAULT_FRONTIER_CAP = 10_000


def _clean(x):
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    z = to_mpc(x)
    return z


@dataclass(frozen=True)
class Semigroup:
    """Additive semigroup generated by complex numbers with positive real part."""

    generators: tuple
    certified_bound: int | None = None
    transcript: tuple = field(default=(), compare=False, hash=False, repr=False)

    def __post_init__(self):
        gens = tuple(_clean(g) for g in self.generators)
        object.__setattr__(self, "generators", gens)
        if not gens:
            raise ValidationError("a semigroup needs at least one generator")
        for g in gens:
            if real_part(g) <= 0:
                raise ValidationError(f"generator {g} must have positive real part")
        conv = Fraction if all(is_exact(g) for g in gens) else to_mpf
        object.__setattr__(self, "_re", tuple(conv(real_part(g)) for g in gens))
        object.__setattr__(self, "_im", tuple(conv(imag_part(g)) for g in gens))

    @property
    def dim(self) -> int:
        return len(self.generators)

    @property
    def exact(self) -> bool:
        return all(is_exact(g) for g in self.generators)

    @property
    def certified(self) -> bool:
        return self.certified_bound is not None

    def value(self, m: Sequence[int]):
        total = Fraction(0) if self.exact else mpmath.mpc(0)
        for mi, g in zip(m, self.generators):
            if mi:
                total += mi * g
        return total

    def re_value(self, m: Sequence[int]):
        return sum((mi * r for mi, r in zip(m, self._re) if mi), Fraction(0) if self.exact else mpmath.mpf(0))

    def im_value(self, m: Sequence[int]):
        return sum((mi * r for mi, r in zip(m, self._im) if mi), Fraction(0) if self.exact else mpmath.mpf(0))

    def key(self, m: Sequence[int]):
        """Sort key: (Re, Im, coords)."""
        return (self.re_value(m), self.im_value(m), tuple(m))

    def unit(self, i: int) -> tuple:
        return tuple(1 if j == i else 0 for j in range(self.dim))

    def zero(self) -> tuple:
        return (0,) * self.dim

    def to_json(self) -> dict:
        return {"generators": [to_json(g) for g in self.generators],
                "certified_bound": self.certified_bound}

    @classmethod
    def from_json(cls, obj: dict) -> "Semigroup":
        return cls(tuple(from_json(g) for g in obj["generators"]), obj.get("certified_bound"))


def order_key(sg: Semigroup, v: Sequence[int]):
    """(Re, Im) of the exponent with coordinates ``v``."""
    if len(v) != sg.dim or any(c < 0 for c in v):
        raise ValidationError(f"{tuple(v)} is not a lattice vector over {sg.dim} generators")
    return sg.re_value(v), sg.im_value(v)


# ----------------------------------------------------------------------------
# Dickson minimal elements


@dataclass(frozen=True)
class HalfspaceConstraint:
    """Re(sum m_i w_i + offset) > 0, or >= 0 when ``strict`` is False."""

    weights: tuple
    offset: object = Fraction(0)
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(_clean(w) for w in self.weights))
        object.__setattr__(self, "offset", _clean(self.offset))

    @property
    def exact(self) -> bool:
        return is_exact(self.offset) and all(is_exact(w) for w in self.weights)

    def slope(self, i: int):
        r = real_part(self.weights[i])
        return r if self.exact else to_mpf(r)

    def base(self):
        r = real_part(self.offset)
        return r if self.exact else to_mpf(r)

    def margin(self, m: Sequence[int]):
        total = self.base()
        for i, mi in enumerate(m):
            if mi:
                total += mi * self.slope(i)
        return total

    def satisfied(self, m: Sequence[int]) -> bool:
        val = self.margin(m)
        if not is_exact(val) and abs(val) < tolerance():
            val = 0
        return val > 0 if self.strict else val >= 0


def dickson_minimal(c: HalfspaceConstraint, dim: int, cap: int = DEFAULT_FRONTIER_CAP) -> set:
    """Coordinatewise-minimal nonzero vectors of Z_+^dim satisfying ``c``."""
    if len(c.weights) != dim:
        raise ValidationError("constraint has the wrong number of weights")
    slopes = [c.slope(i) for i in range(dim)]
    growing = [i for i in range(dim) if slopes[i] > 0]
    found = set()
    for i in range(dim):
        if i not in growing:
            e = tuple(1 if j == i else 0 for j in range(dim))
            if c.satisfied(e):
                found.add(e)
    if not growing:
        return found
    # a minimal element m has margin(m) <= min slope on its support, so each
    # coordinate is bounded by (max slope - offset) / slope_i
    top = max(slopes[i] for i in growing) - c.base()
    limits = {}
    for i in growing:
        b = top / slopes[i]
        b = math.floor(b) if is_exact(b) else int(mpmath.floor(b))
        if b > cap:
            raise NonTerminating(cap)
        limits[i] = max(b, 0)
    ranges = [range(limits[i] + 1) if i in limits else range(1) for i in range(dim)]
    for m in itertools.product(*ranges):
        if not any(m) or not c.satisfied(m):
            continue
        minimal = True
        for j in growing:
            if m[j]:
                lower = list(m)
                lower[j] -= 1
                if any(lower) and c.satisfied(lower):
                    minimal = False
                    break
        if minimal:
            found.add(tuple(m))
    return found


# ----------------------------------------------------------------------------
# Integer relations and regularization


_MIXERS = (lambda: mpmath.e / mpmath.pi, lambda: mpmath.log(3) * mpmath.sqrt(7))


def find_relation(values: Sequence, max_coeff: int = DEFAULT_RELATION_BOUND):
    """Nonzero integer vector k with sum k_i v_i = 0 (to tolerance), or None."""
    vals = [_clean(v) for v in values]
    if len(vals) < 2:
        return None
    if all(is_exact(v) for v in vals):
        return _rational_relation(vals)
    tol = tolerance()
    for make_theta in _MIXERS:
        theta = make_theta()
        reals = [to_mpf(real_part(v)) + theta * to_mpf(imag_part(v)) for v in vals]
        try:
            rel = mpmath.pslq(reals, tol=tol, maxcoeff=max_coeff, maxsteps=20000)
        except (ValueError, ZeroDivisionError):
            rel = None
        if rel is None:
            continue
        re_sum = sum(k * to_mpf(real_part(v)) for k, v in zip(rel, vals))
        im_sum = sum(k * to_mpf(imag_part(v)) for k, v in zip(rel, vals))
        scale = max(abs(to_mpc(v)) for v in vals)
        if abs(re_sum) <= tol * scale and abs(im_sum) <= tol * scale:
            return [int(k) for k in rel]
    return None


def _rational_relation(vals):
    # any two rationals are dependent; a single nonzero one is not
    nz = [i for i, v in enumerate(vals) if v != 0]
    if len(nz) < len(vals):
        i = next(i for i, v in enumerate(vals) if v == 0)
        return [1 if j == i else 0 for j in range(len(vals))]
    a, b = vals[0], vals[1]
    ratio = Fraction(b) / Fraction(a)
    rel = [0] * len(vals)
    rel[0] = ratio.numerator
    rel[1] = -ratio.denominator
    return rel


def _matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def _centroid_point(caps):
    """A rational point with 0 < x_i < caps_i and sum x_i = 1."""
    k = len(caps)
    if k == 1:
        return [Fraction(1)]
    verts = []
    for free in range(k):
        others = [i for i in range(k) if i != free]
        for choice in itertools.product((0, 1), repeat=k - 1):
            x = [mpmath.mpf(0)] * k
            for i, bit in zip(others, choice):
                x[i] = caps[i] if bit else mpmath.mpf(0)
            x[free] = 1 - sum(x[i] for i in others)
            if -tolerance() <= x[free] <= caps[free] + tolerance():
                if not any(all(abs(x[i] - v[i]) < tolerance() for i in range(k)) for v in verts):
                    verts.append(x)
    centre = [sum(v[i] for v in verts) / len(verts) for i in range(k)]
    denom = 64
    while denom <= 1 << 40:
        pt = [Fraction(mpmath.nstr(centre[i], 40)).limit_denominator(denom) for i in range(k - 1)]
        pt.append(1 - sum(pt))
        if all(0 < pt[i] and pt[i] < caps[i] for i in range(k)):
            return pt
        denom *= 2
    raise DependencyUndetected("no rational point strictly inside the admissible simplex")


def _one_minus(basis, coeffs):
    """Absorb b = sum coeffs_i basis_i with exactly one negative coefficient.

    Returns (new_basis, old_to_new, b_vec) with nonnegative integer entries.
    """
    t = next(i for i, c in enumerate(coeffs) if c < 0)
    pos = [i for i, c in enumerate(coeffs) if c > 0]
    if not pos:
        raise ValidationError("combination has negative real part")
    mt = -coeffs[t]
    rt_re = to_mpf(real_part(basis[t]))
    caps = [coeffs[i] * to_mpf(real_part(basis[i])) / (mt * rt_re) for i in pos]
    xs = _centroid_point(caps)
    denom = 1
    for i, x in zip(pos, xs):
        denom *= x.denominator * coeffs[i]
    new_basis = list(basis)
    for i, x in zip(pos, xs):
        new_basis[i] = basis[i] - (x / coeffs[i]) * mt * basis[t]
    new_basis[t] = basis[t] / denom
    n = len(basis)
    old_to_new = [[0] * n for _ in range(n)]
    for i in range(n):
        old_to_new[i][i] = 1
    for i, x in zip(pos, xs):
        ni = x * mt * denom / coeffs[i]
        assert ni.denominator == 1
        old_to_new[i][t] = int(ni)
    old_to_new[t][t] = denom
    bvec = [coeffs[i] if coeffs[i] > 0 else 0 for i in range(n)]
    return new_basis, old_to_new, bvec


def _absorb(basis, coeffs):
    """Make b = sum coeffs_i basis_i a nonnegative combination (induction on minus signs)."""
    n = len(basis)
    neg = [i for i, c in enumerate(coeffs) if c < 0]
    if not neg:
        return list(basis), [[1 if i == j else 0 for j in range(n)] for i in range(n)], list(coeffs)
    if len(neg) == 1:
        return _one_minus(basis, coeffs)
    t = neg[-1]
    keep = [i for i in range(n) if i != t]
    sub_basis = [basis[i] for i in keep]
    sub_coeffs = [coeffs[i] for i in keep]
    # b' = b + m_t r_t has one fewer minus sign
    sub_new, sub_map, bprime = _absorb(sub_basis, sub_coeffs)
    mid_basis = sub_new + [basis[t]]
    fin_basis, fin_map, bvec = _one_minus(mid_basis, bprime + [coeffs[t]])
    k = len(mid_basis)
    # old -> mid
    old_to_mid = [[0] * k for _ in range(n)]
    for row, i in enumerate(keep):
        for j in range(len(sub_new)):
            old_to_mid[i][j] = sub_map[row][j]
    old_to_mid[t][k - 1] = 1
    old_to_new = _matmul(old_to_mid, fin_map)
    # return in original slot order: place the basis of mid in positions keep + [t]
    order = keep + [t]
    perm_basis = [None] * n
    perm_map = [[0] * n for _ in range(n)]
    for slot, i in enumerate(order):
        perm_basis[i] = fin_basis[slot]
    for r in range(n):
        for slot, i in enumerate(order):
            perm_map[r][i] = old_to_new[r][slot]
    perm_b = [0] * n
    for slot, i in enumerate(order):
        perm_b[i] = bvec[slot]
    return perm_basis, perm_map, perm_b


def regularize(raw_generators: Sequence, max_coeff: int = DEFAULT_RELATION_BOUND):
    """Z-independent generators containing the semigroup spanned by ``raw_generators``.

    Returns ``(Semigroup, matrix)`` where ``matrix[i]`` writes raw generator ``i``
    as a nonnegative integer combination of the new generators.
    """
    raw = [as_scalar(g) if not isinstance(g, (Fraction, int)) else Fraction(g) for g in raw_generators]
    for g in raw:
        if real_part(g) <= 0:
            raise ValidationError(f"generator {g} must have positive real part")
    basis: list = []
    rows: list[list[int]] = []
    log = []

    def remap(matrix):
        for r in rows:
            new = [sum(r[i] * matrix[i][j] for i in range(len(r))) for j in range(len(matrix[0]))]
            r[:] = new

    for idx, g in enumerate(raw):
        rel = find_relation(basis + [g], max_coeff) if basis else None
        if rel is None or rel[-1] == 0:
            if rel is not None:
                raise DependencyUndetected("current generators satisfy an integer relation")
            for r in rows:
                r.append(0)
            basis.append(g)
            rows.append([0] * (len(basis) - 1) + [1])
            log.append({"raw": idx, "step": "independent"})
            continue
        d = rel[-1]
        coeffs = [-k for k in rel[:-1]]
        if d < 0:
            d, coeffs = -d, [-c for c in coeffs]
        if d > 1:
            scale = [[0] * len(basis) for _ in basis]
            for i, c in enumerate(coeffs):
                di = d // math.gcd(c, d) if c else 1
                scale[i][i] = di
                if di > 1:
                    basis[i] = basis[i] / di
                coeffs[i] = c // math.gcd(c, d) if c else 0
            remap(scale)
            log.append({"raw": idx, "step": "rescaled", "divisor": d})
        if all(c >= 0 for c in coeffs):
            rows.append(list(coeffs))
            log.append({"raw": idx, "step": "combination"})
            continue
        new_basis, old_to_new, bvec = _absorb(basis, coeffs)
        basis = new_basis
        remap(old_to_new)
        rows.append(bvec)
        log.append({"raw": idx, "step": "absorbed", "minus_signs": sum(1 for c in coeffs if c < 0)})

    if len(basis) > 1 and find_relation(basis, max_coeff) is not None:
        raise DependencyUndetected("regularized generators still satisfy an integer relation")
    sg = Semigroup(tuple(basis), max_coeff, tuple(log))
    return sg, [list(r) for r in rows]


def certify(generators: Sequence, max_coeff: int = DEFAULT_RELATION_BOUND) -> Semigroup:
    """Semigroup over ``generators`` after checking that no small integer relation exists."""
    gens = [_clean(g) for g in generators]
    if len(gens) > 1 and find_relation(gens, max_coeff) is not None:
        raise DependencyUndetected("generators are Z-dependent; regularize them first")
    return Semigroup(tuple(gens), max_coeff)


# ----------------------------------------------------------------------------
# Locating values on the lattice


def express(sg: Semigroup, target, bound: int) -> tuple:
    """The unique lattice vector with |m| <= bound and value ``target``."""
    if bound < 1:
        raise ValidationError("bound must be at least 1")
    target = _clean(target)
    exact = sg.exact and is_exact(target)
    t_re, t_im = real_part(target), imag_part(target)
    if not exact:
        t_re, t_im = to_mpf(t_re), to_mpf(t_im)
    tol = 0 if exact else tolerance() * max(1, abs(to_mpc(target)))
    res = list(sg._re)
    ims = list(sg._im)
    dim = sg.dim
    hits = []

    def close(a, b):
        return a == b if exact else abs(a - b) <= tol

    def rec(i, prefix, re_acc, im_acc, used):
        if i == dim - 1:
            rem = t_re - re_acc
            k = rem / res[i]
            if exact:
                if k.denominator != 1:
                    return
                k = int(k)
            else:
                k = int(mpmath.nint(k))
            if k < 0 or used + k > bound:
                return
            if close(re_acc + k * res[i], t_re) and close(im_acc + k * ims[i], t_im):
                hits.append(tuple(prefix + [k]))
            return
        k = 0
        while used + k <= bound:
            r = re_acc + k * res[i]
            if r > t_re + tol:
                break
            rec(i + 1, prefix + [k], r, im_acc + k * ims[i], used + k)
            k += 1

    rec(0, [], Fraction(0) if sg.exact else mpmath.mpf(0), Fraction(0) if sg.exact else mpmath.mpf(0), 0)
    if not hits:
        raise NotRepresentable(target, bound)
    if len(hits) > 1:
        raise AmbiguousRepresentation(target, hits)
    return hits[0]
