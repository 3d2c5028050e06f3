"""Convergence checks: majorant series, small-divisor tables, arithmetic scans and certificates."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .equation import FunctionalEquation, poly_eval, poly_roots
from .errors import (AlphaUncertified, CapacityExceeded, NotSatisfied, PrefixTooShort, RationalInput,
                     ResonanceBlocked, RootInHalfPlane, ValidationError)
from .lattice import Semigroup
from .numbers import (decimal_string, is_exact, is_zero, log_branch, precision, to_json, to_mpc, to_mpf,
                      tolerance)
from .series import Differential, GSeries, Mahler, QDifference, _compositions, evaluate, lattice_points
from .solver import ReducedEquation, extend_solution, reduce_equation

SAFETY = mpmath.mpf("0.9")
DELTA_DEPTH_CAP = 12


def _num(x) -> str:
    return decimal_string(to_mpf(x)) if x != mpmath.inf else "inf"


# ----------------------------------------------------------------------------
# differential case: lower bound for the shifted symbol


def alpha_bound(L: Sequence, lam, n: int, min_re=0, samples: int = 400):
    """A constant alpha with |L(lam + rho)| >= alpha |rho|^j for Re rho >= min_re and j = 0..n.

    Both infima are taken on the boundary of the half-plane (and at infinity),
    where the holomorphic quotients attain their extremes, then scaled by 0.9.
    """
    A = list(L) + [Fraction(0)] * max(0, n + 1 - len(L))
    if len(A) > n + 1 and any(not is_zero(a) for a in A[n + 1:]):
        raise ValidationError("L has degree above the equation order")
    if is_zero(A[n]):
        raise NotSatisfied("the leading coefficient A_n of L vanishes")
    lam = to_mpc(lam)
    edge = to_mpf(min_re)
    shifted = [r - lam for r in poly_roots(A[: n + 1])]
    for b, r in zip(shifted, poly_roots(A[: n + 1])):
        if mpmath.re(b) >= edge - tolerance():
            raise RootInHalfPlane(r)
    lead = abs(to_mpc(A[n]))

    def ratio(rho):
        if rho == 0:
            return mpmath.inf
        out = lead
        for b in shifted:
            out *= abs(rho - b) / abs(rho)
        return out

    def symbol_abs(rho):
        return abs(poly_eval(A[: n + 1], lam + rho))

    ys = _sample_axis(shifted, samples)
    alpha1 = min([lead] + [ratio(mpmath.mpc(edge, y)) for y in ys])
    alpha1 = _refine(lambda y: ratio(mpmath.mpc(edge, y)), ys, alpha1)
    alpha2 = mpmath.inf
    if edge <= 1:
        h = mpmath.sqrt(1 - edge ** 2)
        seg = [edge + 1j * (-h + 2 * h * k / samples) for k in range(samples + 1)]
        theta0 = mpmath.acos(edge) if edge > -1 else mpmath.pi
        arc = [mpmath.expj(-theta0 + 2 * theta0 * k / samples) for k in range(samples + 1)]
        alpha2 = min(symbol_abs(z) for z in seg + arc)
    return SAFETY * min(alpha1, alpha2)


def _sample_axis(shifted, samples):
    ys = {mpmath.mpf(0)}
    for k in range(-samples // 2, samples // 2 + 1):
        ys.add(mpmath.sinh(mpmath.mpf(k) / (samples / 24)))
    for b in shifted:
        c, w = mpmath.im(b), max(abs(mpmath.re(b)), mpmath.mpf("1e-6"))
        for k in range(-20, 21):
            ys.add(c + w * k / 4)
    return sorted(ys)


def _refine(fn, ys, best):
    vals = [fn(y) for y in ys]
    i = min(range(len(vals)), key=lambda k: vals[k])
    lo = ys[max(i - 1, 0)]
    hi = ys[min(i + 1, len(ys) - 1)]
    for _ in range(60):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if fn(m1) < fn(m2):
            hi = m2
        else:
            lo = m1
    return min(best, vals[i], fn((lo + hi) / 2))


# ----------------------------------------------------------------------------
# majorant series


@dataclass
class MajorantRun:
    variant: str
    alpha: object
    C: dict
    domination: dict
    violations: list = field(default_factory=list)
    monotone_certified: bool | None = None
    monotone_observed: bool | None = None

    @property
    def holds(self) -> bool:
        return all(self.domination.values())

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "alpha": _num(self.alpha),
            "C": [{"m": list(m), "value": _num(v)} for m, v in sorted(self.C.items(), key=lambda t: (sum(t[0]), t[0]))],
            "domination": {str(k): v for k, v in sorted(self.domination.items())},
            "violations": [list(m) for m in self.violations],
            "monotone_certified": self.monotone_certified,
            "monotone_observed": self.monotone_observed,
        }


def _abs_data(red: ReducedEquation, scale=1) -> dict:
    """{(k, degree in u): sum |A_{k,p}|} from the right-hand side of the reduced form."""
    data: dict = {}
    for e, coef in red.M.terms.items():
        deg = sum(e[1:])
        for k, c in coef.terms.items():
            key = (k, deg)
            data[key] = data.get(key, mpmath.mpf(0)) + abs(to_mpc(c)) / scale
    return data


def _trunc_mul(a: dict, b: dict, top: int) -> dict:
    out: dict = {}
    for ma, ca in a.items():
        da = sum(ma)
        for mb, cb in b.items():
            if da + sum(mb) > top:
                continue
            key = tuple(x + y for x, y in zip(ma, mb))
            out[key] = out.get(key, 0) + ca * cb
    return out


def majorant_coefficients(data: dict, dim: int, depth: int, factor) -> dict:
    """C_m from C = factor * sum |A_{k,j}| x^k W^j with W = sum C_m x^m, level by level."""
    C: dict = {}
    top_j = max((j for _, j in data), default=0)
    for d in range(1, depth + 1):
        powers = {1: dict(C)}
        for j in range(2, top_j + 1):
            powers[j] = _trunc_mul(powers[j - 1], C, d)
        for m in lattice_points(dim, d, d):
            total = mpmath.mpf(0)
            for (k, j), a in data.items():
                if any(ki > mi for ki, mi in zip(k, m)):
                    continue
                rest = tuple(mi - ki for mi, ki in zip(m, k))
                if j == 0:
                    if not any(rest):
                        total += a
                elif any(rest):
                    total += a * powers[j].get(rest, 0)
            C[m] = factor * total
    return C


def q_alpha(red: ReducedEquation):
    """alpha <= 1 with alpha * eps_m <= 1 on the first level, for the normalized symbol."""
    eps = [_epsilon(red, red.sg.unit(i)) for i in range(red.sg.dim)]
    worst = max(eps)
    return min(mpmath.mpf(1), 1 / worst) if worst != mpmath.inf else mpmath.mpf(0)


def mahler_alpha(red: ReducedEquation, strict: bool = False):
    """Smallest power of two alpha >= 1 giving the first-order monotonicity inequalities.

    Returns ``(alpha, certified)``; with ``strict`` an uncertifiable axis raises.
    """
    sums = []
    for i in range(red.sg.dim):
        unit = red.sg.unit(i)
        total = mpmath.mpf(0)
        for e, coef in red.M.terms.items():
            if sum(e[1:]) == 1:
                total += abs(to_mpc(coef.coeff(unit)))
        sums.append(total)
    certified = all(s > 0 for s in sums)
    if strict and not certified:
        raise AlphaUncertified("some axis has no linear data; monotonicity can only be observed")
    alpha = mpmath.mpf(1)
    for s in sums:
        if s > 0:
            while alpha * s < 1:
                alpha *= 2
    return alpha, certified


def majorant(red: ReducedEquation, psi: GSeries, alpha, depth: int, delta=None) -> MajorantRun:
    """Majorant coefficients C_m and their domination of the tail coefficients ``psi``."""
    op = red.op
    dim = red.sg.dim
    if isinstance(op, Mahler):
        variant, factor, scale = "mu", to_mpf(alpha), 1
    elif isinstance(op, QDifference):
        variant, factor, scale = "sigma", 1 / to_mpf(alpha), abs(to_mpc(red.L[-1]))
        if delta is None:
            raise ValidationError("the q-variant needs a delta table")
    else:
        variant, factor, scale = "delta", 1 / to_mpf(alpha), 1
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    C = majorant_coefficients(_abs_data(red, scale), dim, depth, factor)
    slack = 1 + mpmath.ldexp(1, -precision() // 2)
    domination: dict = {}
    violations = []
    for m, bound in C.items():
        c = abs(to_mpc(psi.coeff(m)))
        weight = delta.delta[m] if delta is not None else 1
        ok = c <= weight * bound * slack + mpmath.ldexp(1, -precision() + 16)
        domination[sum(m)] = domination.get(sum(m), True) and bool(ok)
        if not ok:
            violations.append(m)
    run = MajorantRun(variant, alpha, C, domination, violations)
    if variant == "mu":
        _, run.monotone_certified = mahler_alpha(red)
        run.monotone_observed = all(C[m] * slack >= C[tuple(v - (j == i) for j, v in enumerate(m))]
                                    for m in C for i in range(dim)
                                    if m[i] and sum(m) > 1)
    return run


# ----------------------------------------------------------------------------
# q-case small-divisor table


@dataclass
class DeltaTable:
    eps: dict
    s: dict
    mu: dict
    delta: dict
    gamma: object
    N1: object
    N2: object
    Q: object
    bound: dict
    holds: dict

    @property
    def growth_bound_holds(self) -> bool:
        return all(self.holds.values())

    def to_json(self) -> dict:
        rows = []
        for m in sorted(self.delta, key=lambda v: (sum(v), v)):
            rows.append({"m": list(m), "eps": _num(self.eps[m]), "s": _num(self.s[m]), "mu": _num(self.mu[m]),
                         "delta": _num(self.delta[m]), "bound": _num(self.bound[m]), "holds": self.holds[m]})
        return {"gamma": _num(self.gamma), "N1": _num(self.N1), "N2": _num(self.N2), "Q": _num(self.Q),
                "rows": rows}


def _epsilon(red: ReducedEquation, m):
    lead = to_mpc(red.L[-1])
    value = abs(to_mpc(red.divisor(m)) / lead)
    return mpmath.inf if value == 0 else 1 / value


def delta_table(red: ReducedEquation, gamma, depth: int, cap: int = DELTA_DEPTH_CAP) -> DeltaTable:
    """eps_m, s_m, mu_m, delta_m for |m| <= depth, with the growth bound evaluated per m."""
    if not isinstance(red.op, QDifference):
        raise ValidationError("the delta table applies to q-difference equations")
    if depth > cap:
        raise CapacityExceeded(f"delta table depth {depth} exceeds the cap {cap}")
    if is_zero(red.L[-1]):
        raise NotSatisfied("the leading coefficient A_n of L vanishes")
    sg, op, n = red.sg, red.op, red.n
    gamma = to_mpf(gamma)
    eps, s, mu, delta, G, bound, holds = {}, {}, {}, {}, {}, {}, {}
    N1 = mpmath.mpf(2) ** (2 * gamma + 1)
    N2 = mpmath.mpf(8) ** (gamma * n) * N1 ** n
    Q = max([mpmath.mpf(1)] + [abs(to_mpc(op.symbol(g))) ** n for g in sg.generators])
    for d in range(1, depth + 1):
        for m in lattice_points(sg.dim, d, d):
            eps[m] = _epsilon(red, m)
            s[m] = max(mpmath.mpf(1), abs(to_mpc(op.symbol(sg.value(m)))))
            if d == 1:
                mu[m] = mpmath.mpf(1)
                delta[m] = mpmath.mpf(1)
            else:
                best = mpmath.mpf(0)
                for a in itertools.product(*(range(k + 1) for k in m)):
                    if not any(a) or a == m:
                        continue
                    b = tuple(x - y for x, y in zip(m, a))
                    best = max(best, G[a] * G[b])
                mu[m] = best
                delta[m] = eps[m] * best
            G[m] = max(mpmath.mpf(1), s[m] ** n * delta[m], mu[m])
            bound[m] = mpmath.mpf(d) ** (-2 * gamma * n) * N2 ** (d - 1) * Q ** d
            holds[m] = bool(s[m] ** n * delta[m] <= bound[m])
    return DeltaTable(eps, s, mu, delta, gamma, N1, N2, Q, bound, holds)


# ----------------------------------------------------------------------------
# arithmetic conditions


@dataclass
class ArithmeticReport:
    kind: str
    bound: int
    constants: dict
    verdict: str
    witness: dict | None = None
    min_value: object = None
    fitted: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "PassUpToBound"

    def to_json(self) -> dict:
        def conv(v):
            if isinstance(v, (mpmath.mpf, mpmath.mpc, Fraction)):
                return _num(abs(v)) if isinstance(v, mpmath.mpc) else _num(v)
            if isinstance(v, dict):
                return {k: conv(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            return v

        return {"kind": self.kind, "bound": self.bound, "constants": conv(self.constants),
                "verdict": self.verdict, "witness": conv(self.witness),
                "min_value": None if self.min_value is None else _num(self.min_value),
                "fitted": conv(self.fitted), "details": conv(self.details)}


def _rational_period(theta, limit: int = 64):
    for d in range(1, limit + 1):
        x = d * theta
        if abs(x - mpmath.nint(x)) < tolerance():
            return d
    return None


def _fixed(x, bits: int) -> int:
    frac = x - mpmath.floor(x)
    return int(mpmath.floor(frac * mpmath.ldexp(1, bits))) % (1 << bits)


class _Scan:
    """Search over lattice vectors for small |X_m - 2 pi i k|, X_m = base + sum m_i g_i."""

    def __init__(self, gens, base, c, gamma, bound, start=1):
        self.start = start
        self.gens = gens
        self.base = base
        self.c = c
        self.gamma = gamma
        self.bound = bound
        self.fit = gamma is None
        self.need = 0.0
        self.min_value = None
        self.min_vector = None
        self.periodic: list = []

    def exact_value(self, m):
        X = self.base + sum((k * g for k, g in zip(m, self.gens) if k), mpmath.mpc(0))
        k = int(mpmath.nint(mpmath.im(X) / (2 * mpmath.pi)))
        return abs(X - 2j * mpmath.pi * k), k

    def _consider(self, m, approx, level):
        """Returns True when ``m`` violates; updates fit and minimum bookkeeping."""
        if self.min_value is None or approx < self.min_value:
            self.min_value, self.min_vector = approx, m
        if self.fit:
            if approx >= float(self.c):
                return False
            v, _ = self.exact_value(m)
            if v >= self.c:
                return False
            if level == 1 or v == 0:
                return True
            self.need = max(self.need, float(mpmath.log(self.c / v) / math.log(level)))
            return False
        thr = float(self.c) * level ** (-float(self.gamma))
        if approx > 2 * thr + 1e-12:
            return False
        v, _ = self.exact_value(m)
        return v <= self.c * mpmath.mpf(level) ** (-self.gamma)

    def run(self):
        if all(abs(mpmath.re(g)) < tolerance() for g in self.gens):
            return self._run_rotation()
        return self._run_general()

    def _run_general(self):
        gens_f = [complex(g) for g in self.gens]
        base_f = complex(self.base)
        two_pi = 2 * math.pi
        for d in range(self.start, self.bound + 1):
            for m in lattice_points(len(self.gens), d, d):
                X = base_f + sum(k * g for k, g in zip(m, gens_f))
                k = round(X.imag / two_pi)
                approx = abs(X - 1j * two_pi * k)
                if self._consider(m, approx, d):
                    return m
        return None

    def _run_rotation(self):
        bits = precision() + 32
        one = 1 << bits
        dim = len(self.gens)
        two_pi = 2 * mpmath.pi
        thetas = [mpmath.im(g) / two_pi for g in self.gens]
        T = [_fixed(t, bits) for t in thetas]
        B = _fixed(mpmath.im(self.base) / two_pi, bits)
        re0 = float(abs(mpmath.re(self.base)))
        periods = [_rational_period(t) for t in thetas]
        rational = [i for i in range(dim) if periods[i] is not None]
        free = [i for i in range(dim) if periods[i] is None]
        for i in rational:
            m = tuple(periods[i] if j == i else 0 for j in range(dim))
            v, _ = self.exact_value(m)
            self.periodic.append({"m": m, "value": v})
        # larger multiples along a periodic axis repeat a smaller vector's value
        # at a stricter threshold, so only the period vectors themselves can be first
        periodic_hits = [p["m"] for p in self.periodic
                         if self.start <= sum(p["m"]) <= self.bound
                         and self._consider(p["m"], float(p["value"]), sum(p["m"]))]
        hit = self._scan_residues(dim, T, B, re0, periods, rational, free, one)
        candidates = periodic_hits + ([hit] if hit is not None else [])
        return min(candidates, key=sum) if candidates else None

    def _scan_residues(self, dim, T, B, re0, periods, rational, free, one):
        residues = list(itertools.product(*(range(periods[i]) for i in rational)))
        residues.sort(key=sum)
        two_pi_f = 2 * math.pi

        def approx_of(phase):
            dist = min(phase, one - phase) / one
            return math.hypot(re0, two_pi_f * dist)

        for d in range(self.start, self.bound + 1):
            for r in residues:
                rest = d - sum(r)
                if rest < 0:
                    break
                if not free and rest:
                    continue
                part = B
                for i, ri in zip(rational, r):
                    part += ri * T[i]
                for comp in (_compositions(rest, len(free)) if free else [()]):
                    m = [0] * dim
                    for i, ri in zip(rational, r):
                        m[i] = ri
                    phase = part
                    for i, ci in zip(free, comp):
                        m[i] = ci
                        phase += ci * T[i]
                    if not any(m):
                        continue
                    m = tuple(m)
                    if self._consider(m, approx_of(phase % one), d):
                        return m
            if not free and d >= sum(periods[i] - 1 for i in rational):
                break
        return None


def diophantine_check(sg: Semigroup, q, roots: Sequence, c=None, gamma=None, bound: int = 40,
                      shift=0, unit_root: bool = False, start: int = 1) -> ArithmeticReport:
    """Scan |(m.rho) ln q + shift ln q - ln a - 2 pi k i| > c |m|^-gamma over 0 < |m| <= bound.

    Without ``c`` and ``gamma`` the scan fits the smallest half-integer gamma
    that works with c = 1/2. ``unit_root`` adds the root 1 with no shift.
    Levels below ``start`` are skipped.
    """
    if bound < 1 or not 1 <= start <= bound:
        raise ValidationError("bound must be positive")
    log_q = log_branch(q)
    gens = [to_mpc(g) * log_q for g in sg.generators]
    targets = []
    for a in roots:
        if is_zero(a):
            continue
        base = to_mpc(shift) * log_q - log_branch(a)
        targets.append((a, base))
    if unit_root:
        targets.append((Fraction(1), mpmath.mpc(0)))
    fit = c is None and gamma is None
    if fit:
        c = mpmath.mpf("0.5")
    elif c is None or gamma is None:
        raise ValidationError("give both c and gamma, or neither to fit gamma")
    c = to_mpf(c)
    gamma_v = None if fit else to_mpf(gamma)
    witness = None
    need = 0.0
    min_value = None
    periodic = []
    for a, base in targets:
        scan = _Scan(gens, base, c, gamma_v, bound, start)
        hit = scan.run()
        periodic.extend({"root": a, **p} for p in scan.periodic)
        if scan.min_value is not None and (min_value is None or scan.min_value < min_value):
            min_value = scan.min_value
        need = max(need, scan.need)
        if hit is not None:
            value, k = _verify(gens, base, hit)
            cand = {"m_vector": list(hit), "m": k, "value": value, "root": a,
                    "threshold": c * mpmath.mpf(sum(hit)) ** (-(gamma_v if gamma_v is not None else 0))}
            if witness is None or sum(hit) < sum(witness["m_vector"]):
                witness = cand
    fitted = None
    if fit and witness is None:
        g = max(0.5, math.ceil(2 * need - 1e-12) / 2)
        fitted = {"c": c, "gamma": mpmath.mpf(g)}
    verdict = "PassUpToBound" if witness is None else "ViolationWitness"
    return ArithmeticReport("diophantine", bound, {"c": c, "gamma": gamma_v}, verdict, witness,
                            None if min_value is None else mpmath.mpf(min_value), fitted,
                            {"targets": len(targets), "periodic": periodic})


def _verify(gens, base, m):
    with mpmath.workprec(2 * precision()):
        X = base + sum((k * g for k, g in zip(m, gens) if k), mpmath.mpc(0))
        k = int(mpmath.nint(mpmath.im(X) / (2 * mpmath.pi)))
        value = abs(X - 2j * mpmath.pi * k)
    return +value, k


def siegel_check(q, c=1, nu=1, bound: int = 10_000) -> ArithmeticReport:
    """Scan k^nu |q^k - 1| >= c for k <= bound, with |q| = 1."""
    z = to_mpc(q)
    if abs(abs(z) - 1) > tolerance():
        raise ValidationError("the Siegel condition concerns multipliers on the unit circle")
    c, nu = to_mpf(c), to_mpf(nu)
    bits = precision() + 32
    one = 1 << bits
    theta = mpmath.arg(z) / (2 * mpmath.pi)
    T = _fixed(theta, bits)
    c_f, nu_f = float(c), float(nu)
    phase = 0
    best, best_k = None, None
    witness = None
    for k in range(1, bound + 1):
        phase = (phase + T) % one
        dist = min(phase, one - phase) / one
        value = k ** nu_f * 2 * math.sin(math.pi * dist)
        if best is None or value < best:
            best, best_k = value, k
        if value < 2 * c_f:
            exact = _siegel_value(z, k, nu)
            if exact < c:
                witness = {"k": k, "value": exact}
                break
    verdict = "PassUpToBound" if witness is None else "ViolationWitness"
    return ArithmeticReport("siegel", bound, {"c": c, "nu": nu}, verdict, witness,
                            mpmath.mpf(best) if best is not None else None, None, {"argmin": best_k})


def _siegel_value(z, k, nu):
    with mpmath.workprec(2 * precision()):
        return +(mpmath.mpf(k) ** nu * abs(z ** k - 1))


def bruno_check(omega, depth: int = 40) -> ArithmeticReport:
    """Continued-fraction denominators of omega and the partial sums of ln q_{j+1} / q_j."""
    if is_exact(omega):
        raise RationalInput("a rational number has a finite continued fraction")
    x = to_mpf(omega)
    x = x - mpmath.floor(x)
    limit = mpmath.ldexp(1, precision())
    q_prev, q_cur = 0, 1
    denominators = [1]
    for _ in range(depth):
        if x < mpmath.ldexp(1, -precision() // 2):
            raise RationalInput("the continued fraction terminates at working precision")
        x = 1 / x
        a = int(mpmath.floor(x))
        x -= a
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if q_cur ** 2 >= limit:
            break
        denominators.append(q_cur)
    if len(denominators) < 3:
        raise RationalInput("too few reliable convergents")
    terms = [mpmath.log(denominators[j + 1]) / denominators[j] for j in range(len(denominators) - 1)]
    sums = list(itertools.accumulate(terms))
    flagged = None
    for j in range(1, len(denominators) - 1):
        qj, qn = denominators[j], denominators[j + 1]
        if qj >= 100 and math.log(qn) / math.log(qj) >= 2:
            flagged = {"j": j, "q_j": qj, "q_next": qn, "log_ratio": math.log(qn) / math.log(qj)}
            break
    verdict = "PassUpToBound" if flagged is None else "ViolationWitness"
    return ArithmeticReport("bruno", len(denominators), {}, verdict, flagged, None, None,
                            {"denominators": [str(d) for d in denominators], "partial_sums": sums})


# ----------------------------------------------------------------------------
# position of the generators relative to the unit circle


@dataclass
class CaseReport:
    positions: list
    moduli: list
    label: str
    diophantine_roots: str | None

    def to_json(self) -> dict:
        return {"positions": self.positions, "moduli": [_num(m) for m in self.moduli], "label": self.label,
                "diophantine_roots": self.diophantine_roots}


def _position(modulus) -> str:
    if abs(modulus - 1) < tolerance():
        return "on"
    return "inside" if modulus < 1 else "outside"


def classify_case(sg: Semigroup, q, a0_nonzero: bool | None = None, an_nonzero: bool | None = None) -> CaseReport:
    log_q = log_branch(q)
    moduli = [abs(mpmath.exp(to_mpc(g) * log_q)) for g in sg.generators]
    pos = [_position(m) for m in moduli]
    a0 = a0_nonzero is not False
    an = an_nonzero is not False
    kinds = set(pos)
    if kinds == {"inside"} and a0:
        return CaseReport(pos, moduli, "6bis-a", None)
    if kinds == {"outside"} and an:
        return CaseReport(pos, moduli, "6bis-b", None)
    if kinds == {"on"}:
        return CaseReport(pos, moduli, "6bis-c", "circle")
    if kinds <= {"inside", "on"} and a0:
        return CaseReport(pos, moduli, "6bis-d", "circle")
    if kinds <= {"outside", "on"} and an:
        return CaseReport(pos, moduli, "6bis-e", "circle")
    if a0 and an:
        return CaseReport(pos, moduli, "6", "all")
    return CaseReport(pos, moduli, "none", None)


# ----------------------------------------------------------------------------
# coefficient growth


@dataclass
class GrowthFit:
    levels: list
    logs: list
    coefficients: list
    sigma: object
    flagged: bool

    def to_json(self) -> dict:
        return {"levels": self.levels, "log_max_abs": [_num(v) for v in self.logs],
                "fit": [_num(v) for v in self.coefficients], "quadratic_sigma": _num(self.sigma),
                "flagged": self.flagged}


def growth_fit(coefficients: dict, level=sum) -> GrowthFit:
    """Least squares of log max|c_m| per level against (1, level, level^2)."""
    best: dict = {}
    for m, c in coefficients.items():
        a = abs(to_mpc(c))
        if a == 0:
            continue
        d = level(m)
        best[d] = max(best.get(d, mpmath.mpf(0)), a)
    levels = sorted(best)
    logs = [mpmath.log(best[d]) for d in levels]
    if len(levels) < 5:
        return GrowthFit(levels, logs, [], mpmath.inf, False)
    X = mpmath.matrix([[1, d, d * d] for d in levels])
    y = mpmath.matrix(logs)
    beta, _ = mpmath.qr_solve(X, y)
    resid = y - X * beta
    rss = sum(r ** 2 for r in resid)
    dof = len(levels) - 3
    sigma2 = rss / dof
    cov = mpmath.inverse(X.T * X) * sigma2
    sig = mpmath.sqrt(abs(cov[2, 2]))
    coef = [beta[i] for i in range(3)]
    flagged = bool(coef[2] > 3 * sig and coef[2] > mpmath.mpf("1e-6"))
    return GrowthFit(levels, logs, coef, sig, flagged)


# ----------------------------------------------------------------------------
# certificates


@dataclass
class ConvergenceCertificate:
    theorem: str
    verdict: str
    reason: str | None
    evidence: dict
    depth: int
    precision_bits: int

    @property
    def certified(self) -> bool:
        return self.verdict == "CertifiedConvergent"

    def to_json(self) -> dict:
        ev = dict(self.evidence)
        if self.reason:
            ev["reason"] = self.reason
        return {"theorem": self.theorem, "verdict": self.verdict, "evidence": ev, "depth": self.depth,
                "precision_bits": self.precision_bits}


def _theorem_for(op) -> str:
    if isinstance(op, Differential):
        return "5"
    if isinstance(op, Mahler):
        return "7"
    return "6"


def _evaluation_evidence(phi: GSeries, point=mpmath.mpf("0.1")) -> dict:
    levels = sorted({sum(m) for m in phi.terms})
    values = []
    for d in levels:
        part = GSeries(phi.sg, {m: c for m, c in phi.terms.items() if sum(m) <= d})
        values.append(evaluate(part, point))
    inc = [abs(values[i + 1] - values[i]) for i in range(len(values) - 1)]
    return {"point": _num(point), "partial_sums": [to_json(v) for v in values],
            "increments": [_num(v) for v in inc]}


def certify(eq: FunctionalEquation, prefix: GSeries, depth: int = 8, scan_bound: int = 40,
            params=None) -> ConvergenceCertificate:
    """Check the hypotheses of the matching convergence theorem along a solution prefix."""
    theorem = _theorem_for(eq.op)
    evidence: dict = {}
    bits = precision()

    def failed(reason, coeffs=None):
        fit = growth_fit(coeffs if coeffs is not None else prefix.terms)
        evidence["growth"] = fit.to_json()
        verdict = "DivergenceEvidence" if fit.flagged else "HypothesisFailed"
        return ConvergenceCertificate(theorem, verdict, reason, evidence, depth, bits)

    try:
        red = reduce_equation(eq, prefix)
    except NotSatisfied as exc:
        evidence["leading"] = {k: v for k, v in exc.details.items()}
        evidence["evaluation"] = _evaluation_evidence(prefix)
        return failed(f"leading-term hypothesis: {exc}")
    except PrefixTooShort as exc:
        return failed(f"prefix too short: {exc}")
    evidence["leading"] = red.leading.to_json()
    evidence["reduced"] = red.to_json()
    try:
        phi, psi, transcript = extend_solution(red, depth, params)
    except ResonanceBlocked as exc:
        return failed(f"resonance blocks the recurrence at {list(exc.where)}")
    evidence["transcript"] = {"free_parameters": [list(m) for m in transcript.free]}
    coeffs = {m: c for m, c in psi.terms.items()}
    growth = growth_fit(coeffs)

    if isinstance(eq.op, Differential):
        if is_zero(red.L[-1]) or len(red.L) != red.n + 1:
            return failed("A_n = 0: the symbol has degree below the equation order", coeffs)
        min_re = min(red.sg.re_value(red.sg.unit(i)) for i in range(red.sg.dim))
        try:
            alpha = alpha_bound(red.L, red.lam, red.n, min_re)
        except RootInHalfPlane as exc:
            return failed(str(exc), coeffs)
        run = majorant(red, psi, alpha, depth)
        evidence["majorant"] = run.to_json()
        ok, reason = run.holds, None if run.holds else "majorant does not dominate"
    elif isinstance(eq.op, Mahler):
        alpha, _ = mahler_alpha(red)
        run = majorant(red, psi, alpha, depth)
        evidence["majorant"] = run.to_json()
        ok = run.holds and bool(run.monotone_certified)
        reason = None if ok else ("majorant does not dominate" if not run.holds
                                  else "alpha uncertified: monotonicity only observed")
    else:
        a0 = not is_zero(red.L[0])
        an = not is_zero(red.L[-1]) and len(red.L) == red.n + 1
        case = classify_case(red.sg, eq.op.q, a0, an)
        evidence["case"] = case.to_json()
        theorem = case.label if case.label != "none" else "6"
        if case.label == "none":
            outside = "outside" in case.positions
            if not an and outside:
                reason = "A_n = 0 with a generator outside the unit circle"
            elif not a0:
                reason = "A_0 = 0 with a generator inside the unit circle"
            else:
                reason = "generator positions admit no applicable case"
            return failed(reason, coeffs)
        report, gamma = _arithmetic_for_case(red, case, scan_bound)
        if report is not None:
            evidence["arithmetic"] = report.to_json()
            if not report.passed:
                where = tuple(report.witness["m_vector"])
                return failed(f"the diophantine condition fails at m = {where}", coeffs)
        if not an:
            return failed("A_n = 0: cannot normalize the symbol", coeffs)
        alpha = q_alpha(red)
        if alpha <= 0:
            return failed("the symbol vanishes on the first level", coeffs)
        table = delta_table(red, gamma, min(depth, DELTA_DEPTH_CAP))
        evidence["delta_table"] = table.to_json()
        run = majorant(red, psi, alpha, min(depth, DELTA_DEPTH_CAP), table)
        evidence["majorant"] = run.to_json()
        ok = run.holds and table.growth_bound_holds
        reason = None if ok else ("majorant does not dominate" if not run.holds
                                  else "growth bound for delta fails")
    evidence["growth"] = growth.to_json()
    if ok:
        return ConvergenceCertificate(theorem, "CertifiedConvergent", None, evidence, depth, bits)
    verdict = "DivergenceEvidence" if growth.flagged else "HypothesisFailed"
    return ConvergenceCertificate(theorem, verdict, reason, evidence, depth, bits)


def _arithmetic_for_case(red: ReducedEquation, case: CaseReport, bound: int):
    if case.diophantine_roots is None:
        return None, mpmath.mpf("0.5")
    roots = poly_roots(red.L)
    if case.diophantine_roots == "circle":
        roots = [a for a in roots if _position(abs(a)) == "on"]
    report = diophantine_check(red.sg, red.op.q, roots, bound=bound, shift=red.lam, unit_root=True)
    gamma = report.fitted["gamma"] if report.fitted else mpmath.mpf("0.5")
    return report, gamma
