"""Formal solutions: Taylor recurrences, lattice block solving, reduction to a
special form, coefficient recurrences and the linearizing conjugators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .equation import (FunctionalEquation, LeadingData, leading_data, partials_along, poly_eval, poly_roots,
                       residual)
from .errors import (ConjugatorUnavailable, DegenerateEquation, NonLinearizable, NotSatisfied,
                     PrefixTooShort, ResonanceBlocked, SmallDivisorBreakdown, ValidationError)
from .lattice import HalfspaceConstraint, Semigroup, certify, dickson_minimal, express, regularize
from .numbers import exact, is_exact, is_small, is_zero, log_branch, real_part, to_json, to_mpc, to_mpf, tolerance
from .series import (INF, Differential, GSeries, Mahler, MultiSeries, QDifference, apply_operator,
                     lattice_points, substitute)

TAYLOR = certify([Fraction(1)])

NEWTON_STEPS = 6
EXPRESS_BOUND = 64


# ----------------------------------------------------------------------------
# transcripts


@dataclass
class SolveTranscript:
    """Per-coefficient log: solved values with their divisors, resonances and free parameters."""

    entries: list = field(default_factory=list)
    resonances: list = field(default_factory=list)
    free: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def solved(self, m, value, divisor):
        self.entries.append({"m": tuple(m), "value": value, "divisor": divisor})

    def resonant(self, m, divisor, rhs, value):
        self.resonances.append({"m": tuple(m), "divisor": divisor, "rhs": rhs})
        self.free.append(tuple(m))
        self.entries.append({"m": tuple(m), "value": value, "divisor": divisor, "free": True})

    def to_json(self) -> dict:
        return {
            "coefficients": [{"m": list(e["m"]), "value": to_json(e["value"]),
                              "divisor": to_json(e["divisor"]), "free": e.get("free", False)}
                             for e in self.entries],
            "resonances": [{"m": list(r["m"]), "divisor": to_json(r["divisor"]), "rhs": to_json(r["rhs"])}
                           for r in self.resonances],
            "free_parameters": [list(m) for m in self.free],
            "notes": list(self.notes),
        }


# ----------------------------------------------------------------------------
# small helpers


def _vanishes(x, scale=1) -> bool:
    if is_exact(x):
        return x == 0
    return abs(to_mpc(x)) < tolerance() * max(1, scale)


def _re_equal(a, b) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(to_mpf(a) - to_mpf(b)) < tolerance()


def _re_less(a, b) -> bool:
    return not _re_equal(a, b) and a < b


def _magnitude(x):
    return abs(x) if is_exact(x) else abs(to_mpc(x))


def _divide(a, b):
    if is_exact(a) and is_exact(b):
        return Fraction(a) / Fraction(b)
    return to_mpc(a) / to_mpc(b)


def _symbol_power(op, lam):
    """Factor picked up by x**lam under one application of the operator."""
    if isinstance(op, Differential):
        return lam
    return op.symbol(lam)


# ----------------------------------------------------------------------------
# classical exponents


def solve_taylor(eq: FunctionalEquation, order: int, init=None):
    """Taylor coefficients c_1..c_order of a solution with y(0) = 0.

    ``init`` maps k to the value used when the divisor at k vanishes and the
    right-hand side does too.
    """
    if order < 1:
        raise ValidationError("order must be positive")
    init = dict(init or {})
    if not is_zero(eq.constant_term()):
        raise DegenerateEquation("F(0, 0, ..., 0) is nonzero, so no solution vanishes at the origin")
    A = eq.linear_coefficients()
    if all(is_zero(a) for a in A):
        raise DegenerateEquation("F has no linear part in y_0..y_n")
    op = eq.op
    if isinstance(op, Mahler):
        if is_zero(A[0]):
            raise DegenerateEquation("the coefficient of y_0 vanishes at the origin")

    def divisor(k):
        if isinstance(op, Mahler):
            return A[0]
        z = _symbol_power(op, Fraction(k))
        return poly_eval(A, z)

    transcript = SolveTranscript()
    coeffs: dict = {}
    for k in range(1, order + 1):
        phi = GSeries(TAYLOR, coeffs, trunc_re=k, trunc_deg=k)
        rhs = residual(eq, phi).coeff((k,))
        d = divisor(k)
        if _vanishes(d):
            if not _vanishes(rhs):
                raise ResonanceBlocked((k,), d, rhs)
            value = init.get(k, Fraction(0))
            transcript.resonant((k,), d, rhs, value)
        else:
            value = -_divide(rhs, d)
            transcript.solved((k,), value, d)
        if not is_zero(value):
            coeffs[(k,)] = value
    return GSeries(TAYLOR, coeffs, trunc_re=order, trunc_deg=order), transcript


# ----------------------------------------------------------------------------
# block solving over an arbitrary lattice


def _eliminate(rows: list, rhs: list, ncols: int, fixed: dict):
    """Solve rows . c = rhs by Gauss-Jordan elimination with complete pivoting.

    ``fixed`` gives values for columns that turn out to be free. Returns
    ``(solution, free_columns, smallest_pivot)``; raises ``_Inconsistent`` when
    a row reduces to 0 = nonzero.
    """
    exact = all(is_exact(v) for r in rows for v in r) and all(is_exact(b) for b in rhs)
    conv = (lambda v: Fraction(v)) if exact else to_mpc
    M = [[conv(v) for v in r] + [conv(b)] for r, b in zip(rows, rhs)]
    scale = max([_magnitude(v) for r in M for v in r[:ncols]] + [1])
    nrows = len(M)
    pivots = []
    used_rows = 0
    smallest = None
    free_cols = set(range(ncols))
    while used_rows < nrows and free_cols:
        best = None
        for i in range(used_rows, nrows):
            for j in free_cols:
                v = _magnitude(M[i][j])
                if best is None or v > best[0]:
                    best = (v, i, j)
        if best is None or (best[0] == 0 if exact else best[0] < tolerance() * scale):
            break
        _, i, j = best
        M[used_rows], M[i] = M[i], M[used_rows]
        piv = M[used_rows][j]
        smallest = best[0] if smallest is None else min(smallest, best[0])
        for r in range(nrows):
            if r != used_rows and not (M[r][j] == 0):
                f = M[r][j] / piv
                M[r] = [a - f * b for a, b in zip(M[r], M[used_rows])]
        pivots.append((used_rows, j))
        free_cols.discard(j)
        used_rows += 1
    for r in range(used_rows, nrows):
        b = M[r][ncols]
        if not (b == 0 if exact else _magnitude(b) < tolerance() * scale):
            raise _Inconsistent(r, b, smallest if smallest is not None else 0)
    solution = [None] * ncols
    for j in free_cols:
        solution[j] = fixed.get(j, Fraction(0))
    for r, j in pivots:
        acc = M[r][ncols]
        for f in free_cols:
            if M[r][f] != 0 and solution[f] != 0:
                acc -= M[r][f] * solution[f]
        solution[j] = acc / M[r][j]
    return solution, sorted(free_cols), smallest


class _Inconsistent(Exception):
    def __init__(self, row, value, pivot):
        super().__init__(row)
        self.row = row
        self.value = value
        self.pivot = pivot


def _linear_action(eq: FunctionalEquation, partials: list, v) -> GSeries:
    """sum_j P_j * D^j(x^v) for the monomial x^v."""
    sg = partials[0].sg
    op = eq.op
    total = None
    for j, p in enumerate(partials):
        if p.is_zero():
            continue
        if isinstance(op, Mahler):
            w = tuple(op.ell ** j * c for c in v)
            term = p.shift(w)
        else:
            term = p.shift(v).scale(op.term_factor(sg, v, j) if j else Fraction(1))
        total = term if total is None else total + term
    return total if total is not None else GSeries(sg)


def _action_offset(eq: FunctionalEquation, partials: list, re_v):
    """Smallest real-part gain of the linearized operator on a monomial with Re = re_v."""
    sg = partials[0].sg
    best = None
    for j, p in enumerate(partials):
        low = p.lowest()
        if low is None:
            continue
        s = sg.re_value(low[0])
        if isinstance(eq.op, Mahler):
            s = s + (eq.op.ell ** j - 1) * re_v
        best = s if best is None or s < best else best
    return best


def _group_by_re(sg: Semigroup, vectors: list) -> list:
    blocks: list = []
    for m in sorted(vectors, key=sg.key):
        r = sg.re_value(m)
        if blocks and _re_equal(blocks[-1][0], r):
            blocks[-1][1].append(m)
        else:
            blocks.append((r, [m]))
    return blocks


def solve(eq: FunctionalEquation, sg: Semigroup, init, depth: int, params=None):
    """Coefficients of a solution over the lattice, starting from known leading terms.

    Unknown coefficients are grouped by real part of their exponent; each group is
    fixed by the residual entries at the lowest real part it can influence.
    Returns ``(phi, transcript)`` where ``phi`` is complete up to ``phi.trunc_re``.
    """
    if depth < 1:
        raise ValidationError("depth must be positive")
    params = {tuple(k): v for k, v in (params or {}).items()}
    if isinstance(init, GSeries):
        known = dict(init.terms)
    else:
        known = {tuple(k): v for k, v in dict(init).items()}
    if not known:
        raise ValidationError("at least one leading term is required")
    for m in known:
        if len(m) != sg.dim or any(c < 0 for c in m) or not any(m):
            raise ValidationError(f"{m} is not a nonzero lattice vector")
    r0 = min(sg.re_value(m) for m in known)
    cut = min(sg.re_value(m) for m in lattice_points(sg.dim, depth + 1, depth + 1))
    candidates = [m for m in lattice_points(sg.dim, depth)
                  if m not in known and not _re_less(sg.re_value(m), r0) and _re_less(sg.re_value(m), cut)]
    transcript = SolveTranscript()
    solved = dict(known)
    frontier = r0
    for r_b, block in _group_by_re(sg, candidates):
        _solve_block(eq, sg, solved, r_b, block, params, transcript)
        frontier = r_b
    phi = GSeries(sg, solved, trunc_re=frontier)
    return phi, transcript


def _solve_block(eq, sg, solved, r_b, block, params, transcript):
    values = {m: params.get(m, Fraction(0)) for m in block}
    free_cols: list = []
    for step in range(NEWTON_STEPS):
        current = {**solved, **{m: v for m, v in values.items() if not is_zero(v)}}
        base = GSeries(sg, current, trunc_re=r_b)
        partials = partials_along(eq, base)
        gain = _action_offset(eq, partials, r_b)
        if gain is None:
            raise NotSatisfied("the linearized equation vanishes along the leading terms",
                               {"re": str(r_b)})
        r_e = r_b + gain
        phi = GSeries(sg, current, trunc_re=r_e)
        res = residual(eq, phi)
        partials = partials_along(eq, phi)
        actions = [_linear_action(eq, partials, m) for m in block]
        scale = max([1] + [_magnitude(c) for a in actions for _, c in a.items()])
        for w, c in res.items():
            rw = sg.re_value(w)
            if _re_less(rw, r_e) and not _vanishes(c, scale):
                raise NotSatisfied("leading terms are inconsistent with the equation",
                                   {"row": list(w), "value": str(to_mpc(c))})
        rows_at = sorted({w for w in res.terms if _re_equal(sg.re_value(w), r_e)}
                         | {w for a in actions for w in a.terms if _re_equal(sg.re_value(w), r_e)},
                         key=sg.key)
        rhs = [-res.coeff(w) for w in rows_at]
        if step and all(_vanishes(b, scale) for b in rhs):
            break
        matrix = [[a.coeff(w) for a in actions] for w in rows_at]
        try:
            delta, free_cols, _ = _eliminate(matrix, rhs, len(block), {})
        except _Inconsistent as exc:
            raise ResonanceBlocked(rows_at[exc.row], exc.pivot, exc.value) from None
        for m, d in zip(block, delta):
            values[m] = values[m] + d
        if all(_vanishes(d) for d in delta):
            break
    else:
        transcript.notes.append(f"block at Re {to_mpf(r_b)} stopped after {NEWTON_STEPS} corrections")
    free_set = set(free_cols)
    for j, m in enumerate(block):
        if j in free_set:
            transcript.resonant(m, Fraction(0), Fraction(0), values[m])
        else:
            transcript.solved(m, values[m], Fraction(1))
        if not is_zero(values[m]):
            solved[m] = values[m]


# ----------------------------------------------------------------------------
# reduction to the special form


@dataclass
class ReducedEquation:
    """L(D + lambda_N) u = M(x, u, Du, ...) (or u = M for Mahler) with y = Phi_N + x^lambda_N u."""

    eq: FunctionalEquation
    sg: Semigroup
    leading: LeadingData
    N: int
    lam_vector: tuple
    lam: object
    nu: tuple
    shift_vector: tuple
    prefix: GSeries
    M: MultiSeries
    notes: list = field(default_factory=list)

    @property
    def op(self):
        return self.eq.op

    @property
    def L(self) -> list:
        return self.leading.L

    @property
    def n(self) -> int:
        return self.eq.order

    def divisor(self, m):
        """Factor multiplying c_m in the coefficient recurrence."""
        if isinstance(self.op, Mahler):
            return Fraction(1)
        arg = self.lam + self.sg.value(m)
        return poly_eval(self.L, _symbol_power(self.op, arg))

    def prefix_terms(self) -> list:
        return [(m, self.prefix.coeff(m)) for m in self.prefix.ordered()]

    def to_json(self) -> dict:
        return {
            "semigroup": self.sg.to_json(),
            "L": [to_json(a) for a in self.L],
            "N": self.N,
            "lambda_N": to_json(self.lam),
            "lambda_vector": list(self.lam_vector),
            "nu": list(self.nu),
            "prefix": [{"m": list(m), "value": to_json(c)} for m, c in self.prefix_terms()],
            "rhs_terms": len(self.M.terms),
            "notes": list(self.notes),
        }


def _binomial(n, k):
    return math.comb(n, k)


def _candidate_Ns(prefix: GSeries, start: int) -> list:
    K = len(prefix.terms)
    out = []
    N = max(1, start)
    while N < K:
        out.append(N)
        N *= 2
    out.append(K)
    return sorted(set(out))


def _separated(prefix: GSeries, N: int) -> bool:
    sg = prefix.sg
    order = prefix.ordered()
    re_n = sg.re_value(order[N - 1])
    if N < len(order):
        return _re_less(re_n, sg.re_value(order[N]))
    if prefix.trunc_re == INF:
        return True
    return _re_less(re_n, prefix.trunc_re)


def _inequalities_hold(ld: LeadingData, partials, sg, lam_vec, op) -> bool:
    re_lam = sg.re_value(lam_vec)
    re_nu = real_part(ld.nu_value)
    if isinstance(op, Mahler):
        s = min(sg.re_value(p.lowest()[0]) for p in partials if p.lowest() is not None)
        return _re_less(re_nu, s + (op.ell - 1) * re_lam) and _re_less(re_nu, re_lam)
    return _re_less(re_nu, re_lam)


class _LatticeTooSmall(Exception):
    pass


class _OrderFailure(Exception):
    pass


def _build_reduced(eq, prefix, ld, N, notes) -> ReducedEquation:
    sg = prefix.sg
    op = eq.op
    n = eq.order
    order = prefix.ordered()
    lam_vec = order[N - 1]
    lam = sg.value(lam_vec)
    head = GSeries(sg, {m: prefix.coeff(m) for m in order[:N]})
    nv = n + 1
    one = GSeries.monomial(sg, sg.zero())
    zero_key = (0,) * nv

    Y = []
    for j in range(n + 1):
        terms = {zero_key: apply_operator(op, j, head)} if not head.is_zero() else {}
        for k in range(n + 1):
            coef = None
            if isinstance(op, Differential) and k <= j:
                coef = GSeries.monomial(sg, lam_vec, _binomial(j, k) * lam ** (j - k) if j > k else Fraction(1))
            elif isinstance(op, QDifference) and k == j:
                coef = GSeries.monomial(sg, lam_vec, op.symbol(j * lam) if j else Fraction(1))
            elif isinstance(op, Mahler) and k == j:
                coef = GSeries.monomial(sg, tuple(op.ell ** j * c for c in lam_vec))
            if coef is not None and not coef.is_zero():
                e = [0] * nv
                e[k] = 1
                terms[tuple(e)] = coef
        Y.append(MultiSeries(nv, terms))

    G = MultiSeries(nv)
    x_cache: dict = {}
    for e, c in eq.F.terms.items():
        if e[0] not in x_cache:
            x_cache[e[0]] = GSeries.x_power(sg, e[0], EXPRESS_BOUND) if e[0] else one
        term = MultiSeries(nv, {zero_key: x_cache[e[0]].scale(c)})
        for j in range(n + 1):
            if e[j + 1]:
                term = term * (Y[j] ** e[j + 1])
        G = G + term

    v0 = tuple(a + b for a, b in zip(lam_vec, ld.nu))
    A = ld.A
    if isinstance(op, Mahler):
        B = [A[0]] + [Fraction(0)] * n
    elif isinstance(op, Differential):
        B = [sum((A[j] * _binomial(j, k) * lam ** (j - k) for j in range(k, n + 1)), Fraction(0))
             for k in range(n + 1)]
    else:
        B = [A[k] * (op.symbol(k * lam) if k else Fraction(1)) for k in range(n + 1)]

    neg_v0 = tuple(-c for c in v0)
    rhs_terms = {}
    for p, coef in G.terms.items():
        if sum(p) == 1:
            k = p.index(1)
            if not is_zero(B[k]):
                coef = coef - GSeries.monomial(sg, v0, B[k])
        shifted = coef.shift(neg_v0)
        for m, c in shifted.terms.items():
            rm = sg.re_value(m)
            if _re_less(rm, 0) or not any(m):
                raise _OrderFailure((p, m))
            if any(x < 0 for x in m):
                raise _LatticeTooSmall((p, m))
        if shifted.is_zero():
            continue
        scale = -1 / A[0] if isinstance(op, Mahler) else Fraction(-1)
        if not is_exact(scale):
            scale = to_mpc(scale)
        rhs_terms[(0,) + p] = shifted.scale(scale)
    M = MultiSeries(n + 2, rhs_terms)
    return ReducedEquation(eq, sg, ld, N, lam_vec, lam, ld.nu, v0, head, M, notes)


def reduce_equation(eq: FunctionalEquation, prefix: GSeries, N: int | None = None) -> ReducedEquation:
    """Rewrite the equation for the tail u of y = Phi_N + x^lambda_N u.

    N grows by doubling (capped at the prefix length) until the leading-term
    inequalities hold and the prefix separates lambda_N from the next exponent.
    If the prefix lattice cannot host the right-hand side, the exponent support
    lattice is used instead.
    """
    if prefix.is_zero():
        raise ValidationError("the prefix has no terms")
    notes: list = []
    partials = partials_along(eq, prefix)
    ld = leading_data(partials, eq.op)
    last_error = None
    for attempt in range(2):
        for n_try in _candidate_Ns(prefix, N or 1):
            order = prefix.ordered()
            if not _separated(prefix, n_try):
                last_error = f"N = {n_try}: the prefix does not separate lambda_N from the next exponent"
                continue
            if not _inequalities_hold(ld, partials, prefix.sg, order[n_try - 1], eq.op):
                last_error = f"N = {n_try}: leading-order inequalities fail"
                continue
            try:
                return _build_reduced(eq, prefix, ld, n_try, notes)
            except _OrderFailure as exc:
                last_error = f"N = {n_try}: right-hand side term {exc.args[0]} is not of positive order"
            except _LatticeTooSmall:
                if attempt:
                    raise NotSatisfied("right-hand side exponents leave the exponent support") from None
                break
        else:
            raise PrefixTooShort(last_error or "no admissible N")
        sg2 = exponent_support(eq, prefix)
        prefix = _reexpress(prefix, sg2)
        partials = partials_along(eq, prefix)
        ld = leading_data(partials, eq.op)
        notes.append("switched to the exponent support lattice")
    raise PrefixTooShort(last_error or "no admissible N")


def _reexpress(s: GSeries, sg: Semigroup) -> GSeries:
    terms = {express(sg, s.sg.value(m), EXPRESS_BOUND): c for m, c in s.terms.items()}
    return GSeries(sg, terms, trunc_re=s.trunc_re)


# ----------------------------------------------------------------------------
# the lattice generated by the exponents of a solution


def exponent_support(eq: FunctionalEquation, prefix: GSeries, N: int | None = None,
                     resonance_bound: int = 8) -> Semigroup:
    """A certified lattice containing every exponent of the tail for this prefix."""
    sg = prefix.sg
    partials = partials_along(eq, prefix)
    ld = leading_data(partials, eq.op)
    order = prefix.ordered()
    chosen = None
    for n_try in _candidate_Ns(prefix, N or 1):
        if _separated(prefix, n_try) and _inequalities_hold(ld, partials, sg, order[n_try - 1], eq.op):
            chosen = n_try
            break
    if chosen is None:
        raise PrefixTooShort("no N satisfies the leading-order inequalities")
    lams = [sg.value(m) for m in order[:chosen]]
    lam_N = lams[-1]
    xdeg = sorted({Fraction(d) for d in eq.x_degrees() if d})
    base = _dedupe(lams + xdeg)
    constraint = HalfspaceConstraint(tuple(base), -(lam_N + ld.nu_value))
    offsets = []
    for m in sorted(dickson_minimal(constraint, len(base)), key=lambda v: (sum(v), v)):
        val = sum((k * g for k, g in zip(m, base) if k), Fraction(0)) - lam_N - ld.nu_value
        offsets.append(val)
    raw = _dedupe(offsets + lams + xdeg)
    support, _ = regularize(raw)
    if isinstance(eq.op, QDifference):
        extra = _resonance_generators(eq.op, ld, lam_N, support, resonance_bound)
        if extra:
            support, _ = regularize(_dedupe(list(support.generators) + extra))
    return support


def _dedupe(values: list) -> list:
    out = []
    for v in values:
        if not any(_same_value(v, w) for w in out):
            out.append(v)
    return out


def _same_value(a, b) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(to_mpc(a) - to_mpc(b)) < tolerance()


def _resonance_generators(op: QDifference, ld: LeadingData, lam_N, sg: Semigroup, bound: int) -> list:
    log_q = op.log_q
    step = 2j * mpmath.pi / log_q
    if mpmath.re(step) <= tolerance():
        return []
    roots = [r for r in poly_roots(ld.A) if abs(r) > tolerance()] if len(ld.A) > 1 else []
    if not roots:
        return []
    hit = False
    for m in lattice_points(sg.dim, bound):
        if _vanishes(poly_eval(ld.A, op.symbol(lam_N + sg.value(m)))):
            hit = True
            break
    if not hit:
        return []
    extra = [step]
    for a in roots:
        base = log_branch(a) / log_q - to_mpc(lam_N)
        k = math.floor(-mpmath.re(base) / mpmath.re(step)) + 1
        cand = base + k * step
        if mpmath.re(cand) <= tolerance():
            cand += step
        extra.append(cand)
    return extra


# ----------------------------------------------------------------------------
# coefficient recurrence on the reduced form


def extend_solution(red: ReducedEquation, depth: int, params=None):
    """Solve the reduced recurrence level by level in |m| up to ``depth``.

    Returns ``(phi, psi, transcript)``: ``psi`` holds the tail coefficients c_m
    and ``phi = Phi_N + x^lambda_N psi``.
    """
    if depth < 1:
        raise ValidationError("depth must be positive")
    sg = red.sg
    op = red.op
    params = {tuple(k): v for k, v in (params or {}).items()}
    transcript = SolveTranscript()
    coeffs: dict = {}
    for d in range(1, depth + 1):
        psi = GSeries(sg, coeffs, trunc_deg=d)
        args = [apply_operator(op, j, psi) for j in range(red.n + 1)]
        rhs = substitute(red.M, [None, *args], sg)
        for m in lattice_points(sg.dim, d, d):
            r = rhs.coeff(m)
            div = red.divisor(m)
            if _vanishes(div):
                if not _vanishes(r):
                    raise ResonanceBlocked(m, div, r)
                value = params.get(m, Fraction(0))
                transcript.resonant(m, div, r, value)
            else:
                value = _divide(r, div)
                transcript.solved(m, value, div)
            if not is_zero(value):
                coeffs[m] = value
    cut = min(sg.re_value(m) for m in lattice_points(sg.dim, depth + 1, depth + 1))
    below = [sg.re_value(m) for m in lattice_points(sg.dim, depth) if _re_less(sg.re_value(m), cut)]
    psi_re = max(below) if below else Fraction(0)
    psi = GSeries(sg, coeffs, trunc_re=psi_re, trunc_deg=depth)
    tail = psi.shift(red.lam_vector)
    phi_re = sg.re_value(red.lam_vector) + psi_re
    phi = GSeries(sg, {**red.prefix.terms, **{m: c for m, c in tail.terms.items()}}, trunc_re=phi_re)
    return phi, psi, transcript


# ----------------------------------------------------------------------------
# one-variable conjugators


def _taylor_coeffs(f, depth: int) -> dict:
    """{k: f_k} for k >= 0 from a coefficient list, dict, one-variable MultiSeries or GSeries over <1>."""
    if isinstance(f, MultiSeries):
        if f.nvars != 1:
            raise ValidationError("expected a one-variable series")
        return {e[0]: c for e, c in f.terms.items() if e[0] <= depth}
    if isinstance(f, GSeries):
        if f.sg.generators != TAYLOR.generators:
            raise ValidationError("expected a Taylor series")
        return {m[0]: c for m, c in f.terms.items() if m[0] <= depth}
    if isinstance(f, dict):
        return {int(k): exact(v) for k, v in f.items() if int(k) <= depth and not is_zero(v)}
    return {k: exact(v) for k, v in enumerate(f) if k <= depth and not is_zero(v)}


def _taylor(coeffs: dict, depth) -> GSeries:
    return GSeries(TAYLOR, {(k,): v for k, v in coeffs.items()}, trunc_re=depth, trunc_deg=depth)


def compose(f: dict, y: GSeries) -> GSeries:
    """f(y(x)) for y without constant term, truncated with y."""
    if not f:
        return GSeries(TAYLOR, None, y.trunc_re, y.trunc_deg)
    one = GSeries(TAYLOR, {(0,): Fraction(1)}, y.trunc_re, y.trunc_deg)
    top = max(f)
    acc = one.scale(f[top])
    for k in range(top - 1, -1, -1):
        acc = acc * y
        if k in f:
            acc = acc + one.scale(f[k])
    return acc


def reversion(h: GSeries, depth: int) -> GSeries:
    """Compositional inverse of h = c x + ..., c != 0."""
    hc = _taylor_coeffs(h, depth)
    c = hc.get(1, Fraction(0))
    if is_zero(c):
        raise ValidationError("a series without linear term has no compositional inverse")
    coeffs = {1: _divide(1, c)}
    for k in range(2, depth + 1):
        y = _taylor(coeffs, k)
        e = compose(hc, y).coeff((k,))
        value = -_divide(e, c)
        if not is_zero(value):
            coeffs[k] = value
    return _taylor(coeffs, depth)


def _iterate(f: dict, r: int, depth: int) -> GSeries:
    x = _taylor({1: Fraction(1)}, depth)
    out = x
    for _ in range(r):
        out = compose(f, out)
    return out


def _unit_order(q, limit: int):
    for r in range(1, limit + 1):
        p = q ** r if is_exact(q) else to_mpc(q) ** r
        if is_zero(p - 1):
            return r
    return None


def solve_schroeder(f, depth: int):
    """Conjugator y with y'(0) = 1 and y(qx) = f(y(x)), where q = f'(0)."""
    if depth < 1:
        raise ValidationError("depth must be positive")
    fc = _taylor_coeffs(f, depth)
    if not is_zero(fc.get(0, 0)):
        raise ValidationError("f must fix the origin")
    q = fc.get(1, Fraction(0))
    if is_zero(q):
        raise ValidationError("f'(0) vanishes; use the Boettcher conjugator")
    transcript = SolveTranscript()
    r = _unit_order(q, depth)
    if r is not None:
        return _linearize_periodic(fc, q, r, depth, transcript)
    coeffs = {1: Fraction(1)}
    for k in range(2, depth + 1):
        y = _taylor(coeffs, k)
        qk = q ** k if is_exact(q) else to_mpc(q) ** k
        lhs = GSeries(TAYLOR, {(j,): c * (q ** j if is_exact(q) else to_mpc(q) ** j)
                               for (j,), c in y.terms.items()}, k, k)
        e = (compose(fc, y) - lhs).coeff((k,))
        gap = qk / q - 1
        if is_small(gap):
            raise SmallDivisorBreakdown(k - 1, _magnitude(gap))
        d = qk - q
        value = _divide(e, d)
        transcript.solved((k,), value, d)
        if not is_zero(value):
            coeffs[k] = value
    return _taylor(coeffs, depth), transcript


def _linearize_periodic(fc: dict, q, r: int, depth: int, transcript: SolveTranscript):
    x = _taylor({1: Fraction(1)}, depth)
    it = _iterate(fc, r, depth)
    if any(not is_zero(c) for c in (it - x).terms.values()):
        raise NonLinearizable(f"f'(0) is a root of unity of order {r} but the {r}-th iterate of f "
                              "is not the identity")
    total = GSeries(TAYLOR, None, depth, depth)
    cur = x
    for k in range(r):
        w = q ** (-k) if is_exact(q) else to_mpc(q) ** (-k)
        total = total + cur.scale(w)
        cur = compose(fc, cur)
    h = total.scale(Fraction(1, r))
    transcript.notes.append(f"periodic case: averaged the first {r} iterates")
    return reversion(h, depth), transcript


def _principal_root(a, k: int):
    """Principal value of a**(1/k), exact when possible."""
    if is_exact(a) and k == 1:
        return Fraction(a)
    if is_exact(a) and a > 0:
        a = Fraction(a)
        num = round(a.numerator ** (1 / k))
        den = round(a.denominator ** (1 / k))
        for n_ in (num - 1, num, num + 1):
            for d_ in (den - 1, den, den + 1):
                if n_ > 0 and d_ > 0 and Fraction(n_, d_) ** k == a:
                    return Fraction(n_, d_)
    return mpmath.exp(mpmath.log(to_mpc(a)) / k)


def solve_boettcher(g, ell: int, depth: int):
    """Conjugator y with y(x**ell) = g(y(x)) for g = a x**ell + ..."""
    if ell < 2:
        raise ValidationError("ell must be at least 2")
    if depth < 1:
        raise ValidationError("depth must be positive")
    gc = _taylor_coeffs(g, depth + ell)
    if any(not is_zero(gc.get(k, 0)) for k in range(ell)):
        raise ValidationError(f"g must vanish to order {ell} at the origin")
    a = gc.get(ell, Fraction(0))
    if is_zero(a):
        raise ValidationError("the leading coefficient of g vanishes")
    c = _principal_root(_divide(1, a), ell - 1)
    transcript = SolveTranscript()
    transcript.solved((1,), c, Fraction(1))
    coeffs = {1: c}
    for j in range(2, depth + 1):
        top = j + ell - 1
        y = _taylor(coeffs, top)
        lhs = GSeries(TAYLOR, {(ell * i,): v for (i,), v in y.terms.items()}, top, top)
        e = (lhs - compose(gc, y)).coeff((top,))
        value = _divide(e, ell)
        transcript.solved((j,), value, Fraction(ell))
        if not is_zero(value):
            coeffs[j] = value
    return _taylor(coeffs, depth), transcript


# ----------------------------------------------------------------------------
# equations with a composition operator


@dataclass
class TransformedEquation:
    """F(xi(t), y~(t), y~(D t), ...) = 0 with y = y~ composed with the inverse of xi."""

    eq: FunctionalEquation
    conjugator: GSeries
    inverse: GSeries
    depth: int

    def transport(self, solution: GSeries) -> GSeries:
        """Solution of the original equation from a Taylor solution of the transformed one."""
        return compose(_taylor_coeffs(solution, self.depth), self.inverse)


def transform_general_equation(F: MultiSeries, f, depth: int) -> TransformedEquation:
    """Replace y(f^[j](x)) by a dilation or a Mahler substitution.

    ``F`` is a polynomial in (x, y_0, ..., y_n) where y_j stands for y(f^[j](x)).
    """
    fc = _taylor_coeffs(f, depth + 1)
    slope = fc.get(1, Fraction(0))
    try:
        if not is_zero(slope):
            if not is_exact(slope) and abs(abs(to_mpc(slope)) - 1) < tolerance() and \
                    _unit_order(slope, depth) is None:
                from .analyzer import siegel_check
                report = siegel_check(slope, bound=max(1000, depth))
                if not report.passed:
                    raise ConjugatorUnavailable("the multiplier fails the Siegel scan")
            xi, _ = solve_schroeder(fc, depth)
            op = QDifference(slope)
        else:
            ell = min(k for k in fc if not is_zero(fc[k]))
            xi, _ = solve_boettcher(fc, ell, depth)
            op = Mahler(ell)
    except (NonLinearizable, SmallDivisorBreakdown, ValidationError) as exc:
        raise ConjugatorUnavailable(str(exc)) from exc
    xi_c = _taylor_coeffs(xi, depth)
    nv = F.nvars
    powers: dict = {}
    terms: dict = {}
    for e, c in F.terms.items():
        k = e[0]
        if k not in powers:
            powers[k] = (xi ** k) if k else GSeries(TAYLOR, {(0,): Fraction(1)}, depth, depth)
        for (d,), v in powers[k].terms.items():
            key = (d,) + tuple(e[1:])
            terms[key] = terms.get(key, Fraction(0)) + c * v
    G = MultiSeries(nv, {k: v for k, v in terms.items() if not is_zero(v)})
    inverse = reversion(_taylor(xi_c, depth), depth)
    return TransformedEquation(FunctionalEquation(G, op), xi, inverse, depth)
