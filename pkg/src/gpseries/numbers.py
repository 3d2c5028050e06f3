"""Scalar helpers.

Scalars are either ``Fraction`` (exact rationals, used whenever every input of a
computation is rational) or ``mpmath.mpc`` at the current working precision.
Python's operators mix the two freely, so most code is written generically and
only comparisons with zero and conversions need care.
"""

from __future__ import annotations

import contextlib
from fractions import Fraction
from numbers import Integral

import mpmath
from mpmath import mp

DEFAULT_PRECISION = 192

mp.prec = DEFAULT_PRECISION


@contextlib.contextmanager
def working_precision(bits: int):
    """Temporarily set the binary working precision."""
    if bits < 64:
        raise ValueError("precision must be at least 64 bits")
    old = mp.prec
    mp.prec = bits
    try:
        yield
    finally:
        mp.prec = old


def precision() -> int:
    return mp.prec


def zero_threshold():
    """Magnitude below which an inexact coefficient counts as zero."""
    return mpmath.ldexp(1, -mp.prec + 32)


def tolerance():
    """Tolerance for floating equality tests (relations, resonances)."""
    return mpmath.ldexp(1, -(mp.prec // 2))


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, Integral))


def exact(x):
    """Coerce ints to Fraction; leave everything else alone."""
    if isinstance(x, Integral) and not isinstance(x, bool):
        return Fraction(int(x))
    return x


def to_mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def to_mpc(x):
    if isinstance(x, Fraction):
        return mpmath.mpc(to_mpf(x))
    if isinstance(x, Integral):
        return mpmath.mpc(int(x))
    return mpmath.mpc(x)


def real_part(x):
    if isinstance(x, (Fraction, Integral)):
        return Fraction(x)
    return mpmath.re(x)


def imag_part(x):
    if isinstance(x, (Fraction, Integral)):
        return Fraction(0)
    return mpmath.im(x)


def magnitude(x):
    """|x| as a Fraction for exact input, mpf otherwise."""
    if isinstance(x, (Fraction, Integral)):
        return abs(Fraction(x))
    return abs(x)


def is_zero(x) -> bool:
    if isinstance(x, (Fraction, Integral)):
        return x == 0
    return abs(x) < zero_threshold()


def is_small(x) -> bool:
    """True when |x| is below the floating tolerance 2^(-p/2)."""
    if isinstance(x, (Fraction, Integral)):
        return x == 0
    return abs(x) < tolerance()


def log_branch(q):
    """Logarithm with argument in [0, 2*pi)."""
    z = to_mpc(q)
    if z == 0:
        raise ValueError("logarithm of zero")
    lg = mpmath.log(z)
    if mpmath.im(lg) < 0:
        lg += 2j * mpmath.pi
    return lg


def power(base, exponent, log_base=None):
    """base**exponent on the branch 0 <= arg(base) < 2*pi.

    Stays exact for a rational base raised to an integer.
    """
    if is_exact(base) and is_exact(exponent) and Fraction(exponent).denominator == 1:
        e = int(exponent)
        b = Fraction(base)
        if b == 0 and e < 0:
            raise ZeroDivisionError("zero to a negative power")
        return b ** e
    if log_base is None:
        if is_exact(base) and base == 0:
            return Fraction(0)
        log_base = log_branch(base)
    return mpmath.exp(to_mpc(exponent) * log_base)


def decimal_string(x) -> str:
    """Serialize a real scalar: exact rationals as 'p/q', floats at full precision."""
    if isinstance(x, (Fraction, Integral)):
        return str(Fraction(x))
    digits = int(mp.prec * 0.30103) + 3
    return mpmath.nstr(mpmath.mpf(x), digits, strip_zeros=True, min_fixed=-mpmath.inf,
                       max_fixed=mpmath.inf) if x != 0 else "0"


def parse_real(text: str):
    text = text.strip()
    if "/" in text or _is_plain_integer(text):
        return Fraction(text)
    return mpmath.mpf(text)


def _is_plain_integer(text: str) -> bool:
    body = text[1:] if text[:1] in "+-" else text
    return body.isdigit()


def to_json(x) -> dict:
    return {"re": decimal_string(real_part(x)), "im": decimal_string(imag_part(x))}


def from_json(obj: dict):
    re_ = parse_real(obj["re"])
    im_ = parse_real(obj.get("im", "0"))
    if is_exact(re_) and is_exact(im_) and im_ == 0:
        return Fraction(re_)
    return mpmath.mpc(to_mpf(re_) if is_exact(re_) else re_, to_mpf(im_) if is_exact(im_) else im_)


def approx_equal(a, b, tol=None) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    if tol is None:
        tol = tolerance()
    return abs(to_mpc(a) - to_mpc(b)) <= tol * max(1, abs(to_mpc(a)), abs(to_mpc(b)))


def as_scalar(x):
    """Normalize a user-supplied scalar (int, float, complex, str, mpmath) to Fraction or mpc."""
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, (Fraction, Integral)):
        return Fraction(x)
    if isinstance(x, float):
        return mpmath.mpc(x)
    if isinstance(x, complex):
        return mpmath.mpc(x.real, x.imag)
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return mpmath.mpc(x)
    if isinstance(x, str):
        return mpmath.mpc(mpmath.mpmathify(x))
    raise TypeError(f"cannot interpret {x!r} as a scalar")
