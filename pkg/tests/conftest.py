from fractions import Fraction

import mpmath
import pytest

from gpseries.cli import corpus_dir
from gpseries.dsl import parse_document
from gpseries.lattice import certify
from gpseries.numbers import DEFAULT_PRECISION
from gpseries.series import GSeries, MultiSeries


@pytest.fixture(autouse=True)
def _precision():
    mpmath.mp.prec = DEFAULT_PRECISION
    yield
    mpmath.mp.prec = DEFAULT_PRECISION


def load(name, **params):
    return parse_document((corpus_dir() / f"{name}.eq").read_text(), params)


def poly(nvars, terms):
    return MultiSeries(nvars, {e: Fraction(c) if isinstance(c, int) else c for e, c in terms.items()})


def gaussian_lattice():
    return certify([mpmath.mpc(1, 1), mpmath.mpc(1, -1)])


def prefix(sg, terms, trunc_re=Fraction(3, 2)):
    return GSeries(sg, terms, trunc_re=trunc_re)
