"""Shared fixtures and oracles (sympy conversion, hand-built compositions)."""

from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from henon_fixpoints.coefficients import GaussianRational
from henon_fixpoints.henon import HenonComposition, HenonFactor, random_composition


def sym_vars(n):
    return sp.symbols(" ".join(f"y{i}" for i in range(1, n + 1)), seq=True)


def to_sympy(poly, gens=None):
    """Exact sympy expression of a polynomial with Gaussian-rational coefficients."""
    gens = gens or sym_vars(poly.nvars)
    expr = sp.Integer(0)
    for exp, c in poly.terms.items():
        coeff = sp.Rational(c.re.numerator, c.re.denominator) + sp.I * sp.Rational(
            c.im.numerator, c.im.denominator
        )
        mono = sp.Integer(1)
        for g, k in zip(gens, exp):
            mono *= g**k
        expr += coeff * mono
    return sp.expand(expr)


def from_sympy_coeff(c) -> GaussianRational:
    re, im = sp.re(c), sp.im(c)
    return GaussianRational(Fraction(int(re.p), int(re.q)), Fraction(int(im.p), int(im.q)))


def rational_root_composition(r, deltas) -> HenonComposition:
    """``p_j = y^2 + c_j`` with ``c_j = r + delta_j r - r^2``: ``y_j = r`` for all j is a fixed point."""
    r = GaussianRational.coerce(r) if not isinstance(r, GaussianRational) else r
    factors = []
    for delta in deltas:
        delta = GaussianRational.coerce(delta) if not isinstance(delta, GaussianRational) else delta
        c0 = r + delta * r - r * r
        factors.append(HenonFactor(2, (c0, GaussianRational(0)), delta))
    return HenonComposition(tuple(factors))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def henon_half():
    """Single quadratic factor ``p(y) = y^2``, ``delta = 1/2``."""
    return HenonComposition((HenonFactor.exact(2, [0, 0], Fraction(1, 2)),))


@pytest.fixture
def cubic_triple():
    """Reproducible exact composition with n = 3, d_j = 2 and |delta| < 1."""
    return random_composition(np.random.default_rng(7), 3, (2,), delta_bound=0.9)


# --------------------------------------------------------------------------- acceptance summary

ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    """Store one pass/fail line and echo it (visible with ``-s``)."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}" + (f" -- {detail}" if detail else "")
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
