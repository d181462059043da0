"""Generalized Hénon factors ``(x, y) -> (y, p(y) - delta*x)`` and their compositions.

Besides point evaluation this module builds the algebraic objects attached to
the fixed points of a composition ``f = f_n o ... o f_1``: the cyclic system
``phi_i = p_i(y_i) - y_{i+1} - delta_i*y_{i-1}`` (indices mod n), the differential
as a 2x2 polynomial matrix, the multiplier polynomial ``det(M - lambda*I)`` and the
auxiliary ``eta`` polynomials.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .coefficients import GaussianRational, is_exact, parse_exact, to_json_exact
from .poly import Polynomial, PolyRing, leading


class CompositionError(ValueError):
    """Invalid factor or composition data."""


class NormalFormWarning(UserWarning):
    """``p_j`` has a nonzero ``y^(d_j - 1)`` term (not in the reduced normal form)."""


@dataclass(frozen=True)
class HenonFactor:
    """One factor ``f(x, y) = (y, p(y) - delta*x)`` with monic ``p`` of degree >= 2.

    ``coefficients`` holds ``c_0 .. c_{d-1}``; the leading 1 is implicit.
    """

    degree: int
    coefficients: tuple
    delta: object

    def __post_init__(self):
        if not isinstance(self.degree, (int, np.integer)) or self.degree < 2:
            raise CompositionError(f"degree must be an integer >= 2, got {self.degree!r}")
        object.__setattr__(self, "degree", int(self.degree))
        coeffs = tuple(self.coefficients)
        if len(coeffs) != self.degree:
            raise CompositionError(
                f"expected {self.degree} non-leading coefficients, got {len(coeffs)}"
            )
        object.__setattr__(self, "coefficients", coeffs)
        if not self.delta:
            raise CompositionError("delta must be nonzero")
        values = coeffs + (self.delta,)
        if any(is_exact(v) for v in values) and not all(is_exact(v) for v in values):
            raise CompositionError("exact and float data cannot be mixed in one factor")

    @classmethod
    def exact(cls, degree: int, coefficients: Sequence = None, delta=1) -> "HenonFactor":
        coefficients = [0] * degree if coefficients is None else coefficients
        return cls(degree, tuple(parse_exact(c) for c in coefficients), parse_exact(delta))

    @property
    def is_exact(self) -> bool:
        return is_exact(self.delta)

    @property
    def in_normal_form(self) -> bool:
        """True when ``deg(p - y^d) <= d - 2``."""
        return not self.coefficients[-1]

    def to_float(self) -> "HenonFactor":
        return HenonFactor(self.degree, tuple(complex(c) for c in self.coefficients), complex(self.delta))

    def p(self, y):
        exact = isinstance(y, GaussianRational)
        acc = 1
        for c in reversed(self.coefficients):
            acc = acc * y + (c if exact else complex(c))
        return acc

    def p_prime(self, y):
        exact = isinstance(y, GaussianRational)
        acc = self.degree
        for k in range(self.degree - 1, 0, -1):
            c = self.coefficients[k]
            acc = acc * y + k * (c if exact else complex(c))
        return acc

    def p_polynomial(self, ring: PolyRing, i: int) -> Polynomial:
        """``p(y_i)`` as a polynomial in ``ring``."""
        return ring.univariate(i, list(self.coefficients) + [1])

    def q_polynomial(self, ring: PolyRing, i: int) -> Polynomial:
        """``q(y_i) = p(y_i) - y_i^d``."""
        return ring.univariate(i, list(self.coefficients))

    def coefficient_l1(self) -> float:
        return float(sum(abs(complex(c)) for c in self.coefficients))


def evaluate_factor(factor: HenonFactor, point):
    x, y = point
    return (y, factor.p(y) - complex(factor.delta) * x)


def evaluate_inverse_factor(factor: HenonFactor, point):
    x, y = point
    return ((factor.p(x) - y) / complex(factor.delta), x)


@dataclass(frozen=True)
class HenonComposition:
    """``f = f_n o ... o f_1`` for ``factors = (f_1, ..., f_n)``."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise CompositionError("a composition needs at least one factor")
        if any(not isinstance(f, HenonFactor) for f in factors):
            raise CompositionError("factors must be HenonFactor instances")
        modes = {f.is_exact for f in factors}
        if len(modes) > 1:
            raise CompositionError("exact and float factors cannot be mixed")
        object.__setattr__(self, "factors", factors)

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def degrees(self) -> tuple:
        return tuple(f.degree for f in self.factors)

    @property
    def degree(self) -> int:
        return int(np.prod(self.degrees))

    @property
    def jacobian(self):
        """``delta = delta_1 * ... * delta_n`` (exact when the factors are)."""
        acc = GaussianRational(1) if self.is_exact else 1 + 0j
        for f in self.factors:
            acc = acc * f.delta
        return acc

    @property
    def is_exact(self) -> bool:
        return self.factors[0].is_exact

    @property
    def in_normal_form(self) -> bool:
        return all(f.in_normal_form for f in self.factors)

    def to_float(self) -> "HenonComposition":
        return HenonComposition(tuple(f.to_float() for f in self.factors))

    def __call__(self, point):
        for f in self.factors:
            point = evaluate_factor(f, point)
        return point

    def inverse(self, point):
        for f in reversed(self.factors):
            point = evaluate_inverse_factor(f, point)
        return point

    def cubed(self) -> "HenonComposition":
        return HenonComposition(self.factors * 3)

    def ring(self, exact: bool | None = None) -> PolyRing:
        return PolyRing(self.n, self.is_exact if exact is None else exact)


def rotate(comp: HenonComposition, k: int) -> HenonComposition:
    """Cyclic shift ``[f_{k+1}, ..., f_n, f_1, ..., f_k]``; conjugate to ``comp``."""
    if not 0 <= k < comp.n:
        raise ValueError(f"rotation index must lie in [0, {comp.n})")
    return HenonComposition(comp.factors[k:] + comp.factors[:k])


def validate_composition(comp: HenonComposition) -> list:
    """Return human-readable warnings; emits :class:`NormalFormWarning` for each."""
    messages = []
    for j, f in enumerate(comp.factors, start=1):
        if not f.in_normal_form:
            msg = (
                f"factor {j}: p_{j} has a nonzero degree-{f.degree - 1} term; "
                "non-membership results assume the reduced normal form"
            )
            warnings.warn(msg, NormalFormWarning, stacklevel=2)
            messages.append(msg)
    return messages


# --------------------------------------------------------------------------- algebra


def _nbr(i: int, n: int) -> tuple:
    """(successor, predecessor) of 1-based cyclic index ``i``."""
    return (i % n) + 1, ((i - 2) % n) + 1


def fixed_point_system(comp: HenonComposition, ring: PolyRing | None = None) -> list:
    """``[phi_1, ..., phi_n]`` with ``phi_i = p_i(y_i) - y_{i+1} - delta_i*y_{i-1}``.

    For n = 1 and n = 2 the neighbours coincide and their coefficients add up.
    """
    ring = ring or comp.ring()
    n = comp.n
    system = []
    for i, f in enumerate(comp.factors, start=1):
        succ, pred = _nbr(i, n)
        phi = f.p_polynomial(ring, i) - ring.var(succ) - ring.var(pred).scale(f.delta)
        system.append(phi)
    return system


def cycle_to_point(y_cycle: Sequence) -> tuple:
    """The fixed point ``(x, y) = (y_n, y_1)`` encoded by a cyclic sequence."""
    return (complex(y_cycle[-1]), complex(y_cycle[0]))


def differential_numeric(comp: HenonComposition, y_cycle: Sequence) -> np.ndarray:
    """``Df`` at ``(y_n, y_1)``: product of ``[[0, 1], [-delta_j, p_j'(y_j)]]``, ``j = n .. 1``."""
    if len(y_cycle) != comp.n:
        raise ValueError(f"expected {comp.n} cyclic coordinates, got {len(y_cycle)}")
    m = np.eye(2, dtype=complex)
    for f, y in zip(comp.factors, y_cycle):
        step = np.array([[0, 1], [-complex(f.delta), f.p_prime(complex(y))]], dtype=complex)
        m = step @ m
    return m


@dataclass(frozen=True)
class Matrix2Poly:
    m11: Polynomial
    m12: Polynomial
    m21: Polynomial
    m22: Polynomial

    def __matmul__(self, other: "Matrix2Poly") -> "Matrix2Poly":
        return Matrix2Poly(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def trace(self) -> Polynomial:
        return self.m11 + self.m22

    def det(self) -> Polynomial:
        return self.m11 * self.m22 - self.m12 * self.m21

    def entries(self) -> dict:
        return {"m11": self.m11, "m12": self.m12, "m21": self.m21, "m22": self.m22}

    def evaluate(self, point) -> np.ndarray:
        return np.array(
            [[self.m11(point), self.m12(point)], [self.m21(point), self.m22(point)]], dtype=complex
        )


def _chain(comp: HenonComposition, ring: PolyRing, derivative_of) -> Matrix2Poly:
    zero, one = ring.zero(), ring.one()
    m = Matrix2Poly(one, zero, zero, one)
    for j, f in enumerate(comp.factors, start=1):
        step = Matrix2Poly(zero, one, ring.const(-f.delta), derivative_of(j, f))
        m = step @ m
    return m


def differential_symbolic(comp: HenonComposition, ring: PolyRing | None = None) -> Matrix2Poly:
    """``M_n`` with entries in ``y_1..y_n``; ``det`` is identically ``delta``."""
    ring = ring or comp.ring()
    return _chain(comp, ring, lambda j, f: f.p_polynomial(ring, j).derivative(j))


def differential_abstract(comp: HenonComposition) -> Matrix2Poly:
    """``M_n`` over opaque symbols ``P_j`` standing for ``p_j'(y_j)`` (variable j of the ring)."""
    ring = comp.ring()
    return _chain(comp, ring, lambda j, f: ring.var(j))


def multiplier_polynomial(comp: HenonComposition, lam, ring: PolyRing | None = None) -> Polynomial:
    """``lambda^2 - lambda*Tr(M_n) + delta``; vanishes where ``lambda`` is a multiplier."""
    ring = ring or comp.ring()
    lam = ring.coerce(lam)
    m = differential_symbolic(comp, ring)
    return ring.const(lam * lam) - m.trace().scale(lam) + ring.const(comp.jacobian)


def expected_multiplier_leading(comp: HenonComposition, lam):
    """Leading monomial and coefficient the multiplier polynomial must have (``lambda != 0``)."""
    exp = tuple(d - 1 for d in comp.degrees)
    coeff = -lam * comp.degree
    return exp, coeff


def eta_polynomial(comp: HenonComposition, j: int, alpha, ring: PolyRing | None = None) -> Polynomial:
    """``y_j q_j'(y_j) - alpha p_j'(y_j) - d_j q_j(y_j)``, a polynomial in ``y_j`` alone."""
    ring = ring or comp.ring()
    f = comp.factors[j - 1]
    alpha = ring.coerce(alpha)
    q = f.q_polynomial(ring, j)
    p_prime = f.p_polynomial(ring, j).derivative(j)
    return ring.var(j) * q.derivative(j) - p_prime.scale(alpha) - q.scale(f.degree)


def default_lambda(comp: HenonComposition):
    """The multiplier ``d = d_1 ... d_n`` used whenever none is given."""
    return GaussianRational(comp.degree) if comp.is_exact else complex(comp.degree)


# --------------------------------------------------------------------------- span structure


@dataclass(frozen=True)
class SpanViolation:
    entry: str
    subset: tuple
    reason: str


@dataclass(frozen=True)
class SpanProfileReport:
    n: int
    ok: bool
    violations: tuple
    profiles: dict

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "ok": self.ok,
            "violations": [
                {"entry": v.entry, "subset": list(v.subset), "reason": v.reason} for v in self.violations
            ],
            "profiles": {k: [list(s) for s in v] for k, v in self.profiles.items()},
        }


def span_profile(poly: Polynomial) -> list:
    """Support sets ``L`` (1-based, sorted) of a polynomial in the abstract ``P`` symbols."""
    return sorted(
        (tuple(i + 1 for i, k in enumerate(e) if k) for e in poly.terms),
        key=lambda s: (len(s), s),
    )


def _check_span(name: str, poly: Polynomial, top: int, allow_constants: bool) -> list:
    problems = []
    for exp in poly.terms:
        subset = tuple(i + 1 for i, k in enumerate(exp) if k)
        size = len(subset)
        if any(k > 1 for k in exp):
            problems.append(SpanViolation(name, subset, "not squarefree in P symbols"))
        elif size == 0 and allow_constants:
            continue
        elif size > top or (top - size) % 2:
            reason = f"|L|={size} not allowed (need |L| <= {top} and |L| = {top} mod 2)"
            problems.append(SpanViolation(name, subset, reason))
    return problems


def span_profile_check(comp: HenonComposition, lam=None) -> SpanProfileReport:
    """Check the parity/size structure of ``M_n`` and the multiplier polynomial.

    Works over opaque symbols ``P_j = p_j'(y_j)`` with numeric deltas. Entries
    ``m11`` and ``m22 - P_1...P_n`` must be spanned by squarefree products with
    ``|L| <= n-2``, ``|L| = n mod 2``; ``m12``, ``m21`` by ``|L| <= n-1``,
    ``|L| = n-1 mod 2``. The multiplier polynomial plus ``lambda*P_1...P_n`` gets
    the ``n-2`` check with constants admitted.
    """
    n = comp.n
    ring = comp.ring()
    lam = default_lambda(comp) if lam is None else ring.coerce(lam)
    m = differential_abstract(comp)
    top_product = ring.monomial((1,) * n)
    m22_rest = m.m22 - top_product
    mult = ring.const(lam * lam) - m.trace().scale(lam) + ring.const(comp.jacobian)
    mult_rest = mult + top_product.scale(lam)
    checks = {
        "m11": (m.m11, n - 2, False),
        "m22-P": (m22_rest, n - 2, False),
        "m12": (m.m12, n - 1, False),
        "m21": (m.m21, n - 1, False),
        "Phi+lambda*P": (mult_rest, n - 2, True),
    }
    violations = []
    profiles = {}
    for name, (poly, top, consts) in checks.items():
        violations.extend(_check_span(name, poly, top, consts))
        profiles[name] = span_profile(poly)
    det_ok = (m.det() - ring.const(comp.jacobian)).is_zero()
    if not det_ok:
        violations.append(SpanViolation("det", (), "determinant is not the constant delta"))
    return SpanProfileReport(n, not violations, tuple(violations), profiles)


def p_product(comp: HenonComposition, subset: Sequence[int], ring: PolyRing | None = None) -> Polynomial:
    """``(p')^L = prod_{l in L} p_l'(y_l)``; the empty product is 1."""
    ring = ring or comp.ring()
    out = ring.one()
    for l in subset:
        out = out * comp.factors[l - 1].p_polynomial(ring, l).derivative(l)
    return out


def admissible_subsets(J: Sequence[int]) -> list:
    """Subsets ``L`` of ``J`` with ``|L| = |J| - 2k``, ``k >= 1``."""
    J = sorted(J)
    out = []
    for size in range(len(J) - 2, -1, -2):
        out.extend(combinations(J, size))
    return out


# --------------------------------------------------------------------------- I/O


def composition_from_dict(data) -> HenonComposition:
    """Build a composition from parsed JSON: a factor list or ``{"factors": [...]}``."""
    if isinstance(data, dict):
        if "factors" not in data:
            raise CompositionError("composition object needs a 'factors' list")
        data = data["factors"]
    if not isinstance(data, list) or not data:
        raise CompositionError("composition must be a non-empty list of factors")
    factors = []
    for j, item in enumerate(data, start=1):
        if not isinstance(item, dict):
            raise CompositionError(f"factor {j} must be an object")
        try:
            degree = item["degree"]
            coeffs = item.get("coefficients", [0] * int(degree))
            delta = item["delta"]
        except KeyError as exc:
            raise CompositionError(f"factor {j} is missing {exc.args[0]!r}") from None
        if isinstance(degree, bool) or not isinstance(degree, int):
            raise CompositionError(f"factor {j}: degree must be an integer")
        try:
            parsed = tuple(parse_exact(c) for c in coeffs)
            delta = parse_exact(delta)
        except ValueError as exc:
            raise CompositionError(f"factor {j}: {exc}") from None
        try:
            factors.append(HenonFactor(degree, parsed, delta))
        except CompositionError as exc:
            raise CompositionError(f"factor {j}: {exc}") from None
    return HenonComposition(tuple(factors))


def composition_to_dict(comp: HenonComposition) -> dict:
    if not comp.is_exact:
        raise CompositionError("only exact compositions serialize losslessly")
    return {
        "factors": [
            {
                "degree": f.degree,
                "coefficients": [to_json_exact(c) for c in f.coefficients],
                "delta": to_json_exact(f.delta),
            }
            for f in comp.factors
        ]
    }


def load_composition(path) -> HenonComposition:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return composition_from_dict(json.loads(text))


# --------------------------------------------------------------------------- sampling


def random_gaussian_rational(rng: np.random.Generator, bound: float = 1.0, denominator: int = 8,
                             real: bool = False) -> GaussianRational:
    """Uniform-ish Gaussian rational with ``|re|, |im| <= bound`` on a ``1/denominator`` grid."""
    top = int(bound * denominator)
    re = Fraction(int(rng.integers(-top, top + 1)), denominator)
    im = Fraction(0) if real else Fraction(int(rng.integers(-top, top + 1)), denominator)
    return GaussianRational(re, im)


def random_composition(
    rng: np.random.Generator,
    n: int,
    degrees: Sequence[int] = (2, 3),
    delta_bound: float | None = None,
    coefficient_bound: float = 1.0,
    normal_form: bool = True,
    denominator: int = 8,
) -> HenonComposition:
    """Random exact composition with Gaussian-rational data.

    Each ``d_j`` is drawn from ``degrees``. With ``delta_bound`` every
    ``|delta_j| < delta_bound`` (so ``|delta| < delta_bound**n``). With
    ``normal_form`` the ``y^(d-1)`` coefficient is zero.
    """
    factors = []
    for _ in range(n):
        d = int(rng.choice(list(degrees)))
        coeffs = [random_gaussian_rational(rng, coefficient_bound, denominator) for _ in range(d)]
        if normal_form:
            coeffs[-1] = GaussianRational(0)
        while True:
            if delta_bound is None:
                delta = random_gaussian_rational(rng, 1.5, denominator)
                if delta:
                    break
            else:
                delta = random_gaussian_rational(rng, delta_bound, denominator)
                if delta and float(delta.norm2()) < delta_bound**2:
                    break
        factors.append(HenonFactor(d, tuple(coeffs), delta))
    return HenonComposition(tuple(factors))
