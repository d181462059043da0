"""Sparse multivariate polynomials with graded-lex ordering and multivariate division.

Polynomials live in a :class:`PolyRing` that fixes the number of variables
``y1..yn`` and the coefficient mode. In exact mode coefficients are
:class:`~henon_fixpoints.coefficients.GaussianRational`; in float mode they are
Python ``complex`` and any coefficient with modulus below ``FLOAT_ZERO`` is
dropped after every arithmetic step (so float results certify nothing).
"""

from __future__ import annotations

import heapq
import threading
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .coefficients import GaussianRational, format_exact, format_float

Exponent = tuple

FLOAT_ZERO = 1e-10


class PolynomialError(Exception):
    pass


class RingMismatchError(PolynomialError, ValueError):
    pass


class ZeroPolynomialError(PolynomialError, ValueError):
    pass


class MixedModeError(PolynomialError, TypeError):
    pass


class Cancelled(Exception):
    """Raised when a cooperative cancellation token fires mid-computation."""


class CancelToken:
    """Cooperative cancellation flag checked inside long division loops."""

    def __init__(self):
        self._event = threading.Event()

    def cancel(self):
        self._event.set()

    @property
    def cancelled(self) -> bool:
        return self._event.is_set()

    def check(self):
        if self._event.is_set():
            raise Cancelled("computation cancelled")


# --------------------------------------------------------------------------- order


class GradedLexOrder:
    """Total degree first; ties go to the larger exponent at the leftmost difference."""

    name = "grlex"

    @staticmethod
    def key(a: Exponent):
        return (sum(a), a)

    def compare(self, a: Exponent, b: Exponent) -> int:
        if len(a) != len(b):
            raise RingMismatchError(f"exponent lengths differ: {len(a)} vs {len(b)}")
        ka, kb = self.key(a), self.key(b)
        return (ka > kb) - (ka < kb)

    def __repr__(self):
        return "GradedLexOrder()"


GRLEX = GradedLexOrder()


def compare_monomials(a: Exponent, b: Exponent, order: GradedLexOrder = GRLEX) -> int:
    """Return -1, 0 or 1 as ``y^a`` is less than, equal to or greater than ``y^b``."""
    return order.compare(tuple(a), tuple(b))


def _divides(a: Exponent, b: Exponent) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _sub_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x - y for x, y in zip(a, b))


def _add_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(x + y for x, y in zip(a, b))


def monomial_divides(a: Exponent, b: Exponent) -> bool:
    """True if ``y^a`` divides ``y^b``."""
    return _divides(a, b)


def lcm_exp(a: Exponent, b: Exponent) -> Exponent:
    return tuple(max(x, y) for x, y in zip(a, b))


# --------------------------------------------------------------------------- ring


@dataclass(frozen=True)
class PolyRing:
    nvars: int
    exact: bool = True

    def __post_init__(self):
        if self.nvars < 1:
            raise ValueError("a ring needs at least one variable")

    def coerce(self, c):
        if self.exact:
            try:
                return GaussianRational.coerce(c)
            except TypeError as exc:
                raise MixedModeError(str(exc)) from None
        if isinstance(c, GaussianRational):
            return complex(c)
        return complex(c)

    def is_zero(self, c) -> bool:
        if self.exact:
            return not c
        return abs(c) < FLOAT_ZERO

    @property
    def one_exp(self) -> Exponent:
        return (0,) * self.nvars

    def zero(self) -> "Polynomial":
        return Polynomial._raw(self, {})

    def one(self) -> "Polynomial":
        return self.const(1)

    def const(self, c) -> "Polynomial":
        return Polynomial(self, {self.one_exp: c})

    def var(self, i: int) -> "Polynomial":
        """The variable ``y_i`` (1-based)."""
        if not 1 <= i <= self.nvars:
            raise IndexError(f"variable index {i} outside 1..{self.nvars}")
        exp = [0] * self.nvars
        exp[i - 1] = 1
        return Polynomial._raw(self, {tuple(exp): self.coerce(1)})

    def monomial(self, exp: Sequence[int], c=1) -> "Polynomial":
        exp = tuple(exp)
        if len(exp) != self.nvars:
            raise RingMismatchError(f"exponent {exp} has wrong length for {self.nvars} variables")
        if any(e < 0 for e in exp):
            raise ValueError(f"negative exponent in {exp}")
        return Polynomial(self, {exp: c})

    def univariate(self, i: int, coeffs: Sequence) -> "Polynomial":
        """``sum_k coeffs[k] * y_i**k``."""
        terms = {}
        for k, c in enumerate(coeffs):
            exp = [0] * self.nvars
            exp[i - 1] = k
            terms[tuple(exp)] = c
        return Polynomial(self, terms)

    @property
    def float_ring(self) -> "PolyRing":
        return PolyRing(self.nvars, exact=False)


# --------------------------------------------------------------------------- polynomial


class Polynomial:
    """Immutable sparse polynomial: a map from exponent tuples to nonzero coefficients."""

    __slots__ = ("ring", "_terms")

    def __init__(self, ring: PolyRing, terms: Mapping | None = None):
        clean = {}
        for exp, c in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != ring.nvars:
                raise RingMismatchError(f"exponent {exp} has wrong length for {ring.nvars} variables")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            c = ring.coerce(c)
            if exp in clean:
                c = clean[exp] + c
            clean[exp] = c
        self.ring = ring
        self._terms = {e: c for e, c in clean.items() if not ring.is_zero(c)}

    @classmethod
    def _raw(cls, ring: PolyRing, terms: dict) -> "Polynomial":
        obj = object.__new__(cls)
        obj.ring = ring
        obj._terms = terms
        return obj

    # -- inspection
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    @property
    def nvars(self) -> int:
        return self.ring.nvars

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def coefficient(self, exp: Sequence[int]):
        return self._terms.get(tuple(exp), self.ring.coerce(0))

    def monomials(self, order: GradedLexOrder = GRLEX) -> list:
        """Exponents in decreasing order."""
        return sorted(self._terms, key=order.key, reverse=True)

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def degree_in(self, i: int) -> int:
        if not self._terms:
            return -1
        return max(e[i - 1] for e in self._terms)

    def leading(self, order: GradedLexOrder = GRLEX):
        return leading(self, order)

    def variables_used(self) -> set:
        return {i + 1 for e in self._terms for i, k in enumerate(e) if k}

    # -- arithmetic
    def _check(self, other: "Polynomial"):
        if self.ring != other.ring:
            if self.ring.nvars != other.ring.nvars:
                raise RingMismatchError(
                    f"ring mismatch: {self.ring.nvars} vs {other.ring.nvars} variables"
                )
            raise MixedModeError("exact and float polynomials cannot be combined")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return self.ring.const(other)

    def __add__(self, other):
        other = self._lift(other)
        ring = self.ring
        out = dict(self._terms)
        for e, c in other._terms.items():
            if e in out:
                s = out[e] + c
                if ring.is_zero(s):
                    del out[e]
                else:
                    out[e] = s
            else:
                out[e] = c
        return Polynomial._raw(ring, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.ring, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        ring = self.ring
        out: dict = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = _add_exp(e1, e2)
                out[e] = out[e] + c1 * c2 if e in out else c1 * c2
        return Polynomial._raw(ring, {e: c for e, c in out.items() if not ring.is_zero(c)})

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        result = self.ring.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def scale(self, c) -> "Polynomial":
        c = self.ring.coerce(c)
        ring = self.ring
        if ring.is_zero(c):
            return ring.zero()
        return Polynomial._raw(
            ring, {e: v * c for e, v in self._terms.items() if not ring.is_zero(v * c)}
        )

    def mul_term(self, exp: Exponent, c) -> "Polynomial":
        """Multiply by the single term ``c * y^exp``."""
        ring = self.ring
        out = {}
        for e, v in self._terms.items():
            w = v * c
            if not ring.is_zero(w):
                out[_add_exp(e, exp)] = w
        return Polynomial._raw(ring, out)

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.ring == other.ring and self._terms == other._terms
        if self.ring.exact and isinstance(other, (int, GaussianRational)):
            return self == self.ring.const(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.ring, frozenset(self._terms.items())))

    def derivative(self, i: int) -> "Polynomial":
        """Partial derivative with respect to ``y_i`` (1-based)."""
        k = i - 1
        ring = self.ring
        out = {}
        for e, c in self._terms.items():
            if e[k]:
                ne = list(e)
                ne[k] -= 1
                out[tuple(ne)] = c * e[k]
        return Polynomial._raw(ring, {e: c for e, c in out.items() if not ring.is_zero(c)})

    def substitute_var(self, i: int, replacement: "Polynomial") -> "Polynomial":
        """Replace ``y_i`` by ``replacement`` everywhere."""
        self._check(replacement)
        k = i - 1
        ring = self.ring
        result = ring.zero()
        cache = {0: ring.one()}
        for e, c in self._terms.items():
            p = e[k]
            if p not in cache:
                cache[p] = replacement ** p
            rest = list(e)
            rest[k] = 0
            result = result + cache[p].mul_term(tuple(rest), c)
        return result

    def to_float(self) -> "Polynomial":
        ring = self.ring.float_ring
        return Polynomial(ring, {e: complex(c) for e, c in self._terms.items()})

    def evaluate(self, point: Sequence) -> complex:
        """Numeric value at ``point`` (complex arithmetic, exact coefficients converted)."""
        if len(point) != self.nvars:
            raise RingMismatchError(f"point has {len(point)} coordinates, ring has {self.nvars}")
        vals = [complex(v) for v in point]
        total = 0j
        for e, c in self._terms.items():
            term = complex(c)
            for v, k in zip(vals, e):
                if k:
                    term *= v**k
            total += term
        return total

    __call__ = evaluate

    def to_text(self) -> str:
        return to_text(self)

    def __str__(self):
        return to_text(self)

    def __repr__(self):
        mode = "exact" if self.ring.exact else "float"
        return f"Polynomial<{mode}, n={self.nvars}>({to_text(self)})"


# --------------------------------------------------------------------------- free operations


def leading(f: Polynomial, order: GradedLexOrder = GRLEX):
    """Leading (monomial, coefficient) of ``f``; raises on the zero polynomial."""
    if not f._terms:
        raise ZeroPolynomialError("the zero polynomial has no leading term")
    exp = max(f._terms, key=order.key)
    return exp, f._terms[exp]


def add(f: Polynomial, g: Polynomial) -> Polynomial:
    f._check(g)
    return f + g


def multiply(f: Polynomial, g: Polynomial) -> Polynomial:
    f._check(g)
    return f * g


def scale(f: Polynomial, c) -> Polynomial:
    return f.scale(c)


def _format_monomial(exp: Exponent) -> str:
    parts = []
    for i, k in enumerate(exp, start=1):
        if k == 1:
            parts.append(f"y{i}")
        elif k > 1:
            parts.append(f"y{i}^{k}")
    return "*".join(parts)


def to_text(f: Polynomial, order: GradedLexOrder = GRLEX) -> str:
    """Canonical text: terms in decreasing order, ``y1^e1*y2`` monomials.

    Real coefficients carry their sign into the joining operator; non-real ones are
    parenthesised (``(1/2+3/4*i)*y1``).
    """
    if not f._terms:
        return "0"
    fmt = format_exact if f.ring.exact else format_float
    pieces = []
    for exp in f.monomials(order):
        c = f._terms[exp]
        mono = _format_monomial(exp)
        if f.ring.exact:
            real, neg = c.is_real, c.re < 0
        else:
            real, neg = complex(c).imag == 0, complex(c).real < 0
        if real:
            mag = -c if neg else c
            if f.ring.exact:
                mag_text = fmt(mag)
                is_one = mag == 1
            else:
                mag_text = repr(complex(mag).real)
                is_one = complex(mag).real == 1.0
            if mono:
                body = mono if is_one else f"{mag_text}*{mono}"
            else:
                body = mag_text
            sign = "-" if neg else "+"
        else:
            body = f"({fmt(c)})" + (f"*{mono}" if mono else "")
            sign = "+"
        pieces.append((sign, body))
    first_sign, first_body = pieces[0]
    text = ("-" if first_sign == "-" else "") + first_body
    for sign, body in pieces[1:]:
        text += f" {sign} {body}"
    return text


# --------------------------------------------------------------------------- division


@dataclass(frozen=True)
class DivisionResult:
    """Quotients and remainder with ``dividend == sum(q_j * f_j) + remainder``."""

    dividend: Polynomial
    divisors: tuple
    quotients: tuple
    remainder: Polynomial

    def reconstruct(self) -> Polynomial:
        total = self.remainder
        for q, f in zip(self.quotients, self.divisors):
            total = total + q * f
        return total

    def identity_holds(self) -> bool:
        diff = self.reconstruct() - self.dividend
        return diff.is_zero()

    def remainder_is_reduced(self, order: GradedLexOrder = GRLEX) -> bool:
        lms = [leading(f, order)[0] for f in self.divisors]
        return not any(_divides(m, e) for e in self.remainder._terms for m in lms)

    def quotient_bounds_hold(self, order: GradedLexOrder = GRLEX) -> bool:
        """``LM(dividend) >= LM(q_j * f_j)`` for every nonzero quotient."""
        if self.dividend.is_zero():
            return all(q.is_zero() for q in self.quotients)
        top = order.key(leading(self.dividend, order)[0])
        for q, f in zip(self.quotients, self.divisors):
            if q.is_zero():
                continue
            lm = _add_exp(leading(q, order)[0], leading(f, order)[0])
            if order.key(lm) > top:
                return False
        return True


def divide_multivariate(
    g: Polynomial,
    divisors: Sequence[Polynomial],
    order: GradedLexOrder = GRLEX,
    cancel: CancelToken | None = None,
) -> DivisionResult:
    """Multivariate division of ``g`` by an ordered list of divisors.

    The current leading term is always reduced by the first divisor (in list
    order) whose leading monomial divides it; otherwise it moves to the remainder.
    """
    divisors = tuple(divisors)
    ring = g.ring
    for f in divisors:
        g._check(f)
        if f.is_zero():
            raise ZeroPolynomialError("zero polynomial in divisor list")
    heads = [leading(f, order) for f in divisors]
    inv_lc = [ring.coerce(1) / lc for _, lc in heads]
    tails = [
        [(e, c) for e, c in f._terms.items() if e != lm] for f, (lm, _) in zip(divisors, heads)
    ]
    key = order.key

    p = dict(g._terms)
    heap = []
    in_heap = set()
    for e in p:
        heapq.heappush(heap, _NegKey(key(e), e))
        in_heap.add(e)
    quotients = [dict() for _ in divisors]
    remainder = {}
    steps = 0
    while heap:
        exp = heapq.heappop(heap).exp
        in_heap.discard(exp)
        c = p.pop(exp, None)
        if c is None:
            continue
        steps += 1
        if cancel is not None and steps % 64 == 0:
            cancel.check()
        for j, (lm, _) in enumerate(heads):
            if _divides(lm, exp):
                shift = _sub_exp(exp, lm)
                factor = c * inv_lc[j]
                quotients[j][shift] = quotients[j].get(shift, 0) + factor
                for te, tc in tails[j]:
                    ne = _add_exp(te, shift)
                    v = p.get(ne)
                    nv = -factor * tc if v is None else v - factor * tc
                    if ring.is_zero(nv):
                        p.pop(ne, None)
                    else:
                        p[ne] = nv
                        if ne not in in_heap:
                            heapq.heappush(heap, _NegKey(key(ne), ne))
                            in_heap.add(ne)
                break
        else:
            remainder[exp] = c
    qs = tuple(
        Polynomial._raw(ring, {e: v for e, v in q.items() if not ring.is_zero(v)})
        for q in quotients
    )
    return DivisionResult(g, divisors, qs, Polynomial._raw(ring, remainder))


class _NegKey:
    """Heap entry ordering exponents so the order-maximal one pops first."""

    __slots__ = ("k", "exp")

    def __init__(self, k, exp):
        self.k = k
        self.exp = exp

    def __lt__(self, other):
        return self.k > other.k


def normal_form(g: Polynomial, divisors: Sequence[Polynomial], order: GradedLexOrder = GRLEX) -> Polynomial:
    return divide_multivariate(g, divisors, order).remainder


def s_polynomial(f: Polynomial, g: Polynomial, order: GradedLexOrder = GRLEX) -> Polynomial:
    """``(L/LT(f)) f - (L/LT(g)) g`` with ``L`` the lcm of the leading monomials."""
    f._check(g)
    lm_f, lc_f = leading(f, order)
    lm_g, lc_g = leading(g, order)
    lcm = lcm_exp(lm_f, lm_g)
    one = f.ring.coerce(1)
    return f.mul_term(_sub_exp(lcm, lm_f), one / lc_f) - g.mul_term(_sub_exp(lcm, lm_g), one / lc_g)


@dataclass(frozen=True)
class GroebnerReport:
    is_groebner: bool
    failing_pair: tuple | None = None
    witness_remainder: Polynomial | None = None
    pairs_checked: int = 0


def buchberger_verify(
    basis: Sequence[Polynomial],
    order: GradedLexOrder = GRLEX,
    cancel: CancelToken | None = None,
) -> GroebnerReport:
    """Check Buchberger's criterion: every S-polynomial reduces to zero."""
    basis = list(basis)
    if not basis:
        raise ValueError("empty basis")
    for f in basis:
        if f.is_zero():
            raise ZeroPolynomialError("zero polynomial in basis")
    checked = 0
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            s = s_polynomial(basis[i], basis[j], order)
            r = divide_multivariate(s, basis, order, cancel).remainder
            checked += 1
            if not r.is_zero():
                return GroebnerReport(False, (i, j), r, checked)
    return GroebnerReport(True, None, None, checked)


def evaluate_many(polys: Iterable[Polynomial], point: Sequence) -> list:
    return [p.evaluate(point) for p in polys]
