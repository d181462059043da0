"""Exact ideal-membership certificates for the fixed-point system of a composition.

Every check here runs in exact Gaussian-rational arithmetic: a nonzero
remainder on division by a Gröbner basis is a proof of non-membership, which
rounding would destroy. Float compositions are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .coefficients import GaussianRational, parse_exact
from .henon import (
    HenonComposition,
    admissible_subsets,
    default_lambda,
    eta_polynomial,
    fixed_point_system,
    multiplier_polynomial,
    p_product,
    random_gaussian_rational,
)
from .poly import (
    GRLEX,
    CancelToken,
    GroebnerReport,
    Polynomial,
    buchberger_verify,
    divide_multivariate,
    leading,
    monomial_divides,
)


class ExactModeRequired(ValueError):
    pass


class NotGroebnerError(RuntimeError):
    """The fixed-point system failed Buchberger's criterion."""

    def __init__(self, report: GroebnerReport):
        self.report = report
        super().__init__(
            f"S-polynomial of pair {report.failing_pair} leaves remainder {report.witness_remainder}"
        )


def _require_exact(comp: HenonComposition):
    if not comp.is_exact:
        raise ExactModeRequired("membership certificates need exact coefficients")


def verify_groebner_system(comp: HenonComposition, cancel: CancelToken | None = None,
                           strict: bool = True) -> GroebnerReport:
    """Run Buchberger's criterion on the fixed-point system.

    With ``strict`` a failure raises :class:`NotGroebnerError` carrying the witness.
    """
    _require_exact(comp)
    report = buchberger_verify(fixed_point_system(comp), GRLEX, cancel)
    if strict and not report.is_groebner:
        raise NotGroebnerError(report)
    return report


@dataclass(frozen=True)
class MembershipReport:
    target: Polynomial
    remainder: Polynomial
    is_member: bool
    remainder_leading: tuple | None
    quotient_leading_bound_ok: bool
    target_leading: tuple | None = None
    leading_reducible: bool | None = None

    def to_dict(self) -> dict:
        def lead(t):
            if t is None:
                return None
            exp, c = t
            return {"monomial": list(exp), "coefficient": str(c)}

        out = {
            "target": self.target.to_text(),
            "remainder": self.remainder.to_text(),
            "is_member": self.is_member,
            "remainder_leading": lead(self.remainder_leading),
            "target_leading": lead(self.target_leading),
            "quotient_leading_bound_ok": self.quotient_leading_bound_ok,
        }
        if self.leading_reducible is not None:
            out["leading_reducible"] = self.leading_reducible
        return out


def membership(target: Polynomial, comp: HenonComposition, cancel: CancelToken | None = None,
               verify: bool = True) -> MembershipReport:
    """Divide ``target`` by the fixed-point system and report the remainder."""
    _require_exact(comp)
    system = fixed_point_system(comp)
    if verify:
        verify_groebner_system(comp, cancel)
    result = divide_multivariate(target, system, GRLEX, cancel)
    rem = result.remainder
    target_lead = None if target.is_zero() else leading(target)
    lms = [leading(phi)[0] for phi in system]
    reducible = None
    if target_lead is not None:
        reducible = any(monomial_divides(m, target_lead[0]) for m in lms)
    return MembershipReport(
        target=target,
        remainder=rem,
        is_member=rem.is_zero(),
        remainder_leading=None if rem.is_zero() else leading(rem),
        quotient_leading_bound_ok=result.quotient_bounds_hold(),
        target_leading=target_lead,
        leading_reducible=reducible,
    )


def phi_membership(comp: HenonComposition, lam=None, cancel: CancelToken | None = None) -> MembershipReport:
    """Divide the multiplier polynomial for ``lam`` (default ``d``) by the system.

    For ``lam != 0`` its leading monomial ``prod y_i^(d_i - 1)`` is divisible by no
    ``y_i^d_i``, so the remainder is nonzero.
    """
    _require_exact(comp)
    lam = default_lambda(comp) if lam is None else parse_exact(lam)
    target = multiplier_polynomial(comp, lam)
    return membership(target, comp, cancel)


def shifted_phi_membership(comp: HenonComposition, lam=None, alpha=0,
                           cancel: CancelToken | None = None) -> MembershipReport:
    """Same check for ``(y_1 - alpha) * Phi``."""
    _require_exact(comp)
    ring = comp.ring()
    lam = default_lambda(comp) if lam is None else parse_exact(lam)
    alpha = parse_exact(alpha)
    target = (ring.var(1) - ring.const(alpha)) * multiplier_polynomial(comp, lam)
    return membership(target, comp, cancel)


# --------------------------------------------------------------------------- decomposition identity


@dataclass(frozen=True)
class DecompositionReport:
    """Outcome of rebuilding ``(y_j - alpha)((p')^J + h)`` as ``A phi_j + B mu + (y_j - alpha) rho2``."""

    J: tuple
    j: int
    lhs: Polynomial
    A: Polynomial
    B: Polynomial
    rho1: Polynomial
    rho2: Polynomial
    difference: Polynomial
    identity_holds: bool
    leading_match: bool
    rho1_in_span: bool
    rho2_subsets: tuple

    def to_dict(self) -> dict:
        return {
            "J": list(self.J),
            "j": self.j,
            "lhs": self.lhs.to_text(),
            "A": self.A.to_text(),
            "B": self.B.to_text(),
            "rho1": self.rho1.to_text(),
            "rho2": self.rho2.to_text(),
            "difference": self.difference.to_text(),
            "identity_holds": self.identity_holds,
            "leading_match": self.leading_match,
            "rho1_in_span": self.rho1_in_span,
            "rho2_subsets": [list(s) for s in self.rho2_subsets],
        }


def _validate_h(J: tuple, h: Mapping) -> dict:
    allowed = {tuple(sorted(L)) for L in admissible_subsets(J)}
    clean = {}
    for L, c in h.items():
        L = tuple(sorted(L))
        if L not in allowed:
            raise ValueError(
                f"subset {list(L)} is not admissible for J={list(J)} "
                "(need L within J, |L| <= |J|-2 and |L| = |J| mod 2)"
            )
        clean[L] = clean.get(L, GaussianRational(0)) + parse_exact(c)
    return clean


def decomposition_verify(comp: HenonComposition, J: Sequence[int], j: int, alpha=0,
                         h: Mapping | None = None) -> DecompositionReport:
    """Verify the division of ``(y_j - alpha)((p')^J + h)`` by ``phi_j`` in closed form.

    ``h`` maps subsets ``L`` of ``J`` to coefficients and stands for
    ``sum_L c_L (p')^L``. Splitting ``h`` on whether ``j`` lies in ``L`` gives
    ``(p')^J + h = p_j' * mu + rho2`` with ``mu = (p')^{J-j} + rho1``; then
    ``A = d_j mu`` and ``B = eta_j + d_j y_{j+1} + d_j delta_j y_{j-1}``.
    """
    _require_exact(comp)
    n = comp.n
    J = tuple(sorted(set(J)))
    if not J or any(not 1 <= i <= n for i in J):
        raise ValueError(f"J must be a non-empty subset of 1..{n}")
    if j not in J:
        raise ValueError(f"j={j} must belong to J")
    h = _validate_h(J, h or {})
    ring = comp.ring()
    alpha = parse_exact(alpha)
    f = comp.factors[j - 1]
    d_j = f.degree
    rest = tuple(i for i in J if i != j)
    succ, pred = (j % n) + 1, ((j - 2) % n) + 1

    def combo(items):
        out = ring.zero()
        for L, c in items:
            out = out + p_product(comp, L, ring).scale(c)
        return out

    rho1 = combo((tuple(i for i in L if i != j), c) for L, c in h.items() if j in L)
    rho2 = combo((L, c) for L, c in h.items() if j not in L)
    mu = p_product(comp, rest, ring) + rho1
    A = mu.scale(d_j)
    B = eta_polynomial(comp, j, alpha, ring) + ring.var(succ).scale(d_j) + ring.var(pred).scale(d_j * f.delta)
    shift = ring.var(j) - ring.const(alpha)
    phi_j = fixed_point_system(comp, ring)[j - 1]

    lhs = shift * (p_product(comp, J, ring) + combo(h.items()))
    rhs = A * phi_j + B * mu + shift * rho2
    diff = lhs - rhs
    leading_match = leading(lhs)[0] == leading(A * phi_j)[0]

    rest_allowed = set(admissible_subsets(rest))
    rho1_ok = all(tuple(i for i in L if i != j) in rest_allowed for L in h if j in L)
    rho2_subsets = tuple(sorted({L for L in h if j not in L}, key=lambda s: (len(s), s)))
    return DecompositionReport(
        J=J, j=j, lhs=lhs, A=A, B=B, rho1=rho1, rho2=rho2, difference=diff,
        identity_holds=diff.is_zero(), leading_match=leading_match,
        rho1_in_span=rho1_ok, rho2_subsets=rho2_subsets,
    )


def random_h(rng, J: Sequence[int], bound: float = 2.0, denominator: int = 4) -> dict:
    """Random element of the admissible span over ``J`` (Gaussian-rational weights)."""
    out = {}
    for L in admissible_subsets(J):
        if rng.random() < 0.7:
            c = random_gaussian_rational(rng, bound, denominator)
            if c:
                out[tuple(L)] = c
    return out
