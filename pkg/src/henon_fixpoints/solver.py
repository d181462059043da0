"""Fixed points of a composition via multiplication matrices on the quotient ring.

The fixed-point system has leading monomials ``y_i^d_i``, so the quotient ring
has the box of monomials ``y^a`` with ``a_i < d_i`` as a basis, of dimension
``d = d_1 ... d_n``. Eigenvectors of a random combination of the transposed
multiplication matrices are evaluation vectors at the common zeros; the
coordinates are read off by Rayleigh quotients and then polished by Newton's
method on the full system.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .henon import HenonComposition, cycle_to_point, differential_numeric, fixed_point_system
from .poly import GRLEX, divide_multivariate
from .validation import check_composition, check_positive

CLASSIFICATIONS = ("saddle", "attracting", "repelling", "semi-neutral", "indeterminate")
NEUTRAL_BAND = 1e-6


class SolverError(RuntimeError):
    """Eigenvalue extraction failed for every random combination tried."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class QuotientBasis:
    degrees: tuple
    monomials: tuple
    index: dict = field(repr=False)

    @property
    def dimension(self) -> int:
        return len(self.monomials)


def quotient_basis(comp: HenonComposition) -> QuotientBasis:
    """Standard monomials ``y^a``, ``0 <= a_i < d_i``, in increasing graded-lex order."""
    degrees = comp.degrees
    mons = sorted(itertools.product(*(range(d) for d in degrees)), key=GRLEX.key)
    return QuotientBasis(degrees, tuple(mons), {m: k for k, m in enumerate(mons)})


def multiplication_matrices(comp: HenonComposition, exact: bool = False) -> list:
    """All ``n`` matrices of multiplication by ``y_i`` in the standard basis.

    Column ``k`` of matrix ``i`` holds the normal form of ``y_i * b_k``.
    """
    basis = quotient_basis(comp)
    work = comp if (exact and comp.is_exact) else comp.to_float()
    ring = work.ring()
    system = fixed_point_system(work, ring)
    D = basis.dimension
    mats = []
    for i in range(1, comp.n + 1):
        M = np.zeros((D, D), dtype=complex)
        for k, mono in enumerate(basis.monomials):
            shifted = list(mono)
            shifted[i - 1] += 1
            nf = divide_multivariate(ring.monomial(shifted), system).remainder
            for exp, c in nf.terms.items():
                M[basis.index[exp], k] = complex(c)
        mats.append(M)
    return mats


def multiplication_matrix(comp: HenonComposition, i: int, exact: bool = False) -> np.ndarray:
    """Matrix of multiplication by ``y_i`` (1-based) on the quotient ring."""
    if not 1 <= i <= comp.n:
        raise IndexError(f"variable index {i} outside 1..{comp.n}")
    return multiplication_matrices(comp, exact)[i - 1]


@dataclass(frozen=True)
class FixedPointRecord:
    y_cycle: tuple
    point: tuple
    residual: float
    multiplicity: int
    multipliers: tuple
    classification: str
    stable_multiplier_profile: bool = False

    def to_dict(self) -> dict:
        def c(z):
            return [float(np.real(z)), float(np.imag(z))]

        return {
            "y_cycle": [c(v) for v in self.y_cycle],
            "point": [c(v) for v in self.point],
            "residual": float(self.residual),
            "multiplicity": self.multiplicity,
            "multipliers": [c(v) for v in self.multipliers],
            "classification": self.classification,
            "unstable_multiplier_equals_degree": self.stable_multiplier_profile,
        }


def _system_callables(comp: HenonComposition):
    fcomp = comp.to_float()
    n = fcomp.n
    factors = fcomp.factors
    deltas = np.array([complex(f.delta) for f in factors])

    def residual_vec(y):
        out = np.empty(n, dtype=complex)
        for i, f in enumerate(factors):
            out[i] = f.p(y[i]) - y[(i + 1) % n] - deltas[i] * y[(i - 1) % n]
        return out

    def jacobian(y):
        J = np.zeros((n, n), dtype=complex)
        for i, f in enumerate(factors):
            J[i, i] += f.p_prime(y[i])
            J[i, (i + 1) % n] -= 1
            J[i, (i - 1) % n] -= deltas[i]
        return J

    return residual_vec, jacobian


def newton_polish(comp: HenonComposition, y0, steps: int = 8, tol: float = 1e-14):
    """Damped Newton on the fixed-point system; a step is kept only if it lowers the residual."""
    residual_vec, jacobian = _system_callables(comp)
    y = np.array(y0, dtype=complex)
    r = residual_vec(y)
    best = np.max(np.abs(r))
    for _ in range(steps):
        if best <= tol * max(1.0, np.max(np.abs(y))):
            break
        try:
            step = np.linalg.solve(jacobian(y), r)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jacobian(y), r, rcond=None)[0]
        improved = False
        t = 1.0
        for _ in range(4):
            cand = y - t * step
            rc = residual_vec(cand)
            val = np.max(np.abs(rc))
            if np.isfinite(val) and val < best:
                y, r, best = cand, rc, val
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    return y, float(best)


def fixed_point_multipliers(comp: HenonComposition, y_cycle) -> tuple:
    """Eigenvalues of ``Df`` ordered by modulus, smaller first."""
    ev = np.linalg.eigvals(differential_numeric(comp.to_float() if comp.is_exact else comp, y_cycle))
    ev = sorted(ev, key=lambda z: (abs(z), z.real, z.imag))
    return complex(ev[0]), complex(ev[1])


def classify_multipliers(multipliers, eps: float = NEUTRAL_BAND) -> str:
    a, b = (abs(complex(m)) for m in multipliers)
    if not (np.isfinite(a) and np.isfinite(b)):
        return "indeterminate"
    if abs(a - 1) <= eps or abs(b - 1) <= eps:
        return "semi-neutral"
    lo, hi = min(a, b), max(a, b)
    if lo < 1 - eps and hi > 1 + eps:
        return "saddle"
    if hi < 1 - eps:
        return "attracting"
    if lo > 1 + eps:
        return "repelling"
    return "indeterminate"


def classify_fixed_point(comp: HenonComposition, record: FixedPointRecord, eps: float = NEUTRAL_BAND) -> str:
    """Saddle / attracting / repelling / semi-neutral from the record's multipliers."""
    return classify_multipliers(record.multipliers, eps)


def degree_multiplier_profile(comp: HenonComposition, multipliers, rtol: float = 1e-6) -> bool:
    """True when the larger multiplier equals ``d`` and the smaller ``delta/d``."""
    d = comp.degree
    delta = complex(comp.jacobian)
    a, b = multipliers
    return abs(b - d) <= rtol * d and abs(a - delta / d) <= rtol * max(1.0, abs(delta / d))


def _cluster(points: np.ndarray, radius: float) -> list:
    """Single-linkage groups of rows within ``radius`` (max-norm)."""
    m = len(points)
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(m):
        for b in range(a + 1, m):
            if np.max(np.abs(points[a] - points[b])) <= radius:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: dict = {}
    for a in range(m):
        groups.setdefault(find(a), []).append(a)
    return [groups[k] for k in sorted(groups)]


def _record_sort_key(rec: FixedPointRecord):
    return tuple(round(v, 9) for z in rec.y_cycle for v in (z.real, z.imag))


def solve_fixed_points(
    comp: HenonComposition,
    tolerance: float = 1e-8,
    cluster_radius: float = 1e-6,
    seed: int = 0,
    max_attempts: int = 5,
    newton_steps: int = 8,
    matrices: list | None = None,
) -> list:
    """All fixed points of ``comp`` with multiplicities, multipliers and classification.

    Returns records sorted by their cyclic coordinates. Raises
    :class:`SolverError` if no random combination gives residuals below
    ``tolerance`` and a consistent trace check.
    """
    n = comp.n
    fcomp = comp.to_float() if comp.is_exact else comp
    mats = matrices if matrices is not None else multiplication_matrices(comp)
    D = mats[0].shape[0]
    traces = np.array([np.trace(M) for M in mats])
    scale = max(1.0, float(np.max(np.abs(np.concatenate([M.ravel() for M in mats])))))
    diagnostics = {"attempts": []}
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        weights = rng.uniform(0.5, 1.5, size=n) * rng.choice([-1.0, 1.0], size=n)
        combo = sum(w * M for w, M in zip(weights, mats))
        _, vecs = np.linalg.eig(combo.T)
        coords = np.empty((D, n), dtype=complex)
        for k in range(D):
            v = vecs[:, k]
            vv = np.vdot(v, v)
            for i, M in enumerate(mats):
                coords[k, i] = np.vdot(v, M.T @ v) / vv
        polished = np.empty_like(coords)
        residuals = np.empty(D)
        for k in range(D):
            polished[k], residuals[k] = newton_polish(fcomp, coords[k], steps=newton_steps)
        groups = _cluster(polished, cluster_radius)
        reps = [polished[g].mean(axis=0) for g in groups]
        mults = [len(g) for g in groups]
        trace_sum = sum(m * r for m, r in zip(mults, reps))
        trace_err = float(np.max(np.abs(trace_sum - traces))) / (scale * D)
        worst = float(np.max(residuals))
        diagnostics["attempts"].append(
            {"seed": [seed, attempt], "max_residual": worst, "trace_error": trace_err}
        )
        if worst < tolerance and trace_err < 1e-6:
            break
    else:
        raise SolverError(
            f"fixed-point extraction failed after {max_attempts} random combinations", diagnostics
        )

    records = []
    for g, rep, mult in zip(groups, reps, mults):
        y = tuple(complex(v) for v in rep)
        res = float(np.max(np.abs(_system_callables(fcomp)[0](np.array(y)))))
        multipliers = fixed_point_multipliers(fcomp, y)
        records.append(
            FixedPointRecord(
                y_cycle=y,
                point=cycle_to_point(y),
                residual=res,
                multiplicity=mult,
                multipliers=multipliers,
                classification=classify_multipliers(multipliers),
                stable_multiplier_profile=degree_multiplier_profile(fcomp, multipliers),
            )
        )
    records.sort(key=_record_sort_key)
    return records


# --------------------------------------------------------------------------- shared multipliers


@dataclass(frozen=True)
class SharedMultiplierReport:
    applicable: bool
    reason: str
    degree: int
    largest_group: int
    bound: int
    holds: bool | None
    groups: tuple
    excluded_neutral: int = 0
    cubed: bool = False

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "reason": self.reason,
            "degree": self.degree,
            "largest_group": self.largest_group,
            "bound": self.bound,
            "holds": self.holds,
            "group_sizes": [len(g) for g in self.groups],
            "excluded_semi_neutral": self.excluded_neutral,
            "cubed_single_factor": self.cubed,
        }


def group_by_multipliers(records, tolerance: float) -> list:
    """Indices of records grouped by multiplier pair (single linkage, max-norm ``<= tolerance``)."""
    pts = np.array([[r.multipliers[0], r.multipliers[1]] for r in records], dtype=complex)
    if len(pts) == 0:
        return []
    if tolerance == 0:
        groups: dict = {}
        for k, r in enumerate(records):
            groups.setdefault(tuple(r.multipliers), []).append(k)
        return list(groups.values())
    return _cluster(pts, tolerance)


def check_shared_multipliers(
    comp: HenonComposition,
    multiplier_tolerance: float = 1e-6,
    records: list | None = None,
    auto_cube: bool = True,
    **solve_options,
) -> SharedMultiplierReport:
    """Largest group of fixed points sharing a multiplier pair, against the bound ``d - 2``.

    Applies when ``|delta| < 1``, ``n >= 3`` (a single factor is cubed first when
    ``auto_cube``) and all ``d`` fixed points are simple. Semi-neutral points are
    left out of the grouping with a warning.
    """
    cubed = False
    if comp.n == 1 and auto_cube:
        comp = comp.cubed()
        cubed = True
        records = None
    d = comp.degree

    def verdict(applicable, reason, largest=0, holds=None, groups=(), excluded=0):
        return SharedMultiplierReport(applicable, reason, d, largest, d - 2, holds, tuple(groups), excluded, cubed)

    if abs(complex(comp.jacobian)) >= 1:
        return verdict(False, "inapplicable: |delta| >= 1")
    if comp.n < 3:
        return verdict(False, "inapplicable: fewer than three factors")
    if records is None:
        records = solve_fixed_points(comp, **solve_options)
    if len(records) != d or any(r.multiplicity != 1 for r in records):
        return verdict(False, "inapplicable: non-distinct spectrum")
    usable = [r for r in records if r.classification != "semi-neutral"]
    excluded = len(records) - len(usable)
    if excluded:
        warnings.warn(f"{excluded} semi-neutral fixed point(s) left out of multiplier grouping", stacklevel=2)
    groups = group_by_multipliers(usable, multiplier_tolerance)
    largest = max((len(g) for g in groups), default=0)
    return verdict(True, "ok", largest, largest <= d - 2, groups, excluded)


# --------------------------------------------------------------------------- estimator


class FixedPointSolver(BaseEstimator):
    """Estimator wrapper: ``fit(composition)`` solves and classifies all fixed points.

    Parameters
    ----------
    tolerance : float
        Required max residual of the fixed-point system after polishing.
    cluster_radius : float
        Points closer than this (max-norm on the cyclic coordinates) form one
        fixed point of higher multiplicity.
    seed : int
        Seeds the random linear combination of multiplication matrices.
    max_attempts : int
        Number of random combinations tried before giving up.

    Attributes
    ----------
    records_ : list of FixedPointRecord
    basis_ : QuotientBasis
    degree_ : int
    """

    def __init__(self, tolerance=1e-8, cluster_radius=1e-6, seed=0, max_attempts=5):
        self.tolerance = tolerance
        self.cluster_radius = cluster_radius
        self.seed = seed
        self.max_attempts = max_attempts

    def fit(self, X, y=None):
        comp = check_composition(X)
        check_positive("tolerance", self.tolerance)
        check_positive("cluster_radius", self.cluster_radius)
        check_positive("max_attempts", self.max_attempts, integer=True)
        self.composition_ = comp
        self.basis_ = quotient_basis(comp)
        self.degree_ = comp.degree
        self.records_ = solve_fixed_points(
            comp,
            tolerance=self.tolerance,
            cluster_radius=self.cluster_radius,
            seed=self.seed,
            max_attempts=self.max_attempts,
        )
        return self

    def multiplier_report(self, multiplier_tolerance=1e-6) -> SharedMultiplierReport:
        check_is_fitted(self, "records_")
        return check_shared_multipliers(
            self.composition_, multiplier_tolerance, records=self.records_, auto_cube=False
        )

    def classifications(self) -> list:
        check_is_fitted(self, "records_")
        return [r.classification for r in self.records_]
