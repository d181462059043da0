"""Escape-rate dynamics: filtration radius, bounded-orbit tests, Green functions, slice rasters.

Escape regions follow the usual filtration convention. Forward: if
``|y| >= max(|x|, R)`` then every factor at least doubles ``|y|`` and keeps the
orbit in that region, so the orbit escapes (and the region misses ``K+``).
Backward: the same holds for ``|x| >= max(|y|, R-)`` under the inverse maps.

Green functions are ``G(q) = lim d^-t log+ ||f^{+-t}(q)||`` with the max-norm,
iterated until successive values differ by less than the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .henon import HenonComposition
from .validation import check_composition, check_points, check_positive


def filtration_radius(comp: HenonComposition) -> float:
    """``R = max_j (2 + |delta_j| + sum_k |c_jk|)``; forward escape starts at ``|y| >= max(|x|, R)``."""
    return max(2.0 + abs(complex(f.delta)) + f.coefficient_l1() for f in comp.factors)


def backward_filtration_radius(comp: HenonComposition) -> float:
    """``R- = max_j (2 + 2|delta_j| + sum_k |c_jk|)``; backward escape starts at ``|x| >= max(|y|, R-)``."""
    return max(2.0 + 2.0 * abs(complex(f.delta)) + f.coefficient_l1() for f in comp.factors)


@dataclass(frozen=True)
class EscapeOptions:
    max_iterations: int = 200
    escape_radius: float | None = None
    tolerance: float = 1e-10
    # starting points with ||f(q) - q|| below this (relative) are treated as fixed
    fixed_point_snap: float = 1e-9

    def __post_init__(self):
        check_positive("max_iterations", self.max_iterations, integer=True)
        check_positive("tolerance", self.tolerance)
        if self.escape_radius is not None:
            check_positive("escape_radius", self.escape_radius)
        if self.fixed_point_snap < 0:
            raise ValueError("fixed_point_snap must be non-negative")

    def radius_for(self, comp: HenonComposition, backward: bool = False) -> float:
        base = backward_filtration_radius(comp) if backward else filtration_radius(comp)
        if self.escape_radius is None:
            return base
        if self.escape_radius < base:
            raise ValueError(f"escape_radius {self.escape_radius} is below the filtration radius {base}")
        return float(self.escape_radius)


DEFAULT_OPTIONS = EscapeOptions()


# --------------------------------------------------------------------------- vectorised orbits


def _float_data(comp: HenonComposition):
    return [
        (np.array([complex(c) for c in f.coefficients], dtype=complex), complex(f.delta))
        for f in comp.factors
    ]


def _horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.ones_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc


def _forward(data, x, y):
    for coeffs, delta in data:
        x, y = y, _horner(coeffs, y) - delta * x
    return x, y


def _backward(data, x, y):
    for coeffs, delta in reversed(data):
        x, y = (_horner(coeffs, x) - y) / delta, x
    return x, y


@dataclass
class _OrbitResult:
    green: np.ndarray
    escaped_at: np.ndarray  # -1 where the orbit never escaped
    snapped: np.ndarray
    overflow: np.ndarray
    history: list = field(default_factory=list)


def _log_drift(comp: HenonComposition, backward: bool) -> float:
    """Shift ``kappa`` making ``d^-t (log||q_t|| + kappa)`` converge without an O(d^-t) bias.

    Far out, one pass of the inverse maps sends ``log|x|`` to
    ``d log|x| - c`` with ``c = sum_j (d_1...d_{j-1}) log|delta_j|`` (each inverse
    factor divides by ``delta_j``); ``kappa = -c / (d - 1)`` absorbs that drift.
    The forward maps are monic, so there ``kappa = 0``.
    """
    if not backward:
        return 0.0
    c, weight = 0.0, 1
    for f in comp.factors:
        c += weight * np.log(abs(complex(f.delta)))
        weight *= f.degree
    return -c / (comp.degree - 1)


def _orbit(comp: HenonComposition, x0, y0, opts: EscapeOptions, backward: bool,
           keep_history: bool = False) -> _OrbitResult:
    data = _float_data(comp)
    kappa = _log_drift(comp, backward)
    step = _backward if backward else _forward
    radius = opts.radius_for(comp, backward)
    d = comp.degree
    x = np.array(x0, dtype=complex).ravel()
    y = np.array(y0, dtype=complex).ravel()
    m = x.size
    green = np.zeros(m)
    escaped_at = np.full(m, -1, dtype=int)
    overflow = np.zeros(m, dtype=bool)
    done = np.zeros(m, dtype=bool)
    prev = np.full(m, np.nan)
    history = [] if keep_history else None

    with np.errstate(all="ignore"):
        fx, fy = step(data, x, y)
        norm0 = np.maximum(np.abs(x), np.abs(y))
        gap = np.maximum(np.abs(fx - x), np.abs(fy - y))
        snapped = np.isfinite(gap) & (gap <= opts.fixed_point_snap * (1.0 + norm0))
        done |= snapped

        for t in range(opts.max_iterations + 1):
            act = ~done
            if not act.any():
                break
            ax, ay = np.abs(x), np.abs(y)
            finite = np.isfinite(ax) & np.isfinite(ay)
            lead, other = (ax, ay) if backward else (ay, ax)
            in_region = finite & (lead >= np.maximum(other, radius))
            newly = act & in_region & (escaped_at < 0)
            escaped_at[newly] = t
            # overflow before convergence: keep the last finite estimate
            blown = act & ~finite
            if blown.any():
                overflow |= blown
                escaped_at[blown & (escaped_at < 0)] = t
                green[blown] = np.where(np.isnan(prev[blown]), 0.0, prev[blown])
                done |= blown
            tracking = act & finite & (escaped_at >= 0)
            if tracking.any():
                norm = np.maximum(ax[tracking], ay[tracking])
                g_t = np.maximum(np.log(norm) + kappa, 0.0) / float(d) ** t
                old = prev[tracking]
                conv = ~np.isnan(old) & (np.abs(g_t - old) < opts.tolerance)
                idx = np.flatnonzero(tracking)
                green[idx] = g_t
                prev[idx] = g_t
                done[idx[conv]] = True
                if keep_history:
                    history.append((t, idx.copy(), g_t.copy()))
            if t == opts.max_iterations:
                break
            live = ~done
            if live.any():
                nx, ny = step(data, x[live], y[live])
                x[live], y[live] = nx, ny

    green[escaped_at < 0] = 0.0
    return _OrbitResult(green, escaped_at, snapped, overflow, history or [])


# --------------------------------------------------------------------------- point API


@dataclass(frozen=True)
class EscapeVerdict:
    status: str  # "bounded" or "escaped"
    iteration: int | None
    iteration_limited: bool
    snapped_fixed_point: bool = False
    overflow: bool = False


def _verdict(res: _OrbitResult, k: int) -> EscapeVerdict:
    if res.escaped_at[k] >= 0:
        return EscapeVerdict("escaped", int(res.escaped_at[k]), False, False, bool(res.overflow[k]))
    snapped = bool(res.snapped[k])
    return EscapeVerdict("bounded", None, not snapped, snapped)


def in_k_plus(comp: HenonComposition, point, opts: EscapeOptions = DEFAULT_OPTIONS) -> EscapeVerdict:
    """Forward escape test. "bounded" means no escape within ``max_iterations``."""
    res = _orbit(comp, [point[0]], [point[1]], opts, backward=False)
    return _verdict(res, 0)


def in_k_minus(comp: HenonComposition, point, opts: EscapeOptions = DEFAULT_OPTIONS) -> EscapeVerdict:
    res = _orbit(comp, [point[0]], [point[1]], opts, backward=True)
    return _verdict(res, 0)


def green_plus(comp: HenonComposition, point, opts: EscapeOptions = DEFAULT_OPTIONS) -> float:
    """``G+(q)``; exactly 0 when the forward orbit stays bounded."""
    return float(_orbit(comp, [point[0]], [point[1]], opts, backward=False).green[0])


def green_minus(comp: HenonComposition, point, opts: EscapeOptions = DEFAULT_OPTIONS) -> float:
    """``G-(q)`` from backward iteration; exactly 0 when the backward orbit stays bounded."""
    return float(_orbit(comp, [point[0]], [point[1]], opts, backward=True).green[0])


def green_values(comp: HenonComposition, points, opts: EscapeOptions = DEFAULT_OPTIONS,
                 backward: bool = False) -> np.ndarray:
    pts = check_points(points)
    return _orbit(comp, pts[:, 0], pts[:, 1], opts, backward).green


def green_trace(comp: HenonComposition, point, opts: EscapeOptions = DEFAULT_OPTIONS,
                backward: bool = False) -> list:
    """Successive estimates ``(t, G_t)`` after the orbit enters the escape region."""
    res = _orbit(comp, [point[0]], [point[1]], opts, backward, keep_history=True)
    return [(t, float(g[0])) for t, idx, g in res.history if len(idx)]


# --------------------------------------------------------------------------- slices


@dataclass(frozen=True)
class SliceSpec:
    """Real 2-D slice ``origin + u*axis_u + v*axis_v`` of C^2 sampled on a pixel grid.

    Pixel ``(row, col)`` samples ``u = u_min + (u_max - u_min) * col / width`` and
    ``v = v_max - (v_max - v_min) * row / height``, so doubling the resolution keeps
    every old sample point bit-for-bit.
    """

    origin: tuple = (0j, 0j)
    axis_u: tuple = (0j, 1 + 0j)
    axis_v: tuple = (0j, 1j)
    extent: tuple = (-2.0, 2.0, -2.0, 2.0)
    resolution: tuple = (64, 64)

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(complex(c) for c in self.origin))
        object.__setattr__(self, "axis_u", tuple(complex(c) for c in self.axis_u))
        object.__setattr__(self, "axis_v", tuple(complex(c) for c in self.axis_v))
        object.__setattr__(self, "extent", tuple(float(e) for e in self.extent))
        object.__setattr__(self, "resolution", tuple(int(r) for r in self.resolution))
        if any(len(v) != 2 for v in (self.origin, self.axis_u, self.axis_v)):
            raise ValueError("origin and axes must be points of C^2")
        if len(self.extent) != 4 or len(self.resolution) != 2:
            raise ValueError("extent needs 4 numbers and resolution 2")
        if min(self.resolution) < 1:
            raise ValueError("width and height must be >= 1")
        real = np.array(
            [[z.real for z in self.axis_u] + [z.imag for z in self.axis_u],
             [z.real for z in self.axis_v] + [z.imag for z in self.axis_v]]
        )
        if np.linalg.matrix_rank(real, tol=1e-12) < 2:
            raise ValueError("slice axes must be linearly independent over the reals")

    @classmethod
    def from_dict(cls, data: dict) -> "SliceSpec":
        def pt(v):
            return tuple(_complex_from_json(c) for c in v)

        kwargs = {}
        for key in ("origin", "axis_u", "axis_v"):
            if key in data:
                kwargs[key] = pt(data[key])
        if "extent" in data:
            kwargs["extent"] = tuple(data["extent"])
        if "resolution" in data:
            kwargs["resolution"] = tuple(data["resolution"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        def pt(v):
            return [[z.real, z.imag] for z in v]

        return {
            "origin": pt(self.origin),
            "axis_u": pt(self.axis_u),
            "axis_v": pt(self.axis_v),
            "extent": list(self.extent),
            "resolution": list(self.resolution),
        }

    def row_points(self, row: int):
        width, height = self.resolution
        u_min, u_max, v_min, v_max = self.extent
        cols = np.arange(width)
        u = u_min + (u_max - u_min) * (cols / width)
        v = v_max - (v_max - v_min) * (row / height)
        x = self.origin[0] + u * self.axis_u[0] + v * self.axis_v[0]
        y = self.origin[1] + u * self.axis_u[1] + v * self.axis_v[1]
        return x, y


def _complex_from_json(c) -> complex:
    if isinstance(c, (list, tuple)):
        return complex(float(c[0]), float(c[1]))
    if isinstance(c, str):
        return complex(c.replace(" ", "").replace("i", "j"))
    return complex(c)


def _render_rows(comp, spec, opts, rows):
    out = []
    for r in rows:
        x, y = spec.row_points(r)
        out.append(_orbit(comp, x, y, opts, backward=False).green)
    return out


def render_slice(comp: HenonComposition, spec: SliceSpec, opts: EscapeOptions = DEFAULT_OPTIONS,
                 n_jobs: int = 1) -> np.ndarray:
    """Per-pixel ``G+`` on the slice grid, shape ``(height, width)``.

    Rows are independent; with ``n_jobs > 1`` they are spread over joblib
    workers and reassembled in row order.
    """
    height = spec.resolution[1]
    if n_jobs == 1:
        rows = _render_rows(comp, spec, opts, range(height))
    else:
        from joblib import Parallel, delayed

        chunks = [list(range(height))[k::max(1, abs(n_jobs))] for k in range(max(1, abs(n_jobs)))]
        parts = Parallel(n_jobs=n_jobs)(delayed(_render_rows)(comp, spec, opts, ch) for ch in chunks)
        rows = [None] * height
        for ch, vals in zip(chunks, parts):
            for r, v in zip(ch, vals):
                rows[r] = v
    return np.vstack(rows)


def raster_to_gray(values: np.ndarray) -> np.ndarray:
    """8-bit levels: 0 stays black, positives map to 1..255 by ``log1p`` scaling."""
    vals = np.asarray(values, dtype=float)
    out = np.zeros(vals.shape, dtype=np.uint8)
    pos = vals > 0
    if pos.any():
        s = np.log1p(vals[pos])
        top = float(s.max())
        scaled = 1 + np.floor(254 * s / top + 0.5) if top > 0 else np.ones_like(s)
        out[pos] = np.clip(scaled, 1, 255).astype(np.uint8)
    return out


def write_pgm(values: np.ndarray, path) -> None:
    """Binary P5 graymap of :func:`raster_to_gray`."""
    gray = raster_to_gray(values)
    h, w = gray.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(gray.tobytes())


def write_csv(values: np.ndarray, path) -> None:
    """Row-major decimal values (``repr`` precision, so reruns are byte-identical)."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in np.asarray(values, dtype=float):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    header, _, rest = data.partition(b"\n")
    if header.strip() != b"P5":
        raise ValueError("not a binary PGM")
    dims, _, rest = rest.partition(b"\n")
    w, h = (int(v) for v in dims.split())
    maxval, _, body = rest.partition(b"\n")
    if int(maxval) != 255:
        raise ValueError("only 8-bit PGM is supported")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


# --------------------------------------------------------------------------- estimator


class GreenFunction(BaseEstimator):
    """Escape-rate function ``G+`` (``direction="plus"``) or ``G-`` of a composition.

    ``fit`` takes the composition; ``transform`` maps an ``(m, 2)`` array of
    points to their Green values and ``predict`` flags points whose orbit stays
    bounded (membership in ``K+`` or ``K-``).
    """

    def __init__(self, direction="plus", max_iterations=200, tolerance=1e-10,
                 escape_radius=None, fixed_point_snap=1e-9):
        self.direction = direction
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.escape_radius = escape_radius
        self.fixed_point_snap = fixed_point_snap

    def fit(self, X, y=None):
        if self.direction not in ("plus", "minus"):
            raise ValueError(f"direction must be 'plus' or 'minus', got {self.direction!r}")
        comp = check_composition(X)
        self.options_ = EscapeOptions(
            self.max_iterations, self.escape_radius, self.tolerance, self.fixed_point_snap
        )
        self.composition_ = comp
        self.degree_ = comp.degree
        self.radius_ = self.options_.radius_for(comp, backward=self.direction == "minus")
        return self

    def _orbit(self, X):
        check_is_fitted(self, "options_")
        pts = check_points(X)
        return _orbit(self.composition_, pts[:, 0], pts[:, 1], self.options_,
                      backward=self.direction == "minus")

    def transform(self, X) -> np.ndarray:
        return self._orbit(X).green

    def predict(self, X) -> np.ndarray:
        """True where the orbit is bounded (Green value exactly 0)."""
        return self._orbit(X).escaped_at < 0

    def functional_equation_residual(self, X) -> np.ndarray:
        """``|G(f(q)) - d^(+-1) G(q)|`` for each row of ``X``."""
        pts = check_points(X)
        images = np.array([self.composition_(tuple(p)) for p in pts], dtype=complex)
        factor = self.degree_ if self.direction == "plus" else 1.0 / self.degree_
        return np.abs(self.transform(images) - factor * self.transform(pts))

