"""Types for evolving open sets carved out of an embedded manifold.

A scene couples a fixed background manifold patch M in R^d with a
time-dependent boundary immersion, an optional bulk parametrization of
the open set, and a membership predicate. The three descriptions are
redundant on purpose; the validators cross-check them.

Maps are plain callables on float time and numpy parameter vectors.
Analytic derivatives are optional everywhere except where a check
explicitly requires them; missing ones fall back to central
differences. Non-finite values coming out of any map are hard errors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT_NUMERICS, Numerics
from .errors import EvaluationFailure

Map = Callable[[float, np.ndarray], np.ndarray]


def _as_vector(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1)
    return a


def finite_or_raise(value: np.ndarray | float, what: str):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise EvaluationFailure(f"{what} produced a non-finite value: {arr!r}")
    return value


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned parameter box, possibly with periodic axes.

    Zero-span axes are labels: they carry a fixed coordinate and do not
    count toward the quadrature dimension. A 1-d box with zero span is
    how a single boundary point of an interval is represented.
    """

    lower: np.ndarray
    upper: np.ndarray
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lower", _as_vector(self.lower))
        object.__setattr__(self, "upper", _as_vector(self.upper))
        if self.lower.shape != self.upper.shape:
            raise ValueError("box lower/upper shape mismatch")
        if np.any(self.upper < self.lower):
            raise ValueError("box upper < lower")
        per = tuple(self.periodic) if self.periodic else (False,) * self.dim
        if len(per) != self.dim:
            raise ValueError("periodic flags do not match box dimension")
        object.__setattr__(self, "periodic", per)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def spans(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def active_axes(self) -> np.ndarray:
        return np.flatnonzero(self.spans > 0.0)

    @property
    def volume(self) -> float:
        spans = self.spans[self.active_axes]
        return float(np.prod(spans)) if spans.size else 1.0

    def diameter(self) -> float:
        return float(np.linalg.norm(self.spans))

    def contains(self, u, tol: float = 0.0) -> bool:
        u = _as_vector(u)
        return bool(np.all(u >= self.lower - tol) and np.all(u <= self.upper + tol))

    def clip(self, u) -> np.ndarray:
        return np.clip(_as_vector(u), self.lower, self.upper)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        pts = rng.uniform(size=(n, self.dim))
        return self.lower + pts * self.spans

    def wrapped_distance(self, u, v) -> float:
        """Parameter distance honoring periodic axes."""
        d = np.abs(_as_vector(u) - _as_vector(v))
        for ax, per in enumerate(self.periodic):
            if per and self.spans[ax] > 0:
                d[ax] = min(d[ax], self.spans[ax] - d[ax])
        return float(np.linalg.norm(d))


@dataclass(eq=False)
class ManifoldChart:
    """Single C^1 chart of the background manifold M in R^d.

    Parameters
    ----------
    param_dim, ambient_dim : int
        Intrinsic dimension m >= 1 and ambient dimension d >= m.
    param_domain : Box
        Chart parameter box.
    embed : callable u -> point
        Chart map into R^d.
    embed_jacobian : callable u -> (d, m) array, optional
        Analytic differential; central differences otherwise.
    project : callable x -> u, optional
        Closest-point inverse for ambient points near M. Needed by
        orientation probes; a Gauss-Newton fallback is used if absent.
    """

    param_dim: int
    ambient_dim: int
    param_domain: Box
    embed: Callable[[np.ndarray], np.ndarray]
    embed_jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    project: Callable[[np.ndarray], np.ndarray] | None = None
    flat: bool = False  # identity embedding; lets vector paths skip the chart map
    numerics: Numerics = DEFAULT_NUMERICS

    def __post_init__(self):
        if not (1 <= self.param_dim <= self.ambient_dim):
            raise ValueError("need 1 <= param_dim <= ambient_dim")
        if self.param_domain.dim != self.param_dim:
            raise ValueError("param_domain dimension != param_dim")

    def point(self, u) -> np.ndarray:
        p = _as_vector(self.embed(_as_vector(u)))
        finite_or_raise(p, "manifold embed")
        if p.size != self.ambient_dim:
            raise EvaluationFailure("manifold embed returned wrong dimension")
        return p

    def jacobian(self, u) -> np.ndarray:
        u = _as_vector(u)
        if self.embed_jacobian is not None:
            J = np.asarray(self.embed_jacobian(u), dtype=float)
        else:
            step = self.numerics.geom_step_rel * max(self.param_domain.diameter(), 1.0)
            J = _fd_space_jacobian(lambda v: self.point(v), u, step)
        finite_or_raise(J, "manifold embed jacobian")
        if J.shape != (self.ambient_dim, self.param_dim):
            raise EvaluationFailure("manifold embed jacobian has wrong shape")
        return J

    def to_chart(self, x, seed=None) -> np.ndarray:
        """Chart parameter of an ambient point on or near M."""
        x = _as_vector(x)
        if self.project is not None:
            u = _as_vector(self.project(x))
            finite_or_raise(u, "chart projection")
            return self.param_domain.clip(u)
        return self._gauss_newton_project(x, seed)

    def _gauss_newton_project(self, x: np.ndarray, seed) -> np.ndarray:
        box = self.param_domain
        if seed is None:
            # coarse grid seed, 8 points per axis
            grids = [np.linspace(lo, hi, 8) for lo, hi in zip(box.lower, box.upper)]
            mesh = np.meshgrid(*grids, indexing="ij")
            cand = np.stack([g.ravel() for g in mesh], axis=-1)
            dists = [np.linalg.norm(self.point(u) - x) for u in cand]
            u = cand[int(np.argmin(dists))].copy()
        else:
            u = _as_vector(seed).copy()
        tol = 1e-12 * max(box.diameter(), 1.0)
        for _ in range(60):
            r = self.point(u) - x
            J = self.jacobian(u)
            step, *_ = np.linalg.lstsq(J, -r, rcond=None)
            u = box.clip(u + step)
            if np.linalg.norm(step) < tol:
                break
        return u


def flat_chart(dim: int, box: Box, numerics: Numerics = DEFAULT_NUMERICS) -> ManifoldChart:
    """Identity chart for a flat M = R^m patch."""
    eye = np.eye(dim)
    return ManifoldChart(
        param_dim=dim,
        ambient_dim=dim,
        param_domain=box,
        embed=lambda u: np.array(u, dtype=float),
        embed_jacobian=lambda u: eye,
        project=lambda x: np.array(x, dtype=float),
        flat=True,
        numerics=numerics,
    )


@dataclass(eq=False)
class BoundaryImmersion:
    """Time-dependent immersion of the boundary parameter manifold N.

    charts are boxes covering N; periodic flags express glued seams.
    For boundaries of 1-d domains N is a finite point set, carried as
    zero-span boxes whose coordinate only labels the point.

    smoothness_breaks optionally lists parameter values (first axis,
    1-d N only) where the integrand regularity fails at time t, e.g.
    where the exterior side flips across a self-intersection. Integrals
    split their boxes there.
    """

    param_dim: int
    ambient_dim: int
    charts: tuple[Box, ...]
    map: Map
    time_derivative: Map | None = None
    space_jacobian: Map | None = None
    smoothness_breaks: Callable[[float], Sequence[float]] | None = None
    fd_time_step: float = 1e-6
    numerics: Numerics = DEFAULT_NUMERICS

    def __post_init__(self):
        self.charts = tuple(self.charts)
        if not self.charts:
            raise ValueError("boundary immersion needs at least one chart")
        for c in self.charts:
            if c.dim != max(self.param_dim, 1):
                raise ValueError("boundary chart dimension mismatch")

    @property
    def degenerate(self) -> bool:
        """True when N is a finite point set (boundary of intervals)."""
        return self.param_dim == 0 or all(c.active_axes.size == 0 for c in self.charts)

    def point(self, t: float, z) -> np.ndarray:
        p = _as_vector(self.map(float(t), _as_vector(z)))
        finite_or_raise(p, "boundary map")
        if p.size != self.ambient_dim:
            raise EvaluationFailure("boundary map returned wrong dimension")
        return p

    def velocity(self, t: float, z) -> np.ndarray:
        """Time derivative of the map at fixed parameter.

        This is the boundary velocity; the motion map is never
        inverted.
        """
        z = _as_vector(z)
        if self.time_derivative is not None:
            v = _as_vector(self.time_derivative(float(t), z))
        else:
            h = self.fd_time_step
            v = (self.point(t + h, z) - self.point(t - h, z)) / (2.0 * h)
        finite_or_raise(v, "boundary velocity")
        return v

    def differential(self, t: float, z) -> np.ndarray:
        """Space differential, (d, k) with k the active parameter count."""
        z = _as_vector(z)
        if self.space_jacobian is not None:
            J = np.asarray(self.space_jacobian(float(t), z), dtype=float)
            finite_or_raise(J, "boundary space jacobian")
            return J
        active = self._active_axes()
        if active.size == 0:
            return np.zeros((self.ambient_dim, 0))
        step = self.numerics.geom_step_rel * self._scale()
        cols = []
        for ax in active:
            e = np.zeros_like(z)
            e[ax] = step
            cols.append((self.point(t, z + e) - self.point(t, z - e)) / (2.0 * step))
        return np.stack(cols, axis=1)

    def breaks_at(self, t: float) -> np.ndarray:
        if self.smoothness_breaks is None:
            return np.empty(0)
        return np.sort(_as_vector(self.smoothness_breaks(float(t))))

    def _active_axes(self) -> np.ndarray:
        return self.charts[0].active_axes

    def _scale(self) -> float:
        return max(max(c.diameter() for c in self.charts), 1.0)


@dataclass(eq=False)
class BulkPatch:
    """Time-dependent parametrization of (a piece of) the open set."""

    domain: Box
    map: Map
    jacobian: Map | None = None          # (d, m) space differential
    time_derivative: Map | None = None   # d/dt at fixed parameter
    fd_time_step: float = 1e-6
    numerics: Numerics = DEFAULT_NUMERICS

    def point(self, t: float, u) -> np.ndarray:
        p = _as_vector(self.map(float(t), _as_vector(u)))
        finite_or_raise(p, "bulk map")
        return p

    def differential(self, t: float, u) -> np.ndarray:
        u = _as_vector(u)
        if self.jacobian is not None:
            J = np.asarray(self.jacobian(float(t), u), dtype=float)
            finite_or_raise(J, "bulk jacobian")
            return J
        step = self.numerics.geom_step_rel * max(self.domain.diameter(), 1.0)
        return _fd_space_jacobian(lambda v: self.point(t, v), u, step)

    def velocity(self, t: float, u) -> np.ndarray:
        u = _as_vector(u)
        if self.time_derivative is not None:
            v = _as_vector(self.time_derivative(float(t), u))
            finite_or_raise(v, "bulk time derivative")
            return v
        h = self.fd_time_step
        return (self.point(t + h, u) - self.point(t - h, u)) / (2.0 * h)


def _fd_space_jacobian(f: Callable[[np.ndarray], np.ndarray], u: np.ndarray, step: float) -> np.ndarray:
    cols = []
    for ax in range(u.size):
        e = np.zeros_like(u)
        e[ax] = step
        cols.append((_as_vector(f(u + e)) - _as_vector(f(u - e))) / (2.0 * step))
    return np.stack(cols, axis=1) if cols else np.zeros((0, 0))


@dataclass(eq=False)
class ScalarField:
    """Scalar integrand phi(t, x) with optional analytic derivatives.

    ambient_gradient is only required by the divergence-theorem
    checker, which refuses to fall back to differences.
    """

    name: str
    value: Callable[[float, np.ndarray], float]
    time_partial: Callable[[float, np.ndarray], float] | None = None
    ambient_gradient: Callable[[float, np.ndarray], np.ndarray] | None = None
    fd_time_step: float = 1e-6

    def __call__(self, t: float, x) -> float:
        v = float(self.value(float(t), _as_vector(x)))
        finite_or_raise(v, f"field {self.name}")
        return v

    def dt(self, t: float, x) -> float:
        x = _as_vector(x)
        if self.time_partial is not None:
            v = float(self.time_partial(float(t), x))
        else:
            h = self.fd_time_step
            v = (self(t + h, x) - self(t - h, x)) / (2.0 * h)
        finite_or_raise(v, f"field {self.name} time partial")
        return v

    def grad(self, t: float, x) -> np.ndarray:
        if self.ambient_gradient is None:
            raise EvaluationFailure(
                f"field {self.name} has no ambient gradient; this path needs an analytic one"
            )
        g = _as_vector(self.ambient_gradient(float(t), _as_vector(x)))
        finite_or_raise(g, f"field {self.name} gradient")
        return g

    @staticmethod
    def linear_combination(name: str, alpha: float, f: "ScalarField", beta: float, g: "ScalarField") -> "ScalarField":
        return ScalarField(
            name=name,
            value=lambda t, x: alpha * f(t, x) + beta * g(t, x),
            time_partial=lambda t, x: alpha * f.dt(t, x) + beta * g.dt(t, x),
            ambient_gradient=(
                (lambda t, x: alpha * f.grad(t, x) + beta * g.grad(t, x))
                if f.ambient_gradient is not None and g.ambient_gradient is not None
                else None
            ),
        )


@dataclass(eq=False)
class EvolvingDomain:
    """Evolving open set O_t inside a manifold patch.

    membership may additionally accept an (n, d) array of points and
    return a boolean mask; vector paths try that first and fall back to
    a scalar loop.

    exceptional_set_size counts boundary self-intersection points at
    time t (int, or callable of t). When positive,
    exceptional_preimages must list the parameter values over the
    crossing so samplers can avoid them.
    """

    name: str
    manifold: ManifoldChart
    boundary: BoundaryImmersion
    membership: Callable[[float, np.ndarray], bool] | None = None
    bulk: tuple[BulkPatch, ...] | None = None
    exceptional_set_size: int | Callable[[float], int] = 0
    exceptional_preimages: Callable[[float], np.ndarray] | None = None
    feature_size: float | None = None
    numerics: Numerics = DEFAULT_NUMERICS

    def __post_init__(self):
        if self.bulk is not None:
            self.bulk = tuple(self.bulk)
        if self.manifold.ambient_dim != self.boundary.ambient_dim:
            raise ValueError("manifold / boundary ambient dimensions differ")

    @property
    def ambient_dim(self) -> int:
        return self.manifold.ambient_dim

    @property
    def intrinsic_dim(self) -> int:
        return self.manifold.param_dim

    def probe_offset(self) -> float:
        size = self.feature_size
        if size is None:
            size = self.manifold.param_domain.diameter()
        return self.numerics.probe_rel * size

    def crossing_count(self, t: float) -> int:
        if callable(self.exceptional_set_size):
            return int(self.exceptional_set_size(float(t)))
        return int(self.exceptional_set_size)

    def crossing_preimages(self, t: float) -> np.ndarray:
        """(k, pdim) parameter values sitting over self-intersections."""
        if self.exceptional_preimages is None:
            return np.empty((0, max(self.boundary.param_dim, 1)))
        out = np.asarray(self.exceptional_preimages(float(t)), dtype=float)
        if out.ndim == 1:
            out = out.reshape(-1, 1)
        return out

    def is_inside(self, t: float, x) -> bool:
        if self.membership is None:
            raise EvaluationFailure(f"scene {self.name!r} declares no membership predicate")
        r = self.membership(float(t), _as_vector(x))
        if isinstance(r, np.ndarray):
            r = bool(r.reshape(-1)[0])
        return bool(r)

    def inside_mask(self, t: float, X: np.ndarray) -> np.ndarray:
        """Vectorized membership with a scalar-loop fallback."""
        X = np.asarray(X, dtype=float)
        try:
            mask = self.membership(float(t), X)
            mask = np.asarray(mask)
            if mask.shape == (X.shape[0],):
                return mask.astype(bool)
        except Exception:
            pass
        return np.array([self.is_inside(t, x) for x in X], dtype=bool)


def polyline_winding_number(point, vertices: np.ndarray) -> int:
    """Winding number of a closed polyline around a point.

    Standard crossing-count form; vertices are (n, 2) and the closing
    edge from the last vertex back to the first is implied. Robust for
    points off the polyline, including self-intersecting ones.
    """
    p = _as_vector(point)
    V = np.asarray(vertices, dtype=float)
    wn = 0
    n = V.shape[0]
    for i in range(n):
        a = V[i]
        b = V[(i + 1) % n]
        is_left = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])
        if a[1] <= p[1]:
            if b[1] > p[1] and is_left > 0:
                wn += 1
        elif b[1] <= p[1] and is_left < 0:
            wn -= 1
    return wn


def detect_self_intersections(
    immersion: BoundaryImmersion,
    t: float,
    samples: int = 720,
    tol: float | None = None,
) -> list[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Diagnostic pairwise self-intersection detector for 1-d boundaries.

    Samples each chart, flags well-separated parameter pairs whose
    images nearly coincide, and greedily clusters the hits. Returns a
    list of (z1, z2, midpoint) triples. Heuristic by construction; the
    declared exceptional set stays authoritative.
    """
    if immersion.degenerate or immersion.param_dim != 1:
        return []
    zs = []
    for chart in immersion.charts:
        lo, hi = chart.lower[0], chart.upper[0]
        grid = np.linspace(lo, hi, samples, endpoint=not chart.periodic[0])
        zs.extend(grid)
    zs = np.array(zs)
    pts = np.array([immersion.point(t, np.array([z])) for z in zs])
    scale = float(np.ptp(pts, axis=0).max())
    if tol is None:
        tol = 2e-3 * max(scale, 1e-12)
    sep = 8 * (zs.max() - zs.min()) / samples
    hits = []
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    ii, jj = np.where(d2 < tol * tol)
    span = zs.max() - zs.min()
    for i, j in zip(ii, jj):
        if j <= i:
            continue
        dz = abs(zs[j] - zs[i])
        dz = min(dz, span - dz)  # charts are circles here in practice
        if dz < sep:
            continue
        hits.append((i, j))
    found: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    for i, j in hits:
        mid = 0.5 * (pts[i] + pts[j])
        if any(np.linalg.norm(mid - f[2]) < 10 * tol for f in found):
            continue
        found.append((np.array([zs[i]]), np.array([zs[j]]), mid))
    return found
