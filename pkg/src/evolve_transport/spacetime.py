"""Space-time geometry of the swept region in R x M.

The moving open set sweeps a region of the product manifold whose
essential boundary splits into the bottom and top time slices plus the
lateral wall traced by the moving boundary. This module carries the
wall's frames and exterior normal, two independent Jacobian routes for
wall integrals, and a divergence-theorem checker over the swept
region. Divergences are computed intrinsically through parametrization
Gram matrices; vector fields must bring analytic ambient Jacobians.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import Box, EvolvingDomain, ScalarField, _as_vector, finite_or_raise
from .errors import EvaluationFailure
from .geometry import _exterior_normal, immersion_jacobian
from .quadrature import GAUSS_TENSOR, IntegralEstimate, QuadratureRule, _gauss_sum, integrate_boundary, integrate_domain

BOTTOM = "bottom"
LATERAL = "lateral"
TOP = "top"


def time_axis_vector(ambient_dim: int) -> np.ndarray:
    """Unit vector along the time factor of R x R^d."""
    e = np.zeros(1 + ambient_dim)
    e[0] = 1.0
    return e


@dataclass(frozen=True, eq=False)
class SpaceTimeFrame:
    """Boundary part tag with a point and exterior unit normal in R x R^d."""

    part: str
    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        if self.part not in (BOTTOM, LATERAL, TOP):
            raise ValueError(f"unknown space-time boundary part {self.part!r}")
        n = np.linalg.norm(self.normal)
        if abs(n - 1.0) > 1e-8:
            raise ValueError(f"frame normal is not unit ({n})")
        if self.part in (BOTTOM, TOP):
            want = -1.0 if self.part == BOTTOM else 1.0
            spatial = float(np.linalg.norm(self.normal[1:]))
            if abs(self.normal[0] - want) > 1e-10 or spatial > 1e-10:
                raise ValueError(f"{self.part} normal must be purely time-like")


@dataclass(eq=False)
class SpaceTimeVectorField:
    """Vector field on R x R^d with an analytic ambient Jacobian.

    value(s, x) returns the (1+d,) components, time first. jacobian
    returns the (1+d, 1+d) matrix of partials with respect to (s, x).
    There is no finite-difference fallback here on purpose.
    """

    name: str
    value: Callable[[float, np.ndarray], np.ndarray]
    jacobian: Callable[[float, np.ndarray], np.ndarray]

    def at(self, s: float, x) -> np.ndarray:
        v = _as_vector(self.value(float(s), _as_vector(x)))
        finite_or_raise(v, f"vector field {self.name}")
        return v

    def jac(self, s: float, x) -> np.ndarray:
        J = np.asarray(self.jacobian(float(s), _as_vector(x)), dtype=float)
        finite_or_raise(J, f"vector field {self.name} jacobian")
        return J


def time_like_extension(field: ScalarField) -> SpaceTimeVectorField:
    """Lift a scalar field to the purely time-like field (phi, 0).

    Its intrinsic space-time divergence is the time partial of the
    scalar, which is what couples the divergence theorem on the swept
    region to the transport identity.
    """
    def value(s, x):
        out = np.zeros(1 + x.size)
        out[0] = field(s, x)
        return out

    def jacobian(s, x):
        d = x.size
        J = np.zeros((1 + d, 1 + d))
        J[0, 0] = field.dt(s, x)
        J[0, 1:] = field.grad(s, x)
        return J

    return SpaceTimeVectorField(name=f"({field.name})*time_axis", value=value, jacobian=jacobian)


def spacetime_immersion(domain: EvolvingDomain, s: float, z) -> np.ndarray:
    """Point (s, f_s(z)) on the lateral wall."""
    return np.concatenate([[float(s)], domain.boundary.point(s, z)])


def spacetime_differential(domain: EvolvingDomain, s: float, z) -> np.ndarray:
    """Differential of (s, z) -> (s, f_s(z)), shape (1+d, 1+k)."""
    bnd = domain.boundary
    v = bnd.velocity(s, z)
    A = bnd.differential(s, z)
    d = bnd.ambient_dim
    out = np.zeros((1 + d, 1 + A.shape[1]))
    out[0, 0] = 1.0
    out[1:, 0] = v
    out[1:, 1:] = A
    return out


def lateral_normal(domain: EvolvingDomain, s: float, z) -> np.ndarray:
    """Exterior unit normal of the swept region along the lateral wall.

    Equals (-vn, n) / sqrt(1 + vn^2) with n the spatial exterior
    normal and vn the normal speed: purely spatial where the boundary
    stalls, tilting against time where it moves.
    """
    bnd = domain.boundary
    n = _exterior_normal(domain, bnd, s, z)
    vn = float(bnd.velocity(s, z) @ n)
    w = np.concatenate([[-vn], n]) / math.sqrt(1.0 + vn * vn)
    return w


def lateral_frame(domain: EvolvingDomain, s: float, z) -> SpaceTimeFrame:
    return SpaceTimeFrame(
        part=LATERAL,
        point=spacetime_immersion(domain, s, z),
        normal=lateral_normal(domain, s, z),
    )


def bottom_frame(t0: float, x) -> SpaceTimeFrame:
    x = _as_vector(x)
    return SpaceTimeFrame(
        part=BOTTOM,
        point=np.concatenate([[float(t0)], x]),
        normal=-time_axis_vector(x.size),
    )


def top_frame(t1: float, x) -> SpaceTimeFrame:
    x = _as_vector(x)
    return SpaceTimeFrame(
        part=TOP,
        point=np.concatenate([[float(t1)], x]),
        normal=time_axis_vector(x.size),
    )


def spacetime_jacobian(domain: EvolvingDomain, s: float, z) -> tuple[float, float]:
    """Wall area factor by two independent routes.

    direct comes from the full space-time differential; factored is
    sqrt(1 + vn^2) times the spatial boundary area factor. The two
    agree identically because the tangential part of the boundary
    velocity cancels out of the Gram determinant.
    """
    rank_tol = domain.numerics.rank_tol
    direct = immersion_jacobian(spacetime_differential(domain, s, z), rank_tol=rank_tol)
    bnd = domain.boundary
    n = _exterior_normal(domain, bnd, s, z)
    vn = float(bnd.velocity(s, z) @ n)
    J_space = immersion_jacobian(bnd.differential(s, z), rank_tol=rank_tol)
    factored = math.sqrt(1.0 + vn * vn) * J_space
    return direct, factored


def _spacetime_boxes(domain: EvolvingDomain, t0: float, t1: float) -> list[Box]:
    out = []
    for chart in domain.boundary.charts:
        lower = np.concatenate([[t0], chart.lower])
        upper = np.concatenate([[t1], chart.upper])
        out.append(Box(lower, upper, (False,) + tuple(chart.periodic)))
    return out


def lateral_integral_direct(
    domain: EvolvingDomain,
    t0: float,
    t1: float,
    field: ScalarField,
    rule: QuadratureRule = QuadratureRule(),
) -> IntegralEstimate:
    """Wall integral via the space-time area formula in one shot.

    Quadrature runs over time x parameter boxes with the direct
    Jacobian route; no normals are needed, and the integrand stays
    smooth even where the exterior side flips.
    """
    if rule.kind != GAUSS_TENSOR:
        raise EvaluationFailure("lateral integrals only have a gauss path")
    boxes = _spacetime_boxes(domain, t0, t1)

    def node_value(w: np.ndarray, chart: Box) -> float:
        s, z = float(w[0]), w[1:]
        p = domain.boundary.point(s, z)
        J = immersion_jacobian(spacetime_differential(domain, s, z), rank_tol=domain.numerics.rank_tol)
        return field(s, p) * J

    value = _gauss_sum(boxes, rule.order_or_count, node_value)
    coarse = _gauss_sum(boxes, max(rule.order_or_count // 2, 2), node_value)
    return IntegralEstimate(value=value, error_indicator=abs(value - coarse))


def lateral_integral_iterated(
    domain: EvolvingDomain,
    t0: float,
    t1: float,
    field: ScalarField,
    rule: QuadratureRule = QuadratureRule(),
) -> IntegralEstimate:
    """Wall integral as a time integral of weighted boundary integrals.

    The inner weight sqrt(1 + vn^2) is the factored Jacobian route, so
    agreement with the direct form checks the factorization wholesale.
    """
    if rule.kind != GAUSS_TENSOR:
        raise EvaluationFailure("lateral integrals only have a gauss path")

    def at_order(order: int) -> float:
        time_box = Box(np.array([t0]), np.array([t1]))

        def outer_value(w: np.ndarray, chart: Box) -> float:
            s = float(w[0])
            inner = integrate_boundary(
                domain,
                s,
                lambda tt, z, p, n, vn: field(tt, p) * math.sqrt(1.0 + vn * vn),
                rule.with_order(order),
            )
            return inner.value

        return _gauss_sum([time_box], order, outer_value)

    value = at_order(rule.order_or_count)
    coarse = at_order(max(rule.order_or_count // 2, 2))
    return IntegralEstimate(value=value, error_indicator=abs(value - coarse))


@dataclass(frozen=True)
class DivergenceReport:
    """Both sides of the divergence theorem on the swept region."""

    field: str
    t0: float
    t1: float
    volume: float
    bottom: float
    lateral: float
    top: float

    @property
    def surface(self) -> float:
        return self.bottom + self.lateral + self.top

    @property
    def residual(self) -> float:
        return abs(self.volume - self.surface)


def _refine_rule(rule: QuadratureRule, probes, cap: int = 8,
                 target: float = 1e-10) -> QuadratureRule:
    """Double composite panels until every probe value stops moving.

    The probe at p panels is compared against the same probe at 2p; the
    half-order indicator is far too pessimistic here (it reports the
    order-8 error of an order-16 rule), so panel sensitivity at full
    order is what decides.
    """
    out = rule
    while out.panels < cap:
        doubled = out.with_panels(2 * out.panels)
        settled = True
        for probe in probes:
            coarse = probe(out).value
            fine = probe(doubled).value
            if abs(coarse - fine) > target * (1.0 + abs(fine)):
                settled = False
                break
        if settled:
            break
        out = doubled
    return out


def divergence_parts(
    domain: EvolvingDomain,
    t0: float,
    t1: float,
    afield: SpaceTimeVectorField,
    rule: QuadratureRule = QuadratureRule(),
) -> DivergenceReport:
    """Evaluate both sides of the divergence theorem on the swept region.

    The volume side integrates the intrinsic divergence, computed as
    the Gram-weighted trace of the ambient Jacobian restricted to the
    space-time tangent of the bulk parametrization. The surface side
    sums bottom and top slices against the time axis and the lateral
    wall against its exterior normal.
    """
    if not domain.bulk:
        raise EvaluationFailure(f"scene {domain.name!r} has no bulk patches for the volume side")

    def make_volume_value(patch):
        def node_value(w: np.ndarray, chart: Box) -> float:
            s, u = float(w[0]), w[1:]
            x = patch.point(s, u)
            dB = patch.differential(s, u)
            d = x.size
            T = np.zeros((1 + d, 1 + dB.shape[1]))
            T[0, 0] = 1.0
            T[1:, 0] = patch.velocity(s, u)
            T[1:, 1:] = dB
            g = T.T @ T
            Da = afield.jac(s, x)
            M = T.T @ (Da @ T)
            div = float(np.trace(np.linalg.solve(g, M)))
            return div * math.sqrt(max(float(np.linalg.det(g)), 0.0))
        return node_value

    a_time = lambda t, x: afield.at(t, x)[0]  # noqa: E731
    mid = 0.5 * (t0 + t1)

    # Integrands here can oscillate harder than one panel of the rule
    # resolves (a wavy boundary radius does this, on both the boundary
    # and the bulk patches it bounds); let the half-order indicator at
    # the midpoint slice pick a composite refinement per side before
    # paying for the full time sweep.
    bulk_rule = _refine_rule(rule, [
        lambda r: integrate_domain(domain, mid, a_time, r),
    ])

    time_box = Box(np.array([t0]), np.array([t1]))

    patch_values = [(p.domain, make_volume_value(p)) for p in domain.bulk]

    def volume_slice(w: np.ndarray, chart: Box) -> float:
        s = float(w[0])
        return math.fsum(
            _gauss_sum([box], rule.order_or_count,
                       lambda u, c, nv=nv: nv(np.concatenate([[s], u]), c),
                       bulk_rule.panels)
            for box, nv in patch_values
        )

    volume = _gauss_sum([time_box], rule.order_or_count, volume_slice)

    bottom = -integrate_domain(domain, t0, a_time, bulk_rule).value
    top = integrate_domain(domain, t1, a_time, bulk_rule).value

    def integrand(tt, z, p, n, vn):
        a = afield.at(tt, p)
        wvec = np.concatenate([[-vn], n]) / math.sqrt(1.0 + vn * vn)
        return float(a @ wvec) * math.sqrt(1.0 + vn * vn)

    flux_rule = rule
    if not domain.boundary.degenerate:
        flux_rule = _refine_rule(rule, [
            lambda r: integrate_boundary(domain, mid, integrand, r),
        ])

    def lateral_outer(w: np.ndarray, chart: Box) -> float:
        s = float(w[0])
        return integrate_boundary(domain, s, integrand, flux_rule).value

    lateral = _gauss_sum([time_box], rule.order_or_count, lateral_outer)

    return DivergenceReport(
        field=afield.name, t0=t0, t1=t1,
        volume=volume, bottom=bottom, lateral=lateral, top=top,
    )


def divergence_theorem_residual(
    domain: EvolvingDomain,
    t0: float,
    t1: float,
    afield: SpaceTimeVectorField,
    rule: QuadratureRule = QuadratureRule(),
) -> float:
    """Absolute gap between the volume and surface sides."""
    return divergence_parts(domain, t0, t1, afield, rule).residual
