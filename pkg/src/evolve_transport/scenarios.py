"""Built-in scene registry with closed-form references.

Eight scenes spanning the cases the lab cares about: static and moving
intervals on the line, a shrinking disk and a translating ellipse in
the plane, an expanding ball in 3-space, a growing polar cap on the
unit sphere, a wobbling patch on a torus, and a figure-eight whose
boundary stays self-intersecting across its whole window.

Every scene supplies three redundant descriptions (boundary immersion,
bulk patches, membership predicate) plus analytic derivatives, and
closed-form bulk integrals where they exist. The validators lean on
the redundancy; the quadratures only need one description each.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .config import ConfigError, DEFAULT_NUMERICS, Numerics
from .domain import (
    Box,
    BoundaryImmersion,
    BulkPatch,
    EvolvingDomain,
    ManifoldChart,
    ScalarField,
    flat_chart,
)
from .spacetime import SpaceTimeVectorField
from .transport import Reference, Scenario, moving_interval_domain

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# scalar field library

def one_field() -> ScalarField:
    return ScalarField(
        name="one",
        value=lambda t, x: 1.0,
        time_partial=lambda t, x: 0.0,
        ambient_gradient=lambda t, x: np.zeros_like(x),
    )


def coordinate_field(axis: int) -> ScalarField:
    def grad(t, x):
        g = np.zeros_like(x)
        g[axis] = 1.0
        return g

    return ScalarField(
        name=f"x{axis}",
        value=lambda t, x: float(x[axis]),
        time_partial=lambda t, x: 0.0,
        ambient_gradient=grad,
    )


def x0_sq_field() -> ScalarField:
    def grad(t, x):
        g = np.zeros_like(x)
        g[0] = 2.0 * x[0]
        return g

    return ScalarField(
        name="x0_sq",
        value=lambda t, x: float(x[0]) ** 2,
        time_partial=lambda t, x: 0.0,
        ambient_gradient=grad,
    )


def one_plus_x0_sq_field() -> ScalarField:
    def grad(t, x):
        g = np.zeros_like(x)
        g[0] = 2.0 * x[0]
        return g

    return ScalarField(
        name="one_plus_x0_sq",
        value=lambda t, x: 1.0 + float(x[0]) ** 2,
        time_partial=lambda t, x: 0.0,
        ambient_gradient=grad,
    )


def ramp_field() -> ScalarField:
    """t times the first coordinate; the simplest time-dependent field."""
    def grad(t, x):
        g = np.zeros_like(x)
        g[0] = t
        return g

    return ScalarField(
        name="ramp",
        value=lambda t, x: t * float(x[0]),
        time_partial=lambda t, x: float(x[0]),
        ambient_gradient=grad,
    )


def r2_field() -> ScalarField:
    return ScalarField(
        name="r2",
        value=lambda t, x: float(x @ x),
        time_partial=lambda t, x: 0.0,
        ambient_gradient=lambda t, x: 2.0 * x,
    )


def _field_table(*fields: ScalarField) -> dict[str, ScalarField]:
    return {f.name: f for f in fields}


# ---------------------------------------------------------------------------
# interval scenes

def static_interval(numerics: Numerics = DEFAULT_NUMERICS, tolerance: float | None = None) -> Scenario:
    """Fixed interval (-1/2, 3/2): every boundary speed is zero."""
    a0, b0 = -0.5, 1.5
    domain = moving_interval_domain(
        lambda t: a0, lambda t: b0,
        box=Box(np.array([-2.0]), np.array([3.0])),
        a_dot=lambda t: 0.0, b_dot=lambda t: 0.0,
        name="static_interval", numerics=numerics,
    )
    # int x over (a0, b0) = (b0^2 - a0^2)/2 = 1
    refs = {
        "one": Reference(lambda t: b0 - a0, lambda t: 0.0),
        "x0": Reference(lambda t: 1.0, lambda t: 0.0),
        "ramp": Reference(lambda t: t, lambda t: 1.0),
    }
    return Scenario(
        name="static_interval",
        domain=domain,
        window=(-1.0, 1.0),
        fields=_field_table(one_field(), coordinate_field(0), ramp_field()),
        default_fields=("one", "x0", "ramp"),
        tolerance=1e-6 if tolerance is None else tolerance,
        references=refs,
    )


def leibniz_interval(numerics: Numerics = DEFAULT_NUMERICS, tolerance: float | None = None) -> Scenario:
    """Interval (t, 2 + t^2): both endpoints move at different rates."""
    a = lambda t: t
    b = lambda t: 2.0 + t * t
    domain = moving_interval_domain(
        a, b,
        box=Box(np.array([-1.0]), np.array([7.0])),
        a_dot=lambda t: 1.0, b_dot=lambda t: 2.0 * t,
        name="leibniz_interval", numerics=numerics,
    )

    def i_x0(t):
        return ((2.0 + t * t) ** 2 - t * t) / 2.0

    def di_x0(t):
        return 3.0 * t + 2.0 * t ** 3

    refs = {
        "one": Reference(lambda t: 2.0 + t * t - t, lambda t: 2.0 * t - 1.0),
        "x0": Reference(i_x0, di_x0),
        "ramp": Reference(lambda t: t * i_x0(t), lambda t: i_x0(t) + t * di_x0(t)),
    }
    alt = _swapped_labels_boundary(a, b, numerics)
    return Scenario(
        name="leibniz_interval",
        domain=domain,
        window=(0.0, 2.0),
        fields=_field_table(one_field(), coordinate_field(0), ramp_field()),
        default_fields=("one", "x0", "ramp"),
        tolerance=1e-6 if tolerance is None else tolerance,
        references=refs,
        alt_boundary=alt,
    )


def _swapped_labels_boundary(a, b, numerics: Numerics) -> BoundaryImmersion:
    """Same two endpoints, labels exchanged: 0 now marks the right one."""
    return BoundaryImmersion(
        param_dim=0,
        ambient_dim=1,
        charts=(Box(np.array([0.0]), np.array([0.0])), Box(np.array([1.0]), np.array([1.0]))),
        map=lambda t, z: np.array([a(t) if z[0] > 0.5 else b(t)]),
        numerics=numerics,
    )


# ---------------------------------------------------------------------------
# planar scenes

def shrinking_disk(numerics: Numerics = DEFAULT_NUMERICS, tolerance: float | None = None,
                   rate: float = -0.1) -> Scenario:
    """Origin-centered disk with radius r(t) = 1 + rate*t."""
    r = lambda t: 1.0 + rate * t

    def boundary_map(t, z):
        th = z[0]
        return r(t) * np.array([math.cos(th), math.sin(th)])

    boundary = BoundaryImmersion(
        param_dim=1, ambient_dim=2,
        charts=(Box(np.array([0.0]), np.array([TWO_PI]), (True,)),),
        map=boundary_map,
        time_derivative=lambda t, z: rate * np.array([math.cos(z[0]), math.sin(z[0])]),
        space_jacobian=lambda t, z: r(t) * np.array([[-math.sin(z[0])], [math.cos(z[0])]]),
        numerics=numerics,
    )
    bulk = BulkPatch(
        domain=Box(np.array([0.0, 0.0]), np.array([1.0, TWO_PI]), (False, True)),
        map=lambda t, u: r(t) * u[0] * np.array([math.cos(u[1]), math.sin(u[1])]),
        jacobian=lambda t, u: r(t) * np.array(
            [[math.cos(u[1]), -u[0] * math.sin(u[1])],
             [math.sin(u[1]), u[0] * math.cos(u[1])]]
        ),
        time_derivative=lambda t, u: rate * u[0] * np.array([math.cos(u[1]), math.sin(u[1])]),
        numerics=numerics,
    )

    def membership(t, x):
        rr = r(t) ** 2
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return np.einsum("ij,ij->i", x, x) < rr
        return float(x @ x) < rr

    domain = EvolvingDomain(
        name="shrinking_disk",
        manifold=flat_chart(2, Box(np.array([-1.5, -1.5]), np.array([1.5, 1.5])), numerics),
        boundary=boundary,
        membership=membership,
        bulk=(bulk,),
        feature_size=1.0,
        numerics=numerics,
    )
    refs = {
        "one": Reference(lambda t: math.pi * r(t) ** 2,
                         lambda t: 2.0 * math.pi * r(t) * rate),
        "x0": Reference(lambda t: 0.0, lambda t: 0.0),
        # int (1 + x^2) = pi r^2 + pi r^4 / 4; cubic-in-t reference keeps
        # the fd sweep's quadratic error visible
        "one_plus_x0_sq": Reference(
            lambda t: math.pi * r(t) ** 2 + math.pi * r(t) ** 4 / 4.0,
            lambda t: rate * (2.0 * math.pi * r(t) + math.pi * r(t) ** 3),
        ),
    }
    alt = _drifting_circle_boundary(r, rate, numerics)
    return Scenario(
        name="shrinking_disk",
        domain=domain,
        window=(-1.0, 1.0),
        fields=_field_table(one_field(), coordinate_field(0), one_plus_x0_sq_field()),
        default_fields=("one", "x0", "one_plus_x0_sq"),
        tolerance=1e-6 if tolerance is None else tolerance,
        references=refs,
        alt_boundary=alt,
    )


def _drifting_circle_boundary(r, rate: float, numerics: Numerics) -> BoundaryImmersion:
    """Same circle as shrinking_disk traced with tangential drift.

    theta = psi + 0.3 sin psi + 0.25 t keeps dtheta/dpsi positive, so
    the image is unchanged while the parametrized velocity gains a
    tangential part that the normal speed must not see.
    """
    def theta(t, psi):
        return psi + 0.3 * math.sin(psi) + 0.25 * t

    def amap(t, z):
        th = theta(t, z[0])
        return r(t) * np.array([math.cos(th), math.sin(th)])

    def avel(t, z):
        th = theta(t, z[0])
        radial = rate * np.array([math.cos(th), math.sin(th)])
        tangential = 0.25 * r(t) * np.array([-math.sin(th), math.cos(th)])
        return radial + tangential

    def ajac(t, z):
        th = theta(t, z[0])
        dth = 1.0 + 0.3 * math.cos(z[0])
        return r(t) * dth * np.array([[-math.sin(th)], [math.cos(th)]])

    return BoundaryImmersion(
        param_dim=1, ambient_dim=2,
        charts=(Box(np.array([0.0]), np.array([TWO_PI]), (True,)),),
        map=amap, time_derivative=avel, space_jacobian=ajac,
        numerics=numerics,
    )


def translating_ellipse(numerics: Numerics = DEFAULT_NUMERICS, tolerance: float | None = None) -> Scenario:
    """Rigid ellipse drifting with velocity (0.2, -0.1)."""
    A, B = 1.2, 0.7
    cvel = np.array([0.2, -0.1])
    center = lambda t: cvel * t

    boundary = BoundaryImmersion(
        param_dim=1, ambient_dim=2,
        charts=(Box(np.array([0.0]), np.array([TWO_PI]), (True,)),),
        map=lambda t, z: center(t) + np.array([A * math.cos(z[0]), B * math.sin(z[0])]),
        time_derivative=lambda t, z: cvel.copy(),
        space_jacobian=lambda t, z: np.array([[-A * math.sin(z[0])], [B * math.cos(z[0])]]),
        numerics=numerics,
    )
    bulk = BulkPatch(
        domain=Box(np.array([0.0, 0.0]), np.array([1.0, TWO_PI]), (False, True)),
        map=lambda t, u: center(t) + u[0] * np.array([A * math.cos(u[1]), B * math.sin(u[1])]),
        jacobian=lambda t, u: np.array(
            [[A * math.cos(u[1]), -u[0] * A * math.sin(u[1])],
             [B * math.sin(u[1]), u[0] * B * math.cos(u[1])]]
        ),
        time_derivative=lambda t, u: cvel.copy(),
        numerics=numerics,
    )

    def membership(t, x):
        c = center(t)
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return ((x[:, 0] - c[0]) / A) ** 2 + ((x[:, 1] - c[1]) / B) ** 2 < 1.0
        return ((x[0] - c[0]) / A) ** 2 + ((x[1] - c[1]) / B) ** 2 < 1.0

    domain = EvolvingDomain(
        name="translating_ellipse",
        manifold=flat_chart(2, Box(np.array([-2.0, -2.0]), np.array([2.0, 2.0])), numerics),
        boundary=boundary,
        membership=membership,
        bulk=(bulk,),
        feature_size=B,
        numerics=numerics,
    )
    area = math.pi * A * B
    refs = {
        "one": Reference(lambda t: area, lambda t: 0.0),
        "x0": Reference(lambda t: area * 0.2 * t, lambda t: area * 0.2),
        "x1": Reference(lambda t: area * (-0.1) * t, lambda t: area * (-0.1)),
    }
    return Scenario(
        name="translating_ellipse",
        domain=domain,
        window=(-1.0, 1.0),
        fields=_field_table(one_field(), coordinate_field(0), coordinate_field(1)),
        default_fields=("one", "x0", "x1"),
        tolerance=1e-6 if tolerance is None else tolerance,
        references=refs,
    )


# ---------------------------------------------------------------------------
# the expanding ball in 3-space

def _sphere_dirs(th: float, ps: float) -> np.ndarray:
    return np.array([
        math.sin(th) * math.cos(ps),
        math.sin(th) * math.sin(ps),
        math.cos(th),
    ])


def _sphere_dth(th: float, ps: float) -> np.ndarray:
    return np.array([
        math.cos(th) * math.cos(ps),
        math.cos(th) * math.sin(ps),
        -math.sin(th),
    ])


def _sphere_dps(th: float, ps: float) -> np.ndarray:
    return np.array([-math.sin(th) * math.sin(ps), math.sin(th) * math.cos(ps), 0.0])


def expanding_ball(numerics: Numerics = DEFAULT_NUMERICS, tolerance: float | None = None,
                   rate: float = 1.0) -> Scenario:
    """Origin-centered ball in R^3 with radius 1 + rate*t."""
    r = lambda t: 1.0 + rate * t

    boundary = BoundaryImmersion(
        param_dim=2, ambient_dim=3,
        charts=(Box(np.array([0.0, 0.0]), np.array([math.pi, TWO_PI]), (False, True)),),
        map=lambda t, z: r(t) * _sphere_dirs(z[0], z[1]),
        time_derivative=lambda t, z: rate * _sphere_dirs(z[0], z[1]),
        space_jacobian=lambda t, z: r(t) * np.stack(
            [_sphere_dth(z[0], z[1]), _sphere_dps(z[0], z[1])], axis=1
        ),
        numerics=numerics,
    )
    bulk = BulkPatch(
        domain=Box(np.array([0.0, 0.0, 0.0]), np.array([1.0, math.pi, TWO_PI]),
                   (False, False, True)),
        map=lambda t, u: r(t) * u[0] * _sphere_dirs(u[1], u[2]),
        jacobian=lambda t, u: r(t) * np.stack(
            [_sphere_dirs(u[1], u[2]),
             u[0] * _sphere_dth(u[1], u[2]),
             u[0] * _sphere_dps(u[1], u[2])], axis=1
        ),
        time_derivative=lambda t, u: rate * u[0] * _sphere_dirs(u[1], u[2]),
        numerics=numerics,
    )

    def membership(t, x):
        rr = r(t) ** 2
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return np.einsum("ij,ij->i", x, x) < rr
        return float(x @ x) < rr

    domain = EvolvingDomain(
        name="expanding_ball",
        manifold=flat_chart(3, Box(-2.5 * np.ones(3), 2.5 * np.ones(3)), numerics),
        boundary=boundary,
        membership=membership,
        bulk=(bulk,),
        feature_size=1.0,
        numerics=numerics,
    )
    refs = {
        "one": Reference(lambda t: 4.0 * math.pi * r(t) ** 3 / 3.0,
                         lambda t: 4.0 * math.pi * r(t) ** 2 * rate),
        # int x0^2 over the ball = 4 pi r^5 / 15
        "x0_sq": Reference(lambda t: 4.0 * math.pi * r(t) ** 5 / 15.0,
                           lambda t: 4.0 * math.pi * r(t) ** 4 / 3.0 * rate),
        "x2": Reference(lambda t: 0.0, lambda t: 0.0),
    }
    return Scenario(
        name="expanding_ball",
        domain=domain,
        window=(-0.5, 1.0),
        fields=_field_table(one_field(), x0_sq_field(), coordinate_field(2)),
        default_fields=("one", "x0_sq", "x2"),
        tolerance=1e-6 if tolerance is None else tolerance,
        references=refs,
    )


# ---------------------------------------------------------------------------
# curved background manifolds

def unit_sphere_chart(numerics: Numerics = DEFAULT_NUMERICS) -> ManifoldChart:
    def project(x):
        nx = float(np.linalg.norm(x))
        th = math.acos(max(-1.0, min(1.0, x[2] / nx)))
        ps = math.atan2(x[1], x[0]) % TWO_PI
        return np.array([th, ps])

    return ManifoldChart(
        param_dim=2, ambient_dim=3,
        param_domain=Box(np.array([0.0, 0.0]), np.array([math.pi, TWO_PI]), (False, True)),
        embed=lambda u: _sphere_dirs(u[0], u[1]),
        embed_jacobian=lambda u: np.stack([_sphere_dth(u[0], u[1]), _sphere_dps(u[0], u[1])], axis=1),
        project=project,
        numerics=numerics,
    )


def spherical_cap(numerics: Numerics = DEFAULT_NUMERICS, tolerance: float | None = None) -> Scenario:
    """Polar cap on the unit sphere with opening angle pi/4 + 0.1 t."""
    theta0 = lambda t: math.pi / 4.0 + 0.1 * t

    boundary = BoundaryImmersion(
        param_dim=1, ambient_dim=3,
        charts=(Box(np.array([0.0]), np.array([TWO_PI]), (True,)),),
        map=lambda t, z: _sphere_dirs(theta0(t), z[0]),
        time_derivative=lambda t, z: 0.1 * _sphere_dth(theta0(t), z[0]),
        space_jacobian=lambda t, z: _sphere_dps(theta0(t), z[0]).reshape(3, 1),
        numerics=numerics,
    )
    bulk = BulkPatch(
        domain=Box(np.array([0.0, 0.0]), np.array([1.0, TWO_PI]), (False, True)),
        map=lambda t, u: _sphere_dirs(u[0] * theta0(t), u[1]),
        jacobian=lambda t, u: np.stack(
            [theta0(t) * _sphere_dth(u[0] * theta0(t), u[1]),
             _sphere_dps(u[0] * theta0(t), u[1])], axis=1
        ),
        time_derivative=lambda t, u: 0.1 * u[0] * _sphere_dth(u[0] * theta0(t), u[1]),
        numerics=numerics,
    )

    def membership(t, x):
        cos0 = math.cos(theta0(t))
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return x[:, 2] / np.linalg.norm(x, axis=1) > cos0
        return float(x[2]) / float(np.linalg.norm(x)) > cos0

    domain = EvolvingDomain(
        name="spherical_cap",
        manifold=unit_sphere_chart(numerics),
        boundary=boundary,
        membership=membership,
        bulk=(bulk,),
        feature_size=0.7,
        numerics=numerics,
    )
    refs = {
        "one": Reference(lambda t: TWO_PI * (1.0 - math.cos(theta0(t))),
                         lambda t: 0.2 * math.pi * math.sin(theta0(t))),
        "x0": Reference(lambda t: 0.0, lambda t: 0.0),
        # int x2 over the cap = pi sin^2 theta0
        "x2": Reference(lambda t: math.pi * math.sin(theta0(t)) ** 2,
                        lambda t: 0.1 * math.pi * math.sin(2.0 * theta0(t))),
    }
    return Scenario(
        name="spherical_cap",
        domain=domain,
        window=(-1.0, 1.0),
        fields=_field_table(one_field(), coordinate_field(0), coordinate_field(2)),
        default_fields=("one", "x0", "x2"),
        tolerance=1e-6 if tolerance is None else tolerance,
        references=refs,
    )


TORUS_MAJOR = 2.0
TORUS_MINOR = 0.75


def torus_chart(numerics: Numerics = DEFAULT_NUMERICS) -> ManifoldChart:
    R, r = TORUS_MAJOR, TORUS_MINOR

    def embed(u):
        cu, su = math.cos(u[0]), math.sin(u[0])
        cv, sv = math.cos(u[1]), math.sin(u[1])
        ring = R + r * cv
        return np.array([ring * cu, ring * su, r * sv])

    def jac(u):
        cu, su = math.cos(u[0]), math.sin(u[0])
        cv, sv = math.cos(u[1]), math.sin(u[1])
        ring = R + r * cv
        return np.array([
            [-ring * su, -r * sv * cu],
            [ring * cu, -r * sv * su],
            [0.0, r * cv],
        ])

    def project(x):
        u = math.atan2(x[1], x[0]) % TWO_PI
        ring = math.hypot(x[0], x[1]) - R
        v = math.atan2(x[2], ring) % TWO_PI
        return np.array([u, v])

    return ManifoldChart(
        param_dim=2, ambient_dim=3,
        param_domain=Box(np.array([0.0, 0.0]), np.array([TWO_PI, TWO_PI]), (True, True)),
        embed=embed, embed_jacobian=jac, project=project,
        numerics=numerics,
    )


def torus_patch(numerics: Numerics = DEFAULT_NUMERICS, tolerance: float | None = None) -> Scenario:
    """Star-shaped patch on a torus whose boundary radius wobbles in time.

    The patch lives in the chart around (pi, 0) with polar radius
    a(psi, t) = 0.55 + 0.1 sin(2 psi - 0.8 t); no closed-form
    integrals, so the transport check is purely two-route.
    """
    chart = torus_chart(numerics)
    CU, CV = math.pi, 0.0

    def a(psi, t):
        return 0.55 + 0.1 * math.sin(2.0 * psi - 0.8 * t)

    def a_dpsi(psi, t):
        return 0.2 * math.cos(2.0 * psi - 0.8 * t)

    def a_dt(psi, t):
        return -0.08 * math.cos(2.0 * psi - 0.8 * t)

    def bparam(t, psi):
        rad = a(psi, t)
        return np.array([CU + rad * math.cos(psi), CV + rad * math.sin(psi)])

    def bmap(t, z):
        return chart.point(bparam(t, z[0]))

    def bvel(t, z):
        psi = z[0]
        du = a_dt(psi, t) * np.array([math.cos(psi), math.sin(psi)])
        return chart.jacobian(bparam(t, psi)) @ du

    def bjac(t, z):
        psi = z[0]
        rad, drad = a(psi, t), a_dpsi(psi, t)
        du = np.array([
            drad * math.cos(psi) - rad * math.sin(psi),
            drad * math.sin(psi) + rad * math.cos(psi),
        ])
        return (chart.jacobian(bparam(t, psi)) @ du).reshape(3, 1)

    boundary = BoundaryImmersion(
        param_dim=1, ambient_dim=3,
        charts=(Box(np.array([0.0]), np.array([TWO_PI]), (True,)),),
        map=bmap, time_derivative=bvel, space_jacobian=bjac,
        numerics=numerics,
    )

    def uparam(t, u):
        rho, psi = u[0], u[1]
        rad = a(psi, t)
        return np.array([CU + rho * rad * math.cos(psi), CV + rho * rad * math.sin(psi)])

    def umap(t, u):
        return chart.point(uparam(t, u))

    def ujac(t, u):
        rho, psi = u[0], u[1]
        rad, drad = a(psi, t), a_dpsi(psi, t)
        dparam = np.array([
            [rad * math.cos(psi), rho * (drad * math.cos(psi) - rad * math.sin(psi))],
            [rad * math.sin(psi), rho * (drad * math.sin(psi) + rad * math.cos(psi))],
        ])
        return chart.jacobian(uparam(t, u)) @ dparam

    def uvel(t, u):
        rho, psi = u[0], u[1]
        du = rho * a_dt(psi, t) * np.array([math.cos(psi), math.sin(psi)])
        return chart.jacobian(uparam(t, u)) @ du

    bulk = BulkPatch(
        domain=Box(np.array([0.0, 0.0]), np.array([1.0, TWO_PI]), (False, True)),
        map=umap, jacobian=ujac, time_derivative=uvel,
        numerics=numerics,
    )

    def wrap_pm(val):
        return (val + math.pi) % TWO_PI - math.pi

    def membership(t, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            u = np.arctan2(x[:, 1], x[:, 0]) % TWO_PI
            ring = np.hypot(x[:, 0], x[:, 1]) - TORUS_MAJOR
            v = np.arctan2(x[:, 2], ring) % TWO_PI
            du = (u - CU + math.pi) % TWO_PI - math.pi
            dv = (v - CV + math.pi) % TWO_PI - math.pi
            rho = np.hypot(du, dv)
            psi = np.arctan2(dv, du)
            amax = 0.55 + 0.1 * np.sin(2.0 * psi - 0.8 * t)
            return rho < amax
        u = math.atan2(x[1], x[0]) % TWO_PI
        ring = math.hypot(x[0], x[1]) - TORUS_MAJOR
        v = math.atan2(x[2], ring) % TWO_PI
        du_, dv_ = wrap_pm(u - CU), wrap_pm(v - CV)
        rho = math.hypot(du_, dv_)
        psi = math.atan2(dv_, du_)
        return rho < a(psi, t)

    domain = EvolvingDomain(
        name="torus_patch",
        manifold=chart,
        boundary=boundary,
        membership=membership,
        bulk=(bulk,),
        feature_size=0.5,
        numerics=numerics,
    )
    return Scenario(
        name="torus_patch",
        domain=domain,
        window=(-1.0, 1.0),
        fields=_field_table(one_field(), coordinate_field(0), coordinate_field(2)),
        default_fields=("one", "x0", "x2"),
        tolerance=1e-6 if tolerance is None else tolerance,
        references={},
    )


# ---------------------------------------------------------------------------
# the figure-eight

def figure_eight(numerics: Numerics = DEFAULT_NUMERICS, tolerance: float | None = None) -> Scenario:
    """Family (sin th, sin(2 th)/2 + t cos th) of self-crossing curves.

    The curve crosses itself at (-t, 0) for every |t| < 1: the two
    parameters over the crossing solve sin th = -t on opposite cosine
    branches, and there the exterior side of either lobe flips.
    Breaks are declared at those parameters so boundary quadratures
    split their boxes; membership has the closed form
    y^2 < (1 - x^2)(x + t)^2 inside |x| < 1. Each lobe is star-shaped
    about its midpoint, which the chord bulk patches rely on.
    """

    def curve(t, th):
        return np.array([math.sin(th), 0.5 * math.sin(2.0 * th) + t * math.cos(th)])

    def curve_dth(t, th):
        return np.array([math.cos(th), math.cos(2.0 * th) - t * math.sin(th)])

    boundary = BoundaryImmersion(
        param_dim=1, ambient_dim=2,
        charts=(Box(np.array([0.0]), np.array([TWO_PI]), (True,)),),
        map=lambda t, z: curve(t, z[0]),
        time_derivative=lambda t, z: np.array([0.0, math.cos(z[0])]),
        space_jacobian=lambda t, z: curve_dth(t, z[0]).reshape(2, 1),
        smoothness_breaks=lambda t: _eight_preimages(t),
        numerics=numerics,
    )

    def lobe_patch(side: float) -> BulkPatch:
        # side +1: lobe over sin th > -t, centered at ((1 - t)/2, 0);
        # side -1: the mirror lobe, centered at (-(1 + t)/2, 0)
        def bounds(t):
            s = math.asin(max(-1.0, min(1.0, t)))
            if side > 0:
                return -s, math.pi + s
            return math.pi + s, TWO_PI - s

        def center(t):
            return np.array([side * (1.0 - side * t) / 2.0, 0.0])

        def pmap(t, u):
            lo, hi = bounds(t)
            th = lo + u[1] * (hi - lo)
            c = center(t)
            return c + u[0] * (curve(t, th) - c)

        def pjac(t, u):
            lo, hi = bounds(t)
            th = lo + u[1] * (hi - lo)
            c = center(t)
            col_r = curve(t, th) - c
            col_s = u[0] * (hi - lo) * curve_dth(t, th)
            return np.stack([col_r, col_s], axis=1)

        return BulkPatch(
            domain=Box(np.array([0.0, 0.0]), np.array([1.0, 1.0])),
            map=pmap, jacobian=pjac,
            numerics=numerics,
        )

    def membership(t, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            xx, yy = x[:, 0], x[:, 1]
            return (xx * xx < 1.0) & (yy * yy < (1.0 - xx * xx) * (xx + t) ** 2)
        xx, yy = float(x[0]), float(x[1])
        return xx * xx < 1.0 and yy * yy < (1.0 - xx * xx) * (xx + t) ** 2

    domain = EvolvingDomain(
        name="figure_eight",
        manifold=flat_chart(2, Box(np.array([-1.25, -1.25]), np.array([1.25, 1.25])), numerics),
        boundary=boundary,
        membership=membership,
        bulk=(lobe_patch(+1.0), lobe_patch(-1.0)),
        exceptional_set_size=lambda t: 1 if abs(t) < 1.0 else 0,
        exceptional_preimages=lambda t: _eight_preimages(t).reshape(-1, 1),
        feature_size=0.5,
        numerics=numerics,
    )

    def area(t):
        s = math.sqrt(1.0 - t * t)
        return (4.0 / 3.0) * s ** 3 + 2.0 * t * t * s + 2.0 * t * math.asin(t)

    def darea(t):
        return 2.0 * t * math.sqrt(1.0 - t * t) + 2.0 * math.asin(t)

    return Scenario(
        name="figure_eight",
        domain=domain,
        window=(-0.25, 0.65),
        fields=_field_table(one_field(), coordinate_field(0), one_plus_x0_sq_field()),
        default_fields=("one", "x0", "one_plus_x0_sq"),
        tolerance=1e-4 if tolerance is None else tolerance,
        self_intersecting=True,
        references={"one": Reference(area, darea)},
    )


def _eight_preimages(t: float) -> np.ndarray:
    """Parameters over the self-crossing of the figure-eight at time t."""
    if abs(t) >= 1.0:
        return np.empty(0)
    s = math.asin(t)
    return np.sort(np.array([(-s) % TWO_PI, math.pi + s]))


# ---------------------------------------------------------------------------
# registry

REGISTRY: dict[str, Callable[..., Scenario]] = {
    "static_interval": static_interval,
    "leibniz_interval": leibniz_interval,
    "shrinking_disk": shrinking_disk,
    "translating_ellipse": translating_ellipse,
    "expanding_ball": expanding_ball,
    "spherical_cap": spherical_cap,
    "torus_patch": torus_patch,
    "figure_eight": figure_eight,
}


# Scenarios whose boundary stays embedded on the whole window; the
# tight default tolerance applies to these.
SMOOTH_SCENARIOS = (
    "shrinking_disk",
    "translating_ellipse",
    "expanding_ball",
    "spherical_cap",
    "torus_patch",
)


def scenario_names() -> tuple[str, ...]:
    return tuple(REGISTRY)


def build_scenario(name: str, numerics: Numerics = DEFAULT_NUMERICS,
                   tolerance: float | None = None) -> Scenario:
    try:
        builder = REGISTRY[name]
    except KeyError:
        known = ", ".join(REGISTRY)
        raise ConfigError(f"unknown scenario {name!r} (known: {known})") from None
    return builder(numerics=numerics, tolerance=tolerance)


def build_all(numerics: Numerics = DEFAULT_NUMERICS,
              tolerances: dict[str, float] | None = None) -> list[Scenario]:
    tolerances = tolerances or {}
    return [
        build_scenario(name, numerics, tolerances.get(name))
        for name in REGISTRY
    ]


# ---------------------------------------------------------------------------
# vector fields for the swept-region divergence check

def divergence_fields(ambient_dim: int) -> tuple[SpaceTimeVectorField, ...]:
    """Three analytic space-time fields tangent to every registry manifold.

    The spatial parts are either zero or the rotation about the x2
    axis, which is tangent to the plane, the sphere and the torus
    alike; the time components are free scalars.
    """
    d = ambient_dim

    def clock_value(s, x):
        out = np.zeros(1 + d)
        out[0] = s
        return out

    def clock_jac(s, x):
        J = np.zeros((1 + d, 1 + d))
        J[0, 0] = 1.0
        return J

    clock = SpaceTimeVectorField("clock", clock_value, clock_jac)

    if d == 1:
        def stretch_value(s, x):
            return np.array([0.0, x[0]])

        def stretch_jac(s, x):
            J = np.zeros((2, 2))
            J[1, 1] = 1.0
            return J

        def mixed_value(s, x):
            return np.array([x[0] ** 2, s * x[0]])

        def mixed_jac(s, x):
            J = np.zeros((2, 2))
            J[0, 1] = 2.0 * x[0]
            J[1, 0] = x[0]
            J[1, 1] = s
            return J

        return (
            clock,
            SpaceTimeVectorField("stretch", stretch_value, stretch_jac),
            SpaceTimeVectorField("mixed", mixed_value, mixed_jac),
        )

    def spin_value(s, x):
        out = np.zeros(1 + d)
        out[1] = -x[1]
        out[2] = x[0]
        return out

    def spin_jac(s, x):
        J = np.zeros((1 + d, 1 + d))
        J[1, 2] = -1.0
        J[2, 1] = 1.0
        return J

    def mixed_value(s, x):
        out = np.zeros(1 + d)
        out[0] = x[0] ** 2
        out[1] = -s * x[1]
        out[2] = s * x[0]
        return out

    def mixed_jac(s, x):
        J = np.zeros((1 + d, 1 + d))
        J[0, 1] = 2.0 * x[0]
        J[1, 0] = -x[1]
        J[1, 2] = -s
        J[2, 0] = x[0]
        J[2, 1] = s
        return J

    return (
        clock,
        SpaceTimeVectorField("spin", spin_value, spin_jac),
        SpaceTimeVectorField("mixed", mixed_value, mixed_jac),
    )
