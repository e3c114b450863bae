"""Transport identity verification on evolving scenes.

The identity under test: the time derivative of a bulk integral equals
the bulk integral of the integrand's time partial plus the boundary
integral of the integrand against the normal speed. The left side is
produced by central differencing of quadratures, the right side by
independent geometric quadratures, so agreement is evidence and not
bookkeeping.

Component failures during verification are folded into the report
(failure set, numbers absent) rather than raised.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .config import DEFAULT_NUMERICS, Numerics
from .domain import (
    Box,
    BoundaryImmersion,
    BulkPatch,
    EvolvingDomain,
    ScalarField,
    flat_chart,
)
from .errors import DegenerateInterval, LabError, WindowExceeded
from .quadrature import MONTE_CARLO, IntegralEstimate, QuadratureRule, integrate_boundary, integrate_domain


@dataclass(frozen=True)
class Reference:
    """Closed-form bulk integral and its time derivative."""

    value: Callable[[float], float] | None = None
    derivative: Callable[[float], float] | None = None


@dataclass(eq=False)
class Scenario:
    """A named evolving scene with fields, window and tolerances."""

    name: str
    domain: EvolvingDomain
    window: tuple[float, float]
    fields: dict[str, ScalarField]
    default_fields: tuple[str, ...]
    tolerance: float = 1e-6
    self_intersecting: bool = False
    references: dict[str, Reference] = dc_field(default_factory=dict)
    alt_boundary: BoundaryImmersion | None = None
    notes: str = ""

    def __post_init__(self):
        t0, t1 = self.window
        if not t1 > t0:
            raise ValueError("scenario window must have positive length")
        missing = [n for n in self.default_fields if n not in self.fields]
        if missing:
            raise ValueError(f"default fields {missing} not in field table")

    @property
    def window_length(self) -> float:
        return self.window[1] - self.window[0]

    def field(self, name: str) -> ScalarField:
        try:
            return self.fields[name]
        except KeyError:
            raise KeyError(f"scenario {self.name!r} has no field {name!r}") from None

    def default_h(self, numerics: Numerics = DEFAULT_NUMERICS) -> float:
        return numerics.fd_step_rel * self.window_length

    def require_window(self, *times: float):
        t0, t1 = self.window
        for t in times:
            if not (t0 < t < t1):
                raise WindowExceeded(
                    f"time {t} leaves the window ({t0}, {t1}) of scenario {self.name!r}"
                )

    def times(self, count: int = 5) -> np.ndarray:
        """Evenly spaced interior evaluation times."""
        t0, t1 = self.window
        k = np.arange(1, count + 1)
        return t0 + (t1 - t0) * k / (count + 1)

    def reference_derivative(self, name: str, t: float) -> float | None:
        ref = self.references.get(name)
        if ref is None or ref.derivative is None:
            return None
        return float(ref.derivative(t))


@dataclass(frozen=True)
class TransportReport:
    """Result of one transport-identity verification."""

    scenario: str
    field: str
    t: float
    h: float
    order: int
    lhs: float | None = None
    rhs_bulk: float | None = None
    rhs_boundary: float | None = None
    rhs: float | None = None
    abs_residual: float | None = None
    rel_residual: float | None = None
    tolerance: float = 1e-6
    passed: bool = False
    failure: str | None = None
    lhs_indicator: float | None = None
    rhs_indicator: float | None = None

    def as_record(self) -> dict:
        return dataclasses.asdict(self)


def _lhs_estimate(
    scenario: Scenario,
    field: ScalarField,
    t: float,
    h: float,
    rule: QuadratureRule,
) -> IntegralEstimate:
    """Central difference of the bulk integral around t, with indicator.

    The quadrature indicator is propagated through the difference, so
    the estimate's indicator grows like 1/h when the quadrature is the
    limiting error source.
    """
    scenario.require_window(t - h, t + h)
    hi = integrate_domain(scenario.domain, t + h, field, rule)
    lo = integrate_domain(scenario.domain, t - h, field, rule)
    value = (hi.value - lo.value) / (2.0 * h)
    indicator = (hi.error_indicator + lo.error_indicator) / (2.0 * h)
    return IntegralEstimate(value=value, error_indicator=indicator)


def _rhs_estimates(
    scenario: Scenario,
    field: ScalarField,
    t: float,
    rule: QuadratureRule,
) -> tuple[IntegralEstimate, IntegralEstimate]:
    scenario.require_window(t)
    bulk = integrate_domain(scenario.domain, t, lambda tt, x: field.dt(tt, x), rule)
    boundary = integrate_boundary(
        scenario.domain,
        t,
        lambda tt, z, p, n, vn: field(tt, p) * vn,
        rule,
    )
    return bulk, boundary


def lhs_time_derivative(
    scenario: Scenario,
    field: ScalarField | str,
    t: float,
    h: float | None = None,
    rule: QuadratureRule = QuadratureRule(),
) -> float:
    """Central difference [I(t+h) - I(t-h)] / (2h) of the bulk integral."""
    if isinstance(field, str):
        field = scenario.field(field)
    if h is None:
        h = scenario.default_h()
    return _lhs_estimate(scenario, field, t, h, rule).value


def rhs_transport(
    scenario: Scenario,
    field: ScalarField | str,
    t: float,
    rule: QuadratureRule = QuadratureRule(),
) -> tuple[float, float]:
    """Bulk and boundary parts of the transport right side at time t."""
    if isinstance(field, str):
        field = scenario.field(field)
    bulk, boundary = _rhs_estimates(scenario, field, t, rule)
    return bulk.value, boundary.value


def verify_transport(
    scenario: Scenario,
    field_name: str,
    t: float,
    h: float | None = None,
    rule: QuadratureRule | None = None,
    tolerance: float | None = None,
) -> TransportReport:
    """Check the transport identity for one scenario, field and time.

    The relative residual is |lhs - rhs| / max(1, |lhs|). Component
    failures produce a failed report carrying the cause instead of
    raising.
    """
    if rule is None:
        rule = QuadratureRule(order_or_count=scenario.domain.numerics.gauss_order)
    if h is None:
        h = scenario.default_h()
    if tolerance is None:
        tolerance = scenario.tolerance
    base = dict(
        scenario=scenario.name, field=field_name, t=float(t), h=float(h),
        order=rule.order_or_count, tolerance=float(tolerance),
    )
    try:
        field = scenario.field(field_name)
        lhs = _lhs_estimate(scenario, field, t, h, rule)
        bulk, boundary = _rhs_estimates(scenario, field, t, rule)
    except (LabError, KeyError) as exc:
        return TransportReport(passed=False, failure=f"{type(exc).__name__}: {exc}", **base)
    rhs = bulk.value + boundary.value
    abs_res = abs(lhs.value - rhs)
    rel_res = abs_res / max(1.0, abs(lhs.value))
    return TransportReport(
        lhs=lhs.value,
        rhs_bulk=bulk.value,
        rhs_boundary=boundary.value,
        rhs=rhs,
        abs_residual=abs_res,
        rel_residual=rel_res,
        passed=bool(rel_res < tolerance),
        lhs_indicator=lhs.error_indicator,
        rhs_indicator=bulk.error_indicator + boundary.error_indicator,
        **base,
    )


# ---------------------------------------------------------------------------
# moving interval checks (1-d specialization)

@dataclass(frozen=True)
class IntervalReport:
    """Machinery versus endpoint formula on a moving interval."""

    t: float
    h: float
    lhs: float
    machinery_rhs: float
    endpoint_rhs: float
    max_discrepancy: float
    tolerance: float
    passed: bool


def moving_interval_domain(
    a: Callable[[float], float],
    b: Callable[[float], float],
    box: Box | None = None,
    a_dot: Callable[[float], float] | None = None,
    b_dot: Callable[[float], float] | None = None,
    name: str = "moving_interval",
    numerics: Numerics = DEFAULT_NUMERICS,
) -> EvolvingDomain:
    """Evolving open interval (a(t), b(t)) on the real line.

    The boundary parameter manifold is the two-point set, carried as
    zero-span label boxes; 0 labels the left endpoint. Endpoint rate
    callables are optional; central differences otherwise.
    """
    if box is None:
        box = Box(np.array([-50.0]), np.array([50.0]))

    def bmap(t, z):
        return np.array([b(t) if z[0] > 0.5 else a(t)])

    velocity = None
    if a_dot is not None and b_dot is not None:
        velocity = lambda t, z: np.array([b_dot(t) if z[0] > 0.5 else a_dot(t)])
    boundary = BoundaryImmersion(
        param_dim=0,
        ambient_dim=1,
        charts=(Box(np.array([0.0]), np.array([0.0])), Box(np.array([1.0]), np.array([1.0]))),
        map=bmap,
        time_derivative=velocity,
        numerics=numerics,
    )
    bulk_velocity = None
    if a_dot is not None and b_dot is not None:
        bulk_velocity = lambda t, u: np.array([a_dot(t) + (b_dot(t) - a_dot(t)) * u[0]])
    bulk = BulkPatch(
        domain=Box(np.array([0.0]), np.array([1.0])),
        map=lambda t, u: np.array([a(t) + (b(t) - a(t)) * u[0]]),
        jacobian=lambda t, u: np.array([[b(t) - a(t)]]),
        time_derivative=bulk_velocity,
        numerics=numerics,
    )
    return EvolvingDomain(
        name=name,
        manifold=flat_chart(1, box, numerics),
        boundary=boundary,
        membership=lambda t, x: _interval_membership(a(t), b(t), x),
        bulk=(bulk,),
        feature_size=1.0,
        numerics=numerics,
    )


def _interval_membership(lo, hi, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        return (x[:, 0] > lo) & (x[:, 0] < hi)
    return bool(lo < float(x.reshape(-1)[0]) < hi)


def leibniz_check(
    a: Callable[[float], float],
    b: Callable[[float], float],
    field: ScalarField,
    t: float,
    h: float = 1e-5,
    a_dot: Callable[[float], float] | None = None,
    b_dot: Callable[[float], float] | None = None,
    rule: QuadratureRule = QuadratureRule(),
    tolerance: float = 1e-8,
) -> IntervalReport:
    """Moving-interval transport against the signed endpoint formula.

    The endpoint route is field(b) b' - field(a) a' plus the bulk term;
    the machinery route runs the generic boundary quadrature, which for
    point boundaries is the same signed sum produced by orientation
    probes rather than by hand. DegenerateInterval when the interval is
    shorter than ten steps.
    """
    width = abs(b(t) - a(t))
    if width < 10.0 * h:
        raise DegenerateInterval(f"interval width {width:.3e} < 10 h = {10 * h:.3e}")
    lo = min(a(t - 2 * h), a(t + 2 * h), a(t)) - 1.0
    hi = max(b(t - 2 * h), b(t + 2 * h), b(t)) + 1.0
    domain = moving_interval_domain(a, b, Box(np.array([lo]), np.array([hi])))
    scenario = Scenario(
        name="interval_check",
        domain=domain,
        window=(t - 10 * h, t + 10 * h),
        fields={field.name: field},
        default_fields=(field.name,),
    )
    lhs = _lhs_estimate(scenario, field, t, h, rule).value
    bulk, boundary = _rhs_estimates(scenario, field, t, rule)
    machinery = bulk.value + boundary.value
    if a_dot is None:
        a_dot_v = (a(t + h) - a(t - h)) / (2 * h)
    else:
        a_dot_v = a_dot(t)
    if b_dot is None:
        b_dot_v = (b(t + h) - b(t - h)) / (2 * h)
    else:
        b_dot_v = b_dot(t)
    endpoint = bulk.value + field(t, np.array([b(t)])) * b_dot_v - field(t, np.array([a(t)])) * a_dot_v
    disc = max(abs(lhs - machinery), abs(lhs - endpoint), abs(machinery - endpoint))
    return IntervalReport(
        t=t, h=h, lhs=lhs, machinery_rhs=machinery, endpoint_rhs=endpoint,
        max_discrepancy=disc, tolerance=tolerance, passed=bool(disc < tolerance),
    )


def reynolds_check(
    scenario: Scenario,
    field_name: str,
    t: float,
    h: float | None = None,
    rule: QuadratureRule | None = None,
    tolerance: float | None = None,
) -> TransportReport:
    """Transport identity on a flat 3-d scene.

    On flat three-dimensional scenes the normal speed is the boundary
    velocity resolved along the outward normal, so this is the
    classical moving control-volume balance. The scene must be flat
    and 3-d; otherwise ValueError.
    """
    dom = scenario.domain
    if dom.intrinsic_dim != 3 or dom.ambient_dim != 3 or not dom.manifold.flat:
        raise ValueError("reynolds_check wants a flat 3-d scene")
    return verify_transport(scenario, field_name, t, h, rule, tolerance)


# ---------------------------------------------------------------------------
# parameter sweeps

@dataclass(frozen=True)
class SweepResult:
    """Convergence study for one scenario, field and parameter."""

    scenario: str
    field: str
    t: float
    parameter: str  # fd_step | quad_order | monte_carlo
    grid: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float | None
    reference_kind: str  # "closed_form" | "finest"
    monotone: bool

    def as_record(self) -> dict:
        return dataclasses.asdict(self)


def run_sweep(
    scenario: Scenario,
    field_name: str,
    t: float,
    parameter: str,
    grid: Sequence[float],
    rule: QuadratureRule | None = None,
    seed: int = 0,
    mc_repeats: int = 8,
) -> SweepResult:
    """Sweep a discretization parameter and fit a log-error slope.

    fd_step sweeps the difference step through verify_transport;
    quad_order sweeps the rule order; monte_carlo sweeps sample counts
    of the domain integral against a gauss reference, averaging the
    error over a deterministic seed set because a single draw makes
    the fitted slope too noisy. Errors are measured against the
    scenario's closed form when it has one, otherwise against the
    finest grid point (which is then excluded from the fit).
    """
    if len(grid) < 4:
        raise ValueError("sweep grid wants at least 4 points")
    if rule is None:
        rule = QuadratureRule(order_or_count=scenario.domain.numerics.gauss_order)
    field = scenario.field(field_name)
    ref = scenario.reference_derivative(field_name, t)

    if parameter == "fd_step":
        values = [
            _lhs_estimate(scenario, field, t, float(h), rule).value for h in grid
        ]
        errors, kind, fit_mask = _errors_against_reference(values, ref)
        xs = np.log10(np.asarray(grid, dtype=float))
    elif parameter == "quad_order":
        values = []
        for order in grid:
            bulk, boundary = _rhs_estimates(scenario, field, t, rule.with_order(int(order)))
            values.append(bulk.value + boundary.value)
        errors, kind, fit_mask = _errors_against_reference(values, ref)
        xs = np.asarray(grid, dtype=float)  # spectral decay: fit log-error vs order
    elif parameter == "monte_carlo":
        gauss_ref = integrate_domain(scenario.domain, t, field, rule).value
        errors = []
        for count in grid:
            errs = []
            for k in range(mc_repeats):
                mc_rule = QuadratureRule(kind=MONTE_CARLO, order_or_count=int(count), seed=seed + 1000 * k)
                est = integrate_domain(scenario.domain, t, field, mc_rule)
                errs.append((est.value - gauss_ref) ** 2)
            errors.append(math.sqrt(sum(errs) / len(errs)))
        kind = "closed_form"
        fit_mask = [True] * len(errors)
        xs = np.log10(np.asarray(grid, dtype=float))
    else:
        raise ValueError(f"unknown sweep parameter {parameter!r}")

    slope = _fit_slope(xs, errors, fit_mask)
    mono = all(b <= a + 1e-14 for a, b in zip(errors[:-1], errors[1:]))
    return SweepResult(
        scenario=scenario.name, field=field_name, t=float(t), parameter=parameter,
        grid=tuple(float(g) for g in grid), errors=tuple(errors),
        slope=slope, reference_kind=kind, monotone=mono,
    )


def _errors_against_reference(values, ref):
    if ref is not None:
        return [abs(v - ref) for v in values], "closed_form", [True] * len(values)
    finest = values[-1]
    errors = [abs(v - finest) for v in values]
    return errors, "finest", [True] * (len(values) - 1) + [False]


def _fit_slope(xs, errors, mask) -> float | None:
    xs = np.asarray(xs, dtype=float)
    es = np.asarray(errors, dtype=float)
    keep = np.asarray(mask) & (es > 0)
    if keep.sum() < 2:
        return None
    return float(np.polyfit(xs[keep], np.log10(es[keep]), 1)[0])


# ---------------------------------------------------------------------------
# time shifts

def shift_scenario_time(scenario: Scenario, c: float) -> Scenario:
    """Scenario evaluating the original at t + c.

    With c and evaluation times chosen so (t - c) + c reproduces t
    exactly in floating point, every quadrature sees identical inputs
    and the shifted reports agree bit for bit.
    """
    dom = scenario.domain
    bnd = dom.boundary
    shifted_boundary = BoundaryImmersion(
        param_dim=bnd.param_dim,
        ambient_dim=bnd.ambient_dim,
        charts=bnd.charts,
        map=lambda t, z: bnd.map(t + c, z),
        time_derivative=None if bnd.time_derivative is None else (lambda t, z: bnd.time_derivative(t + c, z)),
        space_jacobian=None if bnd.space_jacobian is None else (lambda t, z: bnd.space_jacobian(t + c, z)),
        smoothness_breaks=None if bnd.smoothness_breaks is None else (lambda t: bnd.smoothness_breaks(t + c)),
        fd_time_step=bnd.fd_time_step,
        numerics=bnd.numerics,
    )
    shifted_bulk = None
    if dom.bulk is not None:
        shifted_bulk = tuple(
            BulkPatch(
                domain=p.domain,
                map=lambda t, u, _p=p: _p.map(t + c, u),
                jacobian=None if p.jacobian is None else (lambda t, u, _p=p: _p.jacobian(t + c, u)),
                time_derivative=None if p.time_derivative is None else (lambda t, u, _p=p: _p.time_derivative(t + c, u)),
                fd_time_step=p.fd_time_step,
                numerics=p.numerics,
            )
            for p in dom.bulk
        )
    shifted_domain = EvolvingDomain(
        name=f"{dom.name}@shift{c:+g}",
        manifold=dom.manifold,
        boundary=shifted_boundary,
        membership=None if dom.membership is None else (lambda t, x: dom.membership(t + c, x)),
        bulk=shifted_bulk,
        exceptional_set_size=(
            (lambda t: dom.crossing_count(t + c)) if callable(dom.exceptional_set_size)
            else dom.exceptional_set_size
        ),
        exceptional_preimages=None if dom.exceptional_preimages is None else (lambda t: dom.exceptional_preimages(t + c)),
        feature_size=dom.feature_size,
        numerics=dom.numerics,
    )
    shifted_fields = {
        name: ScalarField(
            name=f.name,
            value=lambda t, x, _f=f: _f.value(t + c, x),
            time_partial=None if f.time_partial is None else (lambda t, x, _f=f: _f.time_partial(t + c, x)),
            ambient_gradient=None if f.ambient_gradient is None else (lambda t, x, _f=f: _f.ambient_gradient(t + c, x)),
            fd_time_step=f.fd_time_step,
        )
        for name, f in scenario.fields.items()
    }
    shifted_refs = {
        name: Reference(
            value=None if r.value is None else (lambda t, _r=r: _r.value(t + c)),
            derivative=None if r.derivative is None else (lambda t, _r=r: _r.derivative(t + c)),
        )
        for name, r in scenario.references.items()
    }
    return Scenario(
        name=f"{scenario.name}@shift{c:+g}",
        domain=shifted_domain,
        window=(scenario.window[0] - c, scenario.window[1] - c),
        fields=shifted_fields,
        default_fields=scenario.default_fields,
        tolerance=scenario.tolerance,
        self_intersecting=scenario.self_intersecting,
        references=shifted_refs,
        alt_boundary=None,
        notes=scenario.notes,
    )
