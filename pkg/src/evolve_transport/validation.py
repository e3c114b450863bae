"""Sampled contract checks for scenes and scenarios.

A scene carries redundant descriptions (chart, boundary immersion,
bulk patches, membership) plus optional analytic derivatives. Nothing
forces them to agree, so before any quadrature result is trusted the
scene is put through the sampled checks here. Each check reports its
worst observed violation; the report never raises on a mere failure,
only on non-finite map output.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import EvolvingDomain, _as_vector
from .errors import LabError
from .geometry import _exterior_normal
from .transport import Scenario

# Agreement tolerance for analytic-versus-difference derivative checks
# and for step-halving consistency, relative to 1 + |value|.
DERIV_TOL = 1e-5
# Minimal ambient separation of chart images over well-separated
# parameters before the injectivity check complains.
INJECTIVITY_TOL = 1e-8
# Parameter-box fraction treated as "near" a declared crossing
# preimage; sampled boundary checks stay clear of it.
EXCEPTIONAL_SKIP = 0.02


@dataclass(frozen=True)
class CheckResult:
    """One named check: pass flag, worst violation, tolerance used."""

    name: str
    passed: bool
    worst: float
    tolerance: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    scene: str
    t: float
    samples: int
    seed: int
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def lines(self) -> list[str]:
        out = [f"validate {self.scene} at t={self.t:g} ({self.samples} samples, seed {self.seed})"]
        for c in self.checks:
            flag = "pass" if c.passed else "FAIL"
            out.append(f"  [{flag}] {c.name}: worst {c.worst:.3e} vs {c.tolerance:.1e} {c.detail}")
        return out


def _min_singular_value(A: np.ndarray) -> float:
    if A.shape[1] == 0:
        return float("inf")
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def _separated_image_min(box, U: np.ndarray, pts: np.ndarray, sep: float) -> float:
    """Min pairwise image distance over parameter pairs further than sep apart."""
    diff = np.abs(U[:, None, :] - U[None, :, :])
    for ax, per in enumerate(box.periodic):
        if per and box.spans[ax] > 0:
            diff[:, :, ax] = np.minimum(diff[:, :, ax], box.spans[ax] - diff[:, :, ax])
    param_d = np.sqrt(np.sum(diff * diff, axis=2))
    img_d = np.sqrt(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2))
    mask = param_d > sep
    if not mask.any():
        return float("inf")
    return float(img_d[mask].min())


def _sample_box(box, rng, n) -> np.ndarray:
    return box.sample(rng, n)


def _boundary_samples(domain: EvolvingDomain, t: float, rng, n: int):
    """Boundary parameters spread over charts, avoiding crossing preimages."""
    bnd = domain.boundary
    if bnd.degenerate:
        return [chart.lower.copy() for chart in bnd.charts]
    skip = domain.crossing_preimages(t)
    out = []
    per = max(1, n // len(bnd.charts))
    for chart in bnd.charts:
        span = float(np.max(chart.spans[chart.active_axes]))
        raw = chart.sample(rng, per)
        for z in raw:
            if skip.size and any(
                chart.wrapped_distance(z, q) < EXCEPTIONAL_SKIP * span for q in skip
            ):
                continue
            out.append(z)
    return out


def validate_scene(
    domain: EvolvingDomain,
    t: float,
    samples: int = 500,
    seed: int = 0,
) -> ValidationReport:
    """Run every sampled scene contract at time t.

    Deterministic for a given seed. Checks cover chart rank and
    injectivity, boundary points lying on the manifold, boundary
    differential rank away from declared crossings, consistency of
    analytic derivatives with central differences, bulk-membership
    agreement, membership probes across the boundary, and the declared
    exceptional set.
    """
    rng = np.random.default_rng(seed)
    num = domain.numerics
    chart = domain.manifold
    checks: list[CheckResult] = []

    # chart rank: smallest singular value of the embedding differential
    U = _sample_box(chart.param_domain, rng, samples)
    sv = min(_min_singular_value(chart.jacobian(u)) for u in U)
    checks.append(CheckResult(
        "chart_rank", sv > num.rank_tol, sv, num.rank_tol,
        "min singular value, larger is better",
    ))

    # chart injectivity: well-separated parameters, separated images
    pts = np.array([chart.point(u) for u in U])
    sep = 0.05 * chart.param_domain.diameter()
    worst = _separated_image_min(chart.param_domain, U, pts, sep)
    checks.append(CheckResult(
        "chart_injectivity", worst > INJECTIVITY_TOL, worst, INJECTIVITY_TOL,
        "min image distance over separated parameter pairs",
    ))

    bnd = domain.boundary
    zs = _boundary_samples(domain, t, rng, samples)

    # boundary image on the manifold
    worst = 0.0
    for z in zs:
        p = bnd.point(t, z)
        back = chart.point(chart.to_chart(p))
        worst = max(worst, float(np.linalg.norm(back - p)))
    checks.append(CheckResult(
        "boundary_on_manifold", worst < num.surface_tol, worst, num.surface_tol,
        "max distance to the chart image",
    ))

    # boundary differential rank away from crossings
    if bnd.degenerate:
        checks.append(CheckResult(
            "boundary_rank", True, float("inf"), num.rank_tol, "point boundary, vacuous",
        ))
    else:
        sv = min(_min_singular_value(bnd.differential(t, z)) for z in zs)
        checks.append(CheckResult(
            "boundary_rank", sv > num.rank_tol, sv, num.rank_tol,
            "min singular value away from declared crossings",
        ))

    # time C^1: halved-step agreement, plus analytic agreement if present
    h = bnd.fd_time_step
    worst = 0.0
    for z in zs[: max(1, len(zs) // 4)]:
        fd1 = (bnd.point(t + h, z) - bnd.point(t - h, z)) / (2 * h)
        fd2 = (bnd.point(t + h / 2, z) - bnd.point(t - h / 2, z)) / h
        worst = max(worst, float(np.linalg.norm(fd1 - fd2)) / (1.0 + float(np.linalg.norm(fd2))))
        if bnd.time_derivative is not None:
            v = bnd.velocity(t, z)
            worst = max(worst, float(np.linalg.norm(v - fd2)) / (1.0 + float(np.linalg.norm(v))))
    checks.append(CheckResult(
        "boundary_time_c1", worst < DERIV_TOL, worst, DERIV_TOL,
        "step-halving and analytic agreement, relative",
    ))

    # analytic space jacobian versus central differences
    if bnd.space_jacobian is None or bnd.degenerate:
        checks.append(CheckResult(
            "boundary_space_jacobian", True, 0.0, DERIV_TOL, "difference fallback in use",
        ))
    else:
        worst = 0.0
        step = num.geom_step_rel * bnd._scale()
        for z in zs[: max(1, len(zs) // 4)]:
            A = bnd.differential(t, z)
            for k, ax in enumerate(bnd._active_axes()):
                e = np.zeros_like(_as_vector(z))
                e[ax] = step
                col = (bnd.point(t, z + e) - bnd.point(t, z - e)) / (2 * step)
                worst = max(worst, float(np.linalg.norm(A[:, k] - col)) / (1.0 + float(np.linalg.norm(col))))
        checks.append(CheckResult(
            "boundary_space_jacobian", worst < DERIV_TOL, worst, DERIV_TOL,
            "analytic vs difference columns, relative",
        ))

    # bulk points must be members
    if domain.bulk and domain.membership is not None:
        bad = 0
        total = 0
        for patch in domain.bulk:
            for u in _sample_box(patch.domain, rng, max(1, samples // len(domain.bulk))):
                total += 1
                if not domain.is_inside(t, patch.point(t, u)):
                    bad += 1
        checks.append(CheckResult(
            "bulk_membership", bad == 0, float(bad), 0.0,
            f"violations out of {total} bulk samples",
        ))
    else:
        checks.append(CheckResult(
            "bulk_membership", True, 0.0, 0.0, "no bulk patches or no membership, vacuous",
        ))

    # membership probes across the boundary
    if domain.membership is None:
        checks.append(CheckResult(
            "normal_probes", True, 0.0, 0.0, "no membership predicate, vacuous",
        ))
    else:
        eps = domain.probe_offset()
        bad = 0
        total = 0
        for z in zs:
            total += 1
            try:
                n = _exterior_normal(domain, bnd, t, z)
            except LabError:
                bad += 1
                continue
            p = bnd.point(t, z)
            inward = chart.point(chart.to_chart(p - eps * n))
            outward = chart.point(chart.to_chart(p + eps * n))
            if not domain.is_inside(t, inward) or domain.is_inside(t, outward):
                bad += 1
        checks.append(CheckResult(
            "normal_probes", bad == 0, float(bad), 0.0,
            f"violations out of {total} probed boundary points",
        ))

    # declared crossings really are crossings
    k = domain.crossing_count(t)
    pre = domain.crossing_preimages(t)
    if k == 0 and pre.size == 0:
        checks.append(CheckResult(
            "exceptional_declarations", True, 0.0, 0.0, "no crossings declared",
        ))
    else:
        images = np.array([bnd.point(t, z) for z in pre])
        scale = max(1.0, float(np.abs(images).max()))
        clusters: list[np.ndarray] = []
        counts: list[int] = []
        for p in images:
            for i, c in enumerate(clusters):
                if np.linalg.norm(p - c) < 1e-8 * scale:
                    counts[i] += 1
                    break
            else:
                clusters.append(p)
                counts.append(1)
        ok = len(clusters) == k and all(c >= 2 for c in counts)
        checks.append(CheckResult(
            "exceptional_declarations", ok, float(abs(len(clusters) - k)), 0.0,
            f"{len(clusters)} distinct crossing(s) from {len(pre)} preimages, declared {k}",
        ))

    return ValidationReport(
        scene=domain.name, t=float(t), samples=samples, seed=seed, checks=tuple(checks),
    )


def validate_scenario(
    scenario: Scenario,
    t: float | None = None,
    samples: int = 500,
    seed: int = 0,
) -> ValidationReport:
    """Scene checks plus scalar-field derivative consistency.

    Field checks sample bulk points of the scene; analytic time
    partials must match central differences of the values there.
    """
    if t is None:
        t = 0.5 * (scenario.window[0] + scenario.window[1])
    scenario.require_window(t)
    base = validate_scene(scenario.domain, t, samples, seed)
    rng = np.random.default_rng(seed + 1)
    dom = scenario.domain

    xs: list[np.ndarray] = []
    if dom.bulk:
        per = max(1, samples // (4 * len(dom.bulk)))
        for patch in dom.bulk:
            xs.extend(patch.point(t, u) for u in patch.domain.sample(rng, per))
    else:
        xs.extend(
            dom.manifold.point(u)
            for u in dom.manifold.param_domain.sample(rng, max(1, samples // 4))
        )

    worst = 0.0
    h = 1e-6 * max(scenario.window_length, 1.0)
    for field in scenario.fields.values():
        if field.time_partial is None:
            continue
        for x in xs:
            fd = (field(t + h, x) - field(t - h, x)) / (2 * h)
            an = field.dt(t, x)
            worst = max(worst, abs(an - fd) / (1.0 + abs(an)))
    checks = base.checks + (CheckResult(
        "field_time_partial", worst < DERIV_TOL, worst, DERIV_TOL,
        "analytic vs difference time partials, relative",
    ),)
    return ValidationReport(
        scene=scenario.name, t=base.t, samples=samples, seed=seed, checks=checks,
    )
