"""Command line front end.

Verbs: list, run, sweep, validate, all. Human-readable tables go to
stdout; --out writes json or csv records and, unless disabled, figures
next to the output file. Exit codes: 0 every check passed, 1 at least
one residual over tolerance, 2 configuration or scenario error.
"""
from __future__ import annotations

import argparse
import sys

from .config import (
    CONFIG_ENV_VAR,
    ConfigError,
    Numerics,
    load_config,
    numerics_from_config,
)
from .errors import LabError
from .geometry import reparametrization_gap
from .quadrature import GAUSS_TENSOR, QuadratureRule
from .reporting import render_table, write_records
from .scenarios import (
    SMOOTH_SCENARIOS,
    build_all,
    build_scenario,
    coordinate_field,
    divergence_fields,
    one_field,
    x0_sq_field,
)
from .spacetime import (
    divergence_parts,
    lateral_integral_direct,
    lateral_integral_iterated,
)
from .transport import leibniz_check, reynolds_check, run_sweep, verify_transport
from .validation import validate_scenario

_SWEEP_PARAMS = {"h": "fd_step", "order": "quad_order", "mc": "monte_carlo"}
_DEFAULT_GRIDS = {
    "h": (1e-1, 1e-2, 1e-3, 1e-4),
    "order": (4, 8, 16, 32),
    "mc": (1_000, 10_000, 100_000, 1_000_000),
}
_RUN_COLUMNS = [
    "scenario", "field", "t", "lhs", "rhs", "rel_residual", "passed", "failure",
]
LATERAL_TOL = 1e-8
DIVERGENCE_TOL = 1e-6
REPARAM_TOL = 1e-6
FD_SLOPE_BAND = (1.8, 2.2)
MC_SLOPE_BAND = (-0.6, -0.4)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", default=None,
        help=f"JSON config path (falls back to ${CONFIG_ENV_VAR})",
    )
    common.add_argument("--out", default=None, help="machine-readable report path")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="report format, default json")
    common.add_argument("--order", type=int, default=None, help="gauss order per axis")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized paths")
    common.add_argument("--figures", action=argparse.BooleanOptionalAction, default=None,
                        help="render figures next to --out (default on)")

    p = argparse.ArgumentParser(
        prog="evolve-transport",
        description="Verify transport identities on evolving domains.",
    )
    sub = p.add_subparsers(dest="verb", required=True)

    sub.add_parser("list", parents=[common], help="show scenarios and fields")

    pr = sub.add_parser("run", parents=[common], help="verify the transport identity")
    pr.add_argument("scenario")
    pr.add_argument("--field", default=None, help="field name, default all defaults")
    pr.add_argument("--t", type=float, default=None, help="time, default interior times")
    pr.add_argument("--h", type=float, default=None, help="difference step")
    pr.add_argument("--tol", type=float, default=None, help="pass tolerance")

    ps = sub.add_parser("sweep", parents=[common], help="convergence study")
    ps.add_argument("scenario")
    ps.add_argument("--param", choices=tuple(_SWEEP_PARAMS), required=True)
    ps.add_argument("--grid", default=None, help="comma-separated grid values")
    ps.add_argument("--field", default=None)
    ps.add_argument("--t", type=float, default=None)

    pv = sub.add_parser("validate", parents=[common], help="sampled scene checks")
    pv.add_argument("scenario")
    pv.add_argument("--t", type=float, default=None)
    pv.add_argument("--samples", type=int, default=None)

    sub.add_parser("all", parents=[common], help="full verification battery")
    return p


def _pick(flag, cfg, key, default):
    if flag is not None:
        return flag
    return cfg.get(key, default)


def _numerics(args, cfg) -> Numerics:
    num = numerics_from_config(cfg)
    over = {}
    if args.order is not None:
        over["gauss_order"] = args.order
    if args.seed is not None:
        over["seed"] = args.seed
    return num.replace(**over) if over else num


def _tolerance_for(name: str, args, cfg):
    tol = getattr(args, "tol", None)
    if tol is not None:
        return tol
    per = cfg.get("tolerances", {})
    if name in per:
        return float(per[name])
    if "tol" in cfg:
        return float(cfg["tol"])
    return None


def _emit(args, cfg, records, figure_jobs=()) -> None:
    """Write records and render figures when an output path was given."""
    if not args.out:
        return
    fmt = _pick(args.format, cfg, "format", "json")
    write_records(args.out, records, fmt)
    if not _pick(args.figures, cfg, "figures", True):
        return
    from . import figures as figs

    for tag, draw in figure_jobs:
        draw(figs, figs.figure_path(args.out, tag))


def _cmd_list(args, cfg, num) -> int:
    records = []
    for sc in build_all(num, cfg.get("tolerances")):
        dom = sc.domain
        records.append({
            "scenario": sc.name,
            "ambient_dim": dom.ambient_dim,
            "intrinsic_dim": dom.intrinsic_dim,
            "window": f"({sc.window[0]:g}, {sc.window[1]:g})",
            "fields": " ".join(sc.fields),
            "tolerance": sc.tolerance,
            "self_intersecting": "yes" if sc.self_intersecting else "no",
        })
    print(render_table(records))
    _emit(args, cfg, records)
    return 0


def _transport_records(scenario, ts, names, h, rule, tolerance):
    reports = []
    for t in ts:
        for name in names:
            reports.append(verify_transport(scenario, name, t, h=h, rule=rule,
                                            tolerance=tolerance))
    return reports


def _cmd_run(args, cfg, num) -> int:
    tol = _tolerance_for(args.scenario, args, cfg)
    scenario = build_scenario(args.scenario, num, tol)
    if args.field is not None and args.field not in scenario.fields:
        known = ", ".join(scenario.fields)
        raise ConfigError(f"unknown field {args.field!r} (known: {known})")
    names = [args.field] if args.field else list(scenario.default_fields)
    ts = [args.t] if args.t is not None else list(scenario.times(cfg.get("times", 5)))
    h = _pick(args.h, cfg, "h", None)
    rule = QuadratureRule(GAUSS_TENSOR, num.gauss_order)
    reports = _transport_records(scenario, ts, names, h, rule, None)
    records = [r.as_record() for r in reports]
    print(render_table(records, _RUN_COLUMNS))
    _emit(args, cfg, records, (
        ("snapshot", lambda figs, p: figs.scenario_snapshot(scenario, p)),
        ("residuals", lambda figs, p: figs.residual_overview(records, p)),
    ))
    return 0 if all(r.passed for r in reports) else 1


def _parse_grid(text: str | None, param: str):
    if text is None:
        vals = _DEFAULT_GRIDS[param]
    else:
        try:
            vals = [float(v) for v in text.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --grid value: {exc}") from None
        if len(vals) < 2:
            raise ConfigError("--grid wants at least two comma-separated values")
    if param in ("order", "mc"):
        return [int(v) for v in vals]
    return list(vals)


def _cmd_sweep(args, cfg, num) -> int:
    scenario = build_scenario(args.scenario, num, _tolerance_for(args.scenario, args, cfg))
    # last default field is the one with spatial structure; phi = 1 on a
    # shrinking disk differentiates to machine noise and fits nothing
    field = args.field or scenario.default_fields[-1]
    if field not in scenario.fields:
        known = ", ".join(scenario.fields)
        raise ConfigError(f"unknown field {field!r} (known: {known})")
    t = args.t if args.t is not None else scenario.times(1)[0]
    grid = _parse_grid(args.grid, args.param)
    rule = QuadratureRule(GAUSS_TENSOR, num.gauss_order)
    result = run_sweep(scenario, field, t, _SWEEP_PARAMS[args.param], grid,
                       rule=rule, seed=num.seed)
    records = [
        {
            "scenario": result.scenario,
            "field": result.field,
            "t": result.t,
            "parameter": result.parameter,
            "grid_value": g,
            "error": e,
            "slope": result.slope,
            "monotone": result.monotone,
            "reference_kind": result.reference_kind,
        }
        for g, e in zip(result.grid, result.errors)
    ]
    print(render_table(records, ["parameter", "grid_value", "error"]))
    slope = "n/a" if result.slope is None else f"{result.slope:.4f}"
    print(f"fitted slope {slope} against {result.reference_kind} reference; "
          f"monotone: {'yes' if result.monotone else 'no'}")
    _emit(args, cfg, records, (
        ("sweep", lambda figs, p: figs.sweep_figure(result, p)),
    ))
    return 0


def _validation_records(report):
    return [
        {
            "scenario": report.scene,
            "t": report.t,
            "check": c.name,
            "passed": c.passed,
            "worst": c.worst,
            "tolerance": c.tolerance,
            "detail": c.detail,
        }
        for c in report.checks
    ]


def _cmd_validate(args, cfg, num) -> int:
    scenario = build_scenario(args.scenario, num, _tolerance_for(args.scenario, args, cfg))
    samples = _pick(args.samples, cfg, "samples", 500)
    ts = [args.t] if args.t is not None else list(scenario.times(cfg.get("times", 5)))
    records = []
    ok = True
    for t in ts:
        report = validate_scenario(scenario, t, samples=samples, seed=num.seed)
        ok = ok and report.passed
        records.extend(_validation_records(report))
        for line in report.lines():
            print(line)
    _emit(args, cfg, records)
    return 0 if ok else 1


def _interval_record(case: str, rep) -> dict:
    return {
        "kind": "leibniz",
        "case": case,
        "t": rep.t,
        "h": rep.h,
        "lhs": rep.lhs,
        "machinery_rhs": rep.machinery_rhs,
        "endpoint_rhs": rep.endpoint_rhs,
        "max_discrepancy": rep.max_discrepancy,
        "tolerance": rep.tolerance,
        "passed": rep.passed,
    }


def _cmd_all(args, cfg, num) -> int:
    """Every check the package knows how to run, in a fixed order."""
    times_count = cfg.get("times", 5)
    h = cfg.get("h", None)
    rule = QuadratureRule(GAUSS_TENSOR, num.gauss_order)
    scenarios = build_all(num, cfg.get("tolerances"))
    by_name = {sc.name: sc for sc in scenarios}
    records = []
    ok = True
    figure_jobs = []

    # transport identity over the whole registry
    transport_records = []
    for sc in scenarios:
        reports = _transport_records(sc, sc.times(times_count), sc.default_fields,
                                     h, rule, None)
        ok = ok and all(r.passed for r in reports)
        transport_records.extend({"kind": "transport", **r.as_record()} for r in reports)
    records.extend(transport_records)

    # interval special cases with known endpoint values
    lb = [
        ("static", leibniz_check(lambda t: 0.0, lambda t: 1.0, x0_sq_field(), 0.5,
                                 a_dot=lambda t: 0.0, b_dot=lambda t: 0.0, rule=rule)),
        ("moving", leibniz_check(lambda t: t, lambda t: 2.0 + t * t, coordinate_field(0),
                                 1.0, a_dot=lambda t: 1.0, b_dot=lambda t: 2.0 * t,
                                 rule=rule)),
        ("symmetric", leibniz_check(lambda t: -t, lambda t: t, one_field(), 1.0,
                                    a_dot=lambda t: -1.0, b_dot=lambda t: 1.0,
                                    rule=rule)),
    ]
    for case, rep in lb:
        ok = ok and rep.passed
        records.append(_interval_record(case, rep))

    # flat 3-space flux special case
    rey = reynolds_check(by_name["expanding_ball"], "one", 0.0, h=h, rule=rule)
    ok = ok and rey.passed
    records.append({"kind": "reynolds", **rey.as_record()})

    # lateral-boundary integral, direct against iterated; the wall area
    # factor of a boundary with crossings has complex singularities
    # close to the parameter axis, so those scenarios get a deeper rule
    phi = one_field()
    for sc in scenarios:
        t0, t1 = sc.window
        span = t1 - t0
        s0, s1 = t0 + 0.2 * span, t0 + 0.7 * span
        lat_rule = rule
        if sc.domain.boundary.smoothness_breaks is not None:
            lat_rule = rule.with_order(max(64, rule.order_or_count))
        direct = lateral_integral_direct(sc.domain, s0, s1, phi, lat_rule)
        iterated = lateral_integral_iterated(sc.domain, s0, s1, phi, lat_rule)
        gap = abs(direct.value - iterated.value)
        tol = LATERAL_TOL * (1.0 + abs(direct.value))
        good = gap < tol
        ok = ok and good
        records.append({
            "kind": "lateral", "scenario": sc.name, "t0": s0, "t1": s1,
            "direct": direct.value, "iterated": iterated.value,
            "gap": gap, "tolerance": tol, "passed": good,
        })

    # swept-region divergence identity on the smooth scenarios
    for name in SMOOTH_SCENARIOS:
        sc = by_name[name]
        t0, t1 = sc.window
        span = t1 - t0
        s0, s1 = t0 + 0.2 * span, t0 + 0.7 * span
        for afield in divergence_fields(sc.domain.ambient_dim):
            rep = divergence_parts(sc.domain, s0, s1, afield, rule)
            good = rep.residual < DIVERGENCE_TOL
            ok = ok and good
            records.append({
                "kind": "divergence", "scenario": sc.name, "field": rep.field,
                "t0": rep.t0, "t1": rep.t1, "volume": rep.volume,
                "bottom": rep.bottom, "lateral": rep.lateral, "top": rep.top,
                "residual": rep.residual, "tolerance": DIVERGENCE_TOL,
                "passed": good,
            })

    # normal speed must not see tangential reparametrization
    for sc in scenarios:
        if sc.alt_boundary is None:
            continue
        t = sc.times(1)[0]
        gap = reparametrization_gap(sc.domain, sc.alt_boundary, t, seed=num.seed)
        good = gap.max_gap < REPARAM_TOL
        ok = ok and good
        records.append({
            "kind": "reparam", "scenario": sc.name, "t": t,
            "samples": gap.samples, "max_gap": gap.max_gap,
            "mean_gap": gap.mean_gap, "tolerance": REPARAM_TOL, "passed": good,
        })

    # sampled scene checks
    samples = cfg.get("samples", 300)
    for sc in scenarios:
        t = sc.times(1)[0]
        rep = validate_scenario(sc, t, samples=samples, seed=num.seed)
        ok = ok and rep.passed
        for rec in _validation_records(rep):
            records.append({"kind": "validate", **rec})

    # convergence sweeps
    disk = by_name["shrinking_disk"]
    fd = run_sweep(disk, "one_plus_x0_sq", 0.25, "fd_step",
                   list(_DEFAULT_GRIDS["h"]), rule=rule, seed=num.seed)
    fd_good = fd.slope is not None and FD_SLOPE_BAND[0] < fd.slope < FD_SLOPE_BAND[1]
    ok = ok and fd_good
    records.append({"kind": "sweep", "passed": fd_good, **fd.as_record()})
    figure_jobs.append(("sweep_fd", lambda figs, p, r=fd: figs.sweep_figure(r, p)))

    qo = run_sweep(disk, "one_plus_x0_sq", 0.25, "quad_order",
                   list(_DEFAULT_GRIDS["order"]), rule=rule, seed=num.seed)
    ok = ok and qo.monotone
    records.append({"kind": "sweep", "passed": qo.monotone, **qo.as_record()})
    figure_jobs.append(("sweep_order", lambda figs, p, r=qo: figs.sweep_figure(r, p)))

    if cfg.get("include_mc_sweep", True):
        mc = run_sweep(disk, "one", 0.25, "monte_carlo",
                       list(_DEFAULT_GRIDS["mc"]), rule=rule, seed=num.seed)
        mc_good = mc.slope is not None and MC_SLOPE_BAND[0] < mc.slope < MC_SLOPE_BAND[1]
        ok = ok and mc_good
        records.append({"kind": "sweep", "passed": mc_good, **mc.as_record()})
        figure_jobs.append(("sweep_mc", lambda figs, p, r=mc: figs.sweep_figure(r, p)))

    print(render_table(
        [r for r in records if r["kind"] == "transport"],
        ["scenario", "field", "t", "rel_residual", "passed", "failure"],
    ))
    counts: dict[str, list[int]] = {}
    for rec in records:
        entry = counts.setdefault(rec["kind"], [0, 0])
        entry[1] += 1
        if rec.get("passed", True):
            entry[0] += 1
    for kind, (good, total) in counts.items():
        print(f"{kind}: {good}/{total} passed")
    print("overall:", "PASS" if ok else "FAIL")

    figure_jobs.append(("residuals",
                        lambda figs, p: figs.residual_overview(transport_records, p)))
    for sc in scenarios:
        figure_jobs.append((f"snapshot_{sc.name}",
                            lambda figs, p, s=sc: figs.scenario_snapshot(s, p)))
    _emit(args, cfg, records, tuple(figure_jobs))
    return 0 if ok else 1


_HANDLERS = {
    "list": _cmd_list,
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "all": _cmd_all,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        num = _numerics(args, cfg)
        return _HANDLERS[args.verb](args, cfg, num)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
