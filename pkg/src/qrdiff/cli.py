"""Command line entry point: ``qrdiff {simulate,check,energy,converge} <cfg>``.

Exit codes: 0 ok, 1 property violation, 2 configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys as _sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .audit import Sampling, audit
from .config import (
    RunConfig,
    build_grid,
    build_system,
    emit_config,
    exact_solution,
    initial_field,
)
from .config import parse_config
from .energy import (
    EnergyConfig,
    check_pd,
    dissipation_monitor,
    mass_control_monitor,
    plateau_ratio,
    select_theta,
    space_time_samples,
)
from .errors import ConfigError, IntegrationError, QrdError, SelectionError
from .grid import Grid, restrict
from .integrator import epsilon_sweep, integrate

log = logging.getLogger("qrdiff")

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


def _sampling(cfg: RunConfig) -> Sampling:
    a = cfg.audit
    return Sampling(U=a.U, extents=cfg.grid.extents, t_max=cfg.run.T, n_interior=a.n_interior,
                    n_face=a.n_face, seed=a.seed)


def run_check(cfg: RunConfig):
    """Audit the configured system; returns ``(exit_code, AuditReport)``."""
    sys = build_system(cfg)
    rep = audit(sys, _sampling(cfg), boundary=cfg.boundary.kind, mode=cfg.audit.mode, aux=cfg.audit.aux,
                sup_F=cfg.audit.sup_F)
    return (EXIT_OK if rep.all_passed else EXIT_VIOLATION), rep


def energy_configs(cfg: RunConfig, sys, orders=None):
    """Explicit or auto-selected weights per order; returns ``(configs, info, failures)``."""
    orders = cfg.energy.orders if orders is None else orders
    configs, info, failures = [], {}, {}
    samples = space_time_samples(cfg.grid.extents, cfg.run.T, cfg.energy.samples, cfg.audit.seed)
    for p in orders:
        if cfg.energy.theta is not None:
            ec = EnergyConfig(p, cfg.energy.theta)
            pd = check_pd(ec, sys, (p - 2,) + (0,) * (sys.m - 1), samples)
            info[p] = {"theta": list(ec.theta), "mode": "explicit", "min_eigenvalue": pd.min_eigenvalue}
            configs.append(ec)
            continue
        try:
            sel = select_theta(sys, p, cfg.audit.U, samples, seed=cfg.audit.seed)
        except SelectionError as exc:
            failures[p] = str(exc)
            continue
        configs.append(sel.config())
        info[p] = {"theta": list(sel.theta), "mode": "auto", "K_theta": sel.K_theta, "K_fit": sel.K_fit,
                   "min_eigenvalue": sel.min_eigenvalue, "n_checked": sel.n_checked}
    return configs, info, failures


def run_simulate(cfg: RunConfig, out=None, orders=None):
    """Integrate, monitor and write all artifacts; returns ``(exit_code, summary)``."""
    outdir = io.output_dir(cfg.output, out)
    sys = build_system(cfg)
    grid = build_grid(cfg)
    u0 = initial_field(cfg, sys, grid)
    (outdir / "config.ini").write_text(emit_config(cfg))
    summary = {"preset": cfg.model.preset, "species": list(sys.names), "grid": list(grid.shape)}
    violations = []

    if sys.structural is not None:
        code, rep = run_check(cfg)
        summary["audit"] = rep.as_dict()
        if code:
            violations.append("audit")
    energy_cfgs, info, failures = ([], {}, {}) if sys.structural is None else energy_configs(cfg, sys, orders)
    if failures:
        violations.append("theta_selection")
    summary["theta_failures"] = failures

    r = cfg.run
    sink = io.SnapshotSink(outdir / "snapshots", r.checkpoints, r.snapshots)
    monitor = r.monitor and sys.structural is not None
    report, state = integrate(sys, grid, u0, r.T, eps=r.eps, bc=cfg.boundary, control=r.control, sinks=(sink,),
                              checkpoints=r.checkpoints, energy_cfgs=energy_cfgs, keep_states=monitor)
    dissipation = {}
    if monitor:
        for ec in energy_cfgs:
            res = dissipation_monitor(report.times, report.states, grid, ec, sys, eps=r.eps)
            dissipation[ec.p] = res
            info[ec.p].update(alpha_hat=res.alpha_hat, C_hat=res.C_hat, fraction=res.fraction,
                              decay_rate=res.decay_rate, tolerance=res.tolerance)
            if res.fraction < 1.0:
                violations.append(f"dissipation_p{ec.p}")
        st = sys.structural
        mc = mass_control_monitor(report.times, report.weighted_mass, report.total_mass, st.K1, st.K2, grid.volume)
        summary["mass_control"] = {"ok": mc.ok, "min_margin": float(np.min(mc.margins)), "slack": mc.slack}
        if not mc.ok:
            violations.append("mass_control")
    if report.min_value < 0:
        violations.append("nonnegativity")

    io.write_series(outdir / "series.csv", report, dissipation)
    io.emit_plot_data(report, outdir)
    summary["energy"] = info
    summary["run"] = {
        "T": r.T, "eps": r.eps, "n_steps": report.n_steps, "n_rejected": report.n_rejected,
        "min_value": report.min_value, "clamp_mass": report.clamp_mass.tolist(),
        "clamp_fraction": report.clamp_fraction, "initial_mass": report.initial_mass,
        "final_mass": report.total_mass[-1], "plateau_ratio": plateau_ratio(report.times, report.linf).tolist(),
        "snapshots": [p.name for p in sink.paths],
    }
    summary["violations"] = violations
    code = EXIT_VIOLATION if violations else EXIT_OK
    summary["exit_code"] = code
    io.write_json(outdir / "report.json", summary)
    return code, summary


def _norm(diff, grid: Grid, kind: str) -> float:
    if kind == "max":
        return float(np.max(np.abs(diff)))
    return float(np.sqrt(np.sum(grid.integrate(diff**2))))


def _orders(errors):
    out = []
    for a, b in zip(errors, errors[1:]):
        out.append(float(np.log2(a / b)) if a > 0 and b > 0 else float("nan"))
    return out


def run_converge(cfg: RunConfig, levels=None, out=None):
    """Grid or regularisation study; returns ``(exit_code, table)``.

    Grid study: each level halves ``h``.  With an exact solution the error
    at ``T`` is measured per level; otherwise consecutive levels are compared
    after restricting the finer one, so ``levels`` runs give ``levels - 1``
    differences.  Orders are ``log2`` of successive error ratios.
    """
    c = cfg.converge
    levels = c.levels if levels is None else int(levels)
    if levels < 2:
        raise ConfigError("levels must be >= 2")
    sys = build_system(cfg)
    r = cfg.run
    if c.kind == "eps":
        grid = build_grid(cfg)
        u0 = initial_field(cfg, sys, grid)
        sw = epsilon_sweep(sys, grid, u0, r.T, c.eps, bc=cfg.boundary, control=r.control)
        table = {"kind": "eps", "eps": list(sw.eps), "gaps": sw.gaps.tolist(), "monotone": sw.monotone}
        code = EXIT_OK if sw.monotone else EXIT_VIOLATION
    else:
        exact = exact_solution(cfg)
        finals, grids = [], []
        for j in range(levels):
            shape = tuple(n * 2**j for n in cfg.grid.shape)
            lc = replace(cfg, grid=replace(cfg.grid, shape=shape))
            grid = build_grid(lc)
            u0 = initial_field(lc, sys, grid)
            _, state = integrate(sys, grid, u0, r.T, eps=r.eps, bc=cfg.boundary, control=r.control, checkpoints=2)
            finals.append(state.u)
            grids.append(grid)
        if exact is not None:
            errors = [_norm(u - exact(g, r.T), g, c.norm) for u, g in zip(finals, grids)]
            h = [g.h[0] for g in grids]
        else:
            errors = [_norm(finals[j] - restrict(finals[j + 1]), grids[j], c.norm) for j in range(levels - 1)]
            h = [g.h[0] for g in grids[:-1]]
        table = {"kind": "grid", "reference": "exact" if exact is not None else "self", "norm": c.norm,
                 "h": h, "errors": errors, "orders": _orders(errors)}
        code = EXIT_OK
    outdir = io.output_dir(cfg.output, out)
    io.write_json(outdir / "converge.json", table)
    return code, table


def format_converge(t) -> str:
    if t["kind"] == "eps":
        lines = ["eps study: pairwise space-time L2 gaps"]
        for (a, b), g in zip(zip(t["eps"], t["eps"][1:]), t["gaps"]):
            lines.append(f"  {a:.3g} vs {b:.3g}: {g:.6e}")
        lines.append(f"  strictly decreasing: {t['monotone']}")
        return "\n".join(lines)
    lines = [f"grid study ({t['reference']} reference, {t['norm']} norm)", "  h            error          order"]
    orders = [None] + t["orders"]
    for h, e, o in zip(t["h"], t["errors"], orders):
        lines.append(f"  {h:<12.6g} {e:<14.6e} {'' if o is None else f'{o:.3f}'}")
    return "\n".join(lines)


def _format_energy(summary) -> str:
    lines = []
    for p, d in sorted(summary.get("energy", {}).items()):
        lines.append(f"p = {p}: theta = {d['theta']} ({d['mode']}), min eigenvalue {d['min_eigenvalue']:.4g}")
        if "fraction" in d:
            lines.append(f"  alpha_hat {d['alpha_hat']:.4g}  C_hat {d['C_hat']:.4g}  "
                         f"satisfied fraction {d['fraction']:.4f}  decay rate {d['decay_rate']:.4g}")
    for p, msg in summary.get("theta_failures", {}).items():
        lines.append(f"p = {p}: selection failed: {msg}")
    return "\n".join(lines)


def _parse_orders(s: str):
    try:
        return tuple(int(v) for v in s.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qrdiff", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "integrate and write series, snapshots and report"),
                           ("check", "audit the structural hypotheses"),
                           ("energy", "select weights and monitor the energy functionals"),
                           ("converge", "grid or regularisation convergence study")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config", type=Path)
        sp.add_argument("-o", "--output", default=None, help="run directory (overrides [output])")
        if name == "energy":
            sp.add_argument("--p", type=_parse_orders, default=None, help="orders, e.g. 2,3")
        if name == "converge":
            sp.add_argument("--levels", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config)
        if args.command == "check":
            code, rep = run_check(cfg)
            print(rep.format_text())
        elif args.command == "simulate":
            code, summary = run_simulate(cfg, args.output)
            r = summary["run"]
            print(f"{summary['preset']}: {r['n_steps']} steps to T={r['T']:g}, min value {r['min_value']:.3g}, "
                  f"clamp fraction {r['clamp_fraction']:.3g}")
            print(_format_energy(summary))
            if summary["violations"]:
                print("violations: " + ", ".join(summary["violations"]))
        elif args.command == "energy":
            code, summary = run_simulate(cfg, args.output, orders=args.p)
            print(_format_energy(summary))
        else:
            code, table = run_converge(cfg, args.levels, args.output)
            print(format_converge(table))
        return code
    except ConfigError as exc:
        print("configuration error:", file=_sys.stderr)
        for e in exc.errors:
            print(f"  {e}", file=_sys.stderr)
        return EXIT_CONFIG
    except IntegrationError as exc:
        print(f"runtime failure at t = {exc.t:.6g}: {exc}", file=_sys.stderr)
        return EXIT_RUNTIME
    except (QrdError, OSError) as exc:
        print(f"runtime failure: {exc}", file=_sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    _sys.exit(main())
