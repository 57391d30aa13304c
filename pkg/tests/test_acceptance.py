"""End-to-end acceptance criteria at desk scale.

Each test prints a one-line verdict in the terminal summary (see
``conftest.py``).  Run standalone with ``python tests/test_acceptance.py``.
"""
import time
from dataclasses import replace

import numpy as np
import pytest

from qrdiff.audit import PASSED, VIOLATED, Sampling, admissible_r_bound, audit, check_mass_control, \
    check_polynomial_growth, check_quasi_positivity
from qrdiff.cli import run_converge
from qrdiff.config import parse_config_text
from qrdiff.energy import (
    EnergyConfig,
    check_pd,
    derivative_identity_check,
    dissipation_monitor,
    enumerate_multi_indices,
    hp_pointwise,
    plateau_ratio,
    select_theta,
    space_time_samples,
    state_samples,
)
from qrdiff.grid import BoundarySpec, Grid, boundary_trace_integral
from qrdiff.integrator import SimState, epsilon_sweep, integrate, stable_dt, step
from qrdiff.model import evaluate_reactions
from qrdiff.seird import (
    SeirdParams,
    build_seird_delta,
    build_seird_heterogeneous,
    build_seird_original,
    build_seird_quadratic,
    seird_initial_profiles,
)

from conftest import make_system

SQUARE = Grid((64, 64), (1.0, 1.0))


def detail(record_property, text):
    record_property("detail", text)
    print(text)


@pytest.fixture(scope="module")
def seird_runs():
    """The three 64x64, T = 5 gaussian runs shared by criteria 2 and 3."""
    u0 = seird_initial_profiles("gaussian", SQUARE)
    out = {}
    for key, params in (("default", SeirdParams()), ("decay", SeirdParams(alpha=0.0, mu=0.1)),
                        ("balanced", SeirdParams(alpha=0.1, mu=0.1))):
        out[key] = integrate(build_seird_quadratic(params), SQUARE, u0, 5.0, checkpoints=101)[0]
    return out


def test_criterion_01_heat_exact_solution(record_property, tmp_path):
    cfg = parse_config_text("[model]\npreset = heat\n[grid]\nshape = 32\n[run]\nT = 0.1\n")
    t0 = time.perf_counter()
    _, table = run_converge(cfg, 3, tmp_path)
    elapsed = time.perf_counter() - t0
    err = table["errors"][-1]
    detail(record_property, f"h=1/128 error {err:.3e}, orders {np.round(table['orders'], 3).tolist()}, "
                            f"{elapsed:.2f} s")
    assert table["h"][-1] == pytest.approx(1 / 128)
    assert err <= 5e-3
    assert all(1.8 <= o <= 2.2 for o in table["orders"])
    assert elapsed < 10.0


def test_criterion_02_nonnegativity(seird_runs, record_property):
    rep = seird_runs["default"]
    detail(record_property, f"min {rep.min_value:.3e}, clamp fraction {rep.clamp_fraction:.3e}")
    assert rep.min_value >= 0.0
    assert rep.clamp_fraction <= 1e-8


def test_criterion_03_mass_control(seird_runs, record_property):
    d = np.diff(seird_runs["decay"].total_mass)
    b = np.diff(seird_runs["balanced"].total_mass)
    slack = 1e-8 * max(1.0, float(np.max(seird_runs["balanced"].total_mass)))
    detail(record_property, f"decay max step {d.max():.3e}, balanced max step {b.max():.3e}")
    assert np.all(d < 0)
    assert np.all(d <= slack)
    assert np.all(b <= slack)


def test_criterion_04_uniform_plateau(record_property):
    g = Grid((32, 32), (1.0, 1.0))
    sys = build_seird_quadratic(SeirdParams(alpha=0.05, mu=0.05))
    t0 = time.perf_counter()
    rep, _ = integrate(sys, g, seird_initial_profiles("gaussian", g), 200.0, checkpoints=401)
    elapsed = time.perf_counter() - t0
    ratio = plateau_ratio(rep.times, rep.linf, split=100.0)
    detail(record_property, f"late/early sup ratios {np.round(ratio, 4).tolist()}, {elapsed:.1f} s")
    assert np.all(ratio <= 1.01)
    assert elapsed < 300.0


def test_criterion_05_energy_machinery(record_property):
    rng = np.random.default_rng(5)
    u = rng.uniform(0, 5, (4, 1000))
    worst = 0.0
    for p in (2, 3, 4):
        ones = EnergyConfig(p, (1.0,) * 4)
        exact = np.sum(u, axis=0) ** p
        rel = np.max(np.abs(hp_pointwise(u, ones) - exact) / exact)
        worst = max(worst, rel)
        assert rel <= 1e-12
        cfg = EnergyConfig(p, (3.0, 1.5, 2.0, 1.0))
        h = hp_pointwise(u, cfg)
        s = np.sum(u**p, axis=0)
        assert np.all(cfg.c_low * s <= h * (1 + 1e-12))
        assert np.all(h <= cfg.c_high * s * (1 + 1e-12))
    g = Grid((32, 32), (1.0, 1.0))
    sys = build_seird_quadratic()
    rep, _ = integrate(sys, g, seird_initial_profiles("gaussian", g, width=0.1), 1.0, checkpoints=5,
                       keep_states=True)
    cfg = EnergyConfig(3, (16.0, 2.0, 2.0, 2.0))
    ratios = []
    for k in (1, 2, 3):
        st = SimState(rep.states[k], float(rep.times[k]))
        dt = 0.5 * stable_dt(sys, g, st)
        d = [derivative_identity_check(st.u, step(sys, g, st, h).u, h, cfg) for h in (dt, dt / 2)]
        ratios.append(d[0] / d[1])
    detail(record_property, f"closure rel err {worst:.1e}, identity halving ratios {np.round(ratios, 3).tolist()}")
    assert all(1.5 <= r <= 2.5 for r in ratios)


def test_criterion_06_theta_selection(record_property):
    sys = build_seird_quadratic()
    samples = space_time_samples((1.0, 1.0), 1.0, 64, seed=0)
    rng = np.random.default_rng(6)
    out = []
    for p in (2, 3):
        sel = select_theta(sys, p, 10.0, samples)
        cfg = sel.config()
        betas = enumerate_multi_indices(4, p - 2).indices
        for _ in range(100):
            x = rng.uniform(0, 1, 2)
            t = float(rng.uniform(0, 1))
            beta = betas[rng.integers(len(betas))]
            assert check_pd(cfg, sys, beta, [(x, t)]).min_eigenvalue > 0
        uu = state_samples(4, 10.0, 10_000, seed=7)
        f = evaluate_reactions(sys, np.zeros((2, uu.shape[1])), 0.0, uu)
        rhs = sel.K_theta * (1 + np.sum(uu ** sys.structural.r, axis=0))
        th = np.asarray(sel.theta)
        for beta in enumerate_multi_indices(4, p - 1).indices:
            lhs = np.tensordot(th ** (2 * np.asarray(beta) + 1), f, axes=1)
            assert np.all(lhs <= rhs + 1e-9 * (1 + np.abs(lhs)))
        out.append(f"p={p} theta={sel.theta}")
    detail(record_property, "; ".join(out))


def test_criterion_07_dissipation_monitor(record_property):
    g = Grid((32, 32), (1.0, 1.0))
    quad = build_seird_quadratic(SeirdParams(alpha=0.02, mu=0.05))
    pure = replace(quad, reactions=lambda x, t, u: np.zeros_like(u), extra_rates=None, extra_names=())
    u0 = seird_initial_profiles("gaussian", g, mass=0.05, width=0.08)
    cfgs = [EnergyConfig(p, th) for p, th in ((2, (16.0, 2.0, 2.0, 2.0)), (3, (64.0, 2.0, 2.0, 2.0)))]
    rep, _ = integrate(pure, g, u0, 1.0, checkpoints=41, energy_cfgs=cfgs)
    for p in (2, 3):
        # theta_1^(p^2) puts L_3 near 1e16, so compare at float64 resolution
        e = rep.energies[p]
        assert np.all(np.diff(e) <= 4 * np.finfo(float).eps * e[:-1])
    samples = space_time_samples((1.0, 1.0), 5.0, 64)
    rep, _ = integrate(quad, g, u0, 5.0, checkpoints=51, keep_states=True)
    fractions = []
    for p in (2, 3):
        cfg = select_theta(quad, p, 10.0, samples).config()
        res = dissipation_monitor(rep.times, rep.states, g, cfg, quad, tol_rel=1e-6)
        fractions.append(res.fraction)
    detail(record_property, f"pure diffusion nonincreasing; SEIRD satisfied fractions {fractions}")
    assert fractions == [1.0, 1.0]


def test_criterion_08_checker(record_property):
    s = Sampling(U=10.0, n_interior=1024, n_face=256)
    fixtures = {
        "quasi-positivity": (make_system(lambda x, t, u: -np.ones_like(u)), lambda sys: check_quasi_positivity(sys, s)),
        "mass control": (make_system(lambda x, t, u: u**2), lambda sys: check_mass_control(sys, (1,), 1.0, 1.0, s)),
        "growth": (make_system(lambda x, t, u: np.exp(u)), lambda sys: check_polynomial_growth(sys, 2.0, 1.0, s)),
    }
    for name, (sys, check) in fixtures.items():
        v = check(sys)
        assert v.status == VIOLATED, name
        w = v.witness
        f = evaluate_reactions(sys, w.x.reshape(-1, 1), w.t, w.u.reshape(-1, 1))[0, 0]
        if name == "quasi-positivity":
            assert w.u[0] == 0 and f < 0
        elif name == "mass control":
            assert f > w.u[0] + 1.0
        else:
            assert f > 1.0 + w.u[0] ** 2
    hetero = build_seird_heterogeneous(SeirdParams(beta_i_fn=lambda i, n: 1 + 0 * i, beta_e_fn=lambda e, n: 0.5 + 0 * e,
                                                   response_bounds=(1.0, 0.5)))
    for sys in (build_seird_original(), build_seird_quadratic(), build_seird_delta(), hetero):
        rep = audit(sys, Sampling(U=10.0))
        assert rep.all_passed, sys.label
        assert all(v.status in (PASSED, "not_applicable") for v in rep.verdicts.values())
    r1 = admissible_r_bound(1, 2, "th1")
    r0 = admissible_r_bound(0, 2, "th1")
    detail(record_property, f"3 fixtures violated with witnesses; presets pass; r bounds {r1}, {r0}")
    assert r1 == 3 and r0 == 2


def test_criterion_09_eps_cauchy(record_property):
    g = Grid((128,), (1.0,))
    sys = build_seird_quadratic(SeirdParams(domain=(1.0,)))
    u0 = seird_initial_profiles("gaussian", g, width=0.05)
    sw = epsilon_sweep(sys, g, u0, 1.0, (1e-2, 1e-3, 1e-4))
    detail(record_property, f"gaps {[f'{v:.3e}' for v in sw.gaps]}")
    assert sw.monotone


def test_criterion_10_robin_mass_loss(record_property):
    g = Grid((64,), (1.0,))
    sys = make_system(lambda x, t, u: np.zeros_like(u))
    bc = BoundarySpec("robin", (1.0,))
    st = SimState(1.0 + np.cos(np.pi * g.centers), 0.0)
    m0 = float(np.sum(g.integrate(st.u)))
    outflow = 0.0
    T = 0.5
    while st.t < T:
        dt = min(stable_dt(sys, g, st, bc=bc), T - st.t)
        outflow += dt * 1.0 * boundary_trace_integral(g, st.u, 0)
        st = step(sys, g, st, dt, bc=bc)
    loss = m0 - float(np.sum(g.integrate(st.u)))
    rel = abs(loss - outflow) / outflow
    detail(record_property, f"mass loss {loss:.6f}, accumulated outflow {outflow:.6f}, rel diff {rel:.2e}")
    assert rel <= 0.02


if __name__ == "__main__":
    import sys as _sys

    _sys.exit(pytest.main([__file__, "-q"]))
