import math
from itertools import product

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from qrdiff.energy import (
    EnergyConfig,
    assemble_b,
    assemble_b_tilde,
    check_pd,
    derivative_identity_check,
    dissipation_monitor,
    enumerate_multi_indices,
    hp_gradient,
    hp_pointwise,
    lp_energy,
    lp_equivalence_bounds,
    mass_control_monitor,
    mass_functional,
    multinomial_coeff,
    norms,
    plateau_ratio,
    select_theta,
    space_time_samples,
)
from qrdiff.errors import ConfigError, ContractError, SelectionError
from qrdiff.grid import Grid
from qrdiff.integrator import integrate
from qrdiff.seird import SeirdParams, build_seird_quadratic, seird_initial_profiles

from conftest import make_system, semilinear_structural

SAMPLES = [(np.array([0.5, 0.5]), 0.0)]


def test_multinomial_examples():
    assert multinomial_coeff(3, (1, 2)) == 3
    assert multinomial_coeff(2, (2, 0, 0, 0)) == 1
    idx = enumerate_multi_indices(4, 3)
    assert sum(multinomial_coeff(3, b) for b in idx.indices) == 64
    assert multinomial_coeff(20, (5, 5, 5, 5)) == math.factorial(20) // math.factorial(5) ** 4


def test_multinomial_errors():
    with pytest.raises(ContractError):
        multinomial_coeff(3, (1, 1))
    with pytest.raises(ConfigError):
        multinomial_coeff(70, (35, 35))


def test_enumeration_examples():
    assert enumerate_multi_indices(2, 2).indices == ((2, 0), (1, 1), (0, 2))
    assert len(enumerate_multi_indices(4, 2)) == 10
    assert enumerate_multi_indices(1, 5).indices == ((5,),)
    assert len(enumerate_multi_indices(4, 8)) == 165


@given(st.integers(1, 5), st.integers(0, 7))
def test_enumeration_complete_sorted_unique(m, p):
    idx = enumerate_multi_indices(m, p).indices
    assert len(idx) == math.comb(p + m - 1, m - 1)
    assert len(set(idx)) == len(idx)
    assert list(idx) == sorted(idx, reverse=True)
    assert all(sum(b) == p and min(b) >= 0 for b in idx)


def test_hp_examples():
    cfg = EnergyConfig(2, (1.0, 1.0))
    assert hp_pointwise(np.array([[1.0], [1.0]]), cfg)[0] == 4.0
    t1, t2, u1, u2 = 1.5, 2.5, 0.7, 1.3
    cfg = EnergyConfig(2, (t1, t2))
    explicit = t1**4 * u1**2 + 2 * t1 * t2 * u1 * u2 + t2**4 * u2**2
    assert hp_pointwise(np.array([[u1], [u2]]), cfg)[0] == pytest.approx(explicit, rel=1e-14)
    assert hp_pointwise(np.zeros((3, 1)), EnergyConfig(3, (2.0, 3.0, 5.0)))[0] == 0.0


def test_energy_order_cap_and_validation():
    with pytest.raises(ConfigError):
        EnergyConfig(9, (1.0,))
    assert EnergyConfig(9, (1.0,), p_max=10).p == 9
    with pytest.raises(ConfigError):
        EnergyConfig(1, (1.0,))
    with pytest.raises(ConfigError):
        EnergyConfig(2, (1.0, 0.0))


@pytest.mark.parametrize("p", [2, 3, 4])
def test_multinomial_closure(p, rng):
    u = rng.uniform(0, 10, size=(4, 1000))
    h = hp_pointwise(u, EnergyConfig(p, (1.0,) * 4))
    assert np.max(np.abs(h / np.sum(u, axis=0) ** p - 1)) <= 1e-12


@given(st.integers(1, 4), st.integers(2, 5), st.integers(0, 2**31 - 1))
@settings(max_examples=40)
def test_sandwich(m, p, seed):
    rng = np.random.default_rng(seed)
    theta = tuple(rng.uniform(1, 3, m))
    cfg = EnergyConfig(p, theta)
    u = rng.uniform(0, 5, size=(m, 200))
    lo, hi = lp_equivalence_bounds(cfg)
    h = hp_pointwise(u, cfg)
    s = np.sum(u**p, axis=0)
    assert np.all(lo * s <= h * (1 + 1e-12))
    assert np.all(h <= hi * s * (1 + 1e-12))


def test_bounds_examples():
    assert lp_equivalence_bounds(EnergyConfig(3, (1.0,) * 4)) == (1.0, 16.0)
    lo, hi = lp_equivalence_bounds(EnergyConfig(3, (1.5,)))
    assert lo == hi == 1.5**9


@given(arrays(float, (3, 4), elements=st.floats(0.05, 4)), st.integers(2, 4))
@settings(max_examples=40)
def test_gradient_matches_finite_differences(u, p):
    cfg = EnergyConfig(p, (1.3, 1.0, 2.0))
    g = hp_gradient(u, cfg)
    h = 1e-6
    for j in range(3):
        up, dn = u.copy(), u.copy()
        up[j] += h
        dn[j] -= h
        fd = (hp_pointwise(up, cfg) - hp_pointwise(dn, cfg)) / (2 * h)
        assert np.allclose(g[j], fd, rtol=1e-6, atol=1e-6)


def test_lp_energy_examples():
    g = Grid((50,), (1.0,))
    x = g.centers[0]
    assert lp_energy(np.zeros((2, 50)), g, EnergyConfig(2, (3.0, 2.0))) == 0.0
    u = (1 + x)[None]
    assert lp_energy(u, g, EnergyConfig(3, (1.2,))) == pytest.approx(1.2**9 * g.integrate(u[0] ** 3))
    v = np.stack([x, x**2])
    assert lp_energy(v, g, EnergyConfig(3, (1.0, 1.0))) == pytest.approx(float(g.integrate((x + x**2) ** 3)))


@given(arrays(float, (2, 6), elements=st.floats(0, 3)), st.integers(0, 1), st.integers(0, 5), st.floats(0.01, 1))
@settings(max_examples=40)
def test_energy_monotone_in_each_species(u, i, j, bump):
    cfg = EnergyConfig(3, (1.7, 1.1))
    g = Grid((6,), (1.0,))
    v = u.copy()
    v[i, j] += bump
    assert lp_energy(v, g, cfg) >= lp_energy(u, g, cfg)


def test_b_tilde_examples():
    sys1 = make_system(lambda x, t, u: 0 * u)
    assert check_pd((3.0,), sys1, (), SAMPLES).min_eigenvalue == pytest.approx(9.0)
    sys2 = make_system(lambda x, t, u: 0 * u, m=2)
    r = check_pd((1.0, 1.0), sys2, (), SAMPLES)
    assert not r.ok and abs(r.min_eigenvalue) < 1e-14
    r = check_pd(EnergyConfig(2, (2.0, 2.0)), sys2, (0, 0), SAMPLES)
    assert r.ok and r.min_eigenvalue == pytest.approx(3.0)
    with pytest.raises(ContractError):
        check_pd(EnergyConfig(3, (2.0, 2.0)), sys2, (0, 0), SAMPLES)


@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
@settings(max_examples=40)
def test_unscaled_matrix_congruent(m, seed):
    rng = np.random.default_rng(seed)
    theta = rng.uniform(1, 3, m)
    D = np.stack([np.eye(2) * d for d in rng.uniform(0.1, 2, m)])
    beta = rng.integers(0, 3, m)
    ev_b = np.linalg.eigvalsh(assemble_b(theta, D, beta))[0]
    ev_t = np.linalg.eigvalsh(assemble_b_tilde(theta, D))[0]
    assert np.sign(round(ev_b, 12)) == np.sign(round(ev_t, 12)) or min(abs(ev_b), abs(ev_t)) < 1e-9


@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
@settings(max_examples=40)
def test_pd_monotone_in_theta(m, seed):
    rng = np.random.default_rng(seed)
    d = list(rng.uniform(0.05, 2, m))
    sys = make_system(lambda x, t, u: 0 * u, m=m, d=d)
    theta = rng.uniform(1, 4, m)
    assume(check_pd(theta, sys, (), SAMPLES).ok)
    bigger = theta * rng.uniform(1, 3, m)
    assert check_pd(bigger, sys, (), SAMPLES).ok


def test_select_theta_single_dissipative_species():
    sys = make_system(lambda x, t, u: -u**3, structural=semilinear_structural())
    sel = select_theta(sys, 2, 10.0, SAMPLES)
    assert sel.theta == (2.0,)
    assert sel.K_theta == 0.0
    assert sel.K_fit <= 0.0


def test_select_theta_equal_diffusion():
    st = semilinear_structural(m=2, K3=1.0)
    sys = make_system(lambda x, t, u: 0 * u, m=2, structural=st)
    sel = select_theta(sys, 2, 10.0, SAMPLES)
    assert check_pd(sel.theta, sys, (), SAMPLES).ok
    delta = 2.0**-10
    assert check_pd((1 + delta, 1 + delta), sys, (), SAMPLES).ok


def test_select_theta_seird_linear_growth_in_box():
    sys = build_seird_quadratic()
    samples = space_time_samples((1.0, 1.0), 1.0, 64)
    a = select_theta(sys, 2, 10.0, samples)
    b = select_theta(sys, 2, 20.0, samples)
    assert a.theta == b.theta
    assert b.K_fit <= 2 * a.K_fit * (1 + 1e-9) + 1e-12


def test_select_theta_failure_names_condition():
    # strongly unequal diffusion with a cap of 2^1 cannot be made definite
    st = semilinear_structural(m=2)
    sys = make_system(lambda x, t, u: 0 * u, m=2, d=[1e-6, 1.0], structural=st)
    with pytest.raises(SelectionError, match="positive definiteness"):
        select_theta(sys, 2, 1.0, SAMPLES, max_exponent=1)
    with pytest.raises(SelectionError):
        select_theta(make_system(lambda x, t, u: 0 * u), 2, 1.0, SAMPLES)


def test_mass_functional_examples():
    g = Grid((4, 4), (1.0, 1.0))
    u = np.ones((4, 4, 4))
    assert mass_functional(u, g, (1, 1, 1, 1)) == pytest.approx(4.0)
    assert mass_functional(u, g, (2, 2, 2, 2)) == pytest.approx(8.0)


def test_mass_functional_exponential_decay():
    g = Grid((4, 4), (1.0, 1.0))
    sys = build_seird_quadratic(SeirdParams(alpha=0.0, mu=1.0))
    u0 = seird_initial_profiles("homogeneous", g, values=(1.0, 0.1, 0.1, 0.0))
    rep, state = integrate(sys, g, u0, 1.0, checkpoints=2)
    assert mass_functional(state, g, (1,) * 4) <= np.exp(-1) * mass_functional(u0, g, (1,) * 4) * 1.01


def test_norms_examples():
    g = Grid((200,), (2.0,))
    c = np.full((1, 200), 3.0)
    assert norms(c, g, 3)[0] == pytest.approx(3.0 * 2.0 ** (1 / 3))
    assert norms(np.zeros((1, 200)), g, 2)[0] == 0.0
    assert norms(c, g, np.inf)[0] == 3.0
    g1 = Grid((200,), (1.0,))
    assert norms(g1.centers, g1, 2)[0] == pytest.approx(3**-0.5, abs=1.0 / 200)


def pure_diffusion_seird():
    sys = build_seird_quadratic()
    from dataclasses import replace

    return replace(sys, reactions=lambda x, t, u: np.zeros_like(u), extra_rates=None, extra_names=())


@pytest.mark.parametrize("p", [2, 3])
def test_pure_diffusion_energy_nonincreasing(p):
    g = Grid((24, 24), (1.0, 1.0))
    sys = pure_diffusion_seird()
    u0 = seird_initial_profiles("two_cluster", g, mass=0.5)
    cfg = EnergyConfig(p, (4.0, 2.0, 2.0, 2.0))
    rep, _ = integrate(sys, g, u0, 0.5, checkpoints=21, energy_cfgs=[cfg], keep_states=True)
    assert np.all(np.diff(rep.energies[p]) <= 0)
    res = dissipation_monitor(rep.times, rep.states, g, cfg, sys)
    assert res.C_hat == 0.0
    assert res.fraction == 1.0


def test_constant_state_energy_constant():
    g = Grid((8, 8), (1.0, 1.0))
    sys = pure_diffusion_seird()
    u0 = seird_initial_profiles("homogeneous", g, values=(1.0, 0.5, 0.25, 0.125))
    cfg = EnergyConfig(2, (4.0, 2.0, 2.0, 2.0))
    rep, _ = integrate(sys, g, u0, 0.3, checkpoints=5, energy_cfgs=[cfg], keep_states=True)
    assert np.all(rep.energies[2] == rep.energies[2][0])
    res = dissipation_monitor(rep.times, rep.states, g, cfg, sys)
    assert np.all(res.residuals <= res.tolerance)


def test_monitor_needs_three_checkpoints():
    g = Grid((4,), (1.0,))
    sys = make_system(lambda x, t, u: 0 * u, structural=semilinear_structural())
    with pytest.raises(ContractError):
        dissipation_monitor([0, 1], [np.ones((1, 4))] * 2, g, EnergyConfig(2, (1.0,)), sys)


def test_derivative_identity_single_species():
    cfg = EnergyConfig(2, (1.5,))
    u0 = np.array([[0.3, 1.2, 2.0]])
    udot = np.array([[1.0, -0.5, 0.2]])
    d = [derivative_identity_check(u0, u0 + dt * udot, dt, cfg) for dt in (1e-3, 5e-4)]
    assert 1.5 <= d[0] / d[1] <= 2.5
    # m = 1, p = 2: the remainder is exactly theta^4 dt udot^2
    assert d[0] == pytest.approx(1.5**4 * 1e-3 * 1.0, rel=1e-6)
    assert derivative_identity_check(u0, u0, 1e-3, cfg) == 0.0


def test_derivative_identity_halves_on_random_field(rng):
    cfg = EnergyConfig(3, (2.0, 1.0, 1.5, 1.2))
    u0 = rng.uniform(0, 2, (4, 50))
    udot = rng.normal(size=(4, 50))
    d = [derivative_identity_check(u0, u0 + dt * udot, dt, cfg) for dt in (1e-3, 5e-4)]
    assert 1.5 <= d[0] / d[1] <= 2.5


def test_mass_monitor_signs():
    t = np.linspace(0, 1, 5)
    S = np.exp(-t)
    ok = mass_control_monitor(t, S, S, K1=-0.5, K2=0.0, volume=1.0)
    assert ok.ok
    bad = mass_control_monitor(t, np.exp(t), np.exp(t), K1=0.5, K2=0.0, volume=1.0)
    assert not bad.ok


def test_plateau_ratio():
    t = np.linspace(0, 10, 11)
    linf = np.stack([np.minimum(t, 5.0), np.where(t < 5, 1.0, 0.5)], axis=1)
    assert np.allclose(plateau_ratio(t, linf), [1.0, 0.5])
    assert np.allclose(plateau_ratio(t, np.stack([t], axis=1)), [2.0])
