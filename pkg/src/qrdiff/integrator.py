"""Explicit Euler time stepping with positivity-aware step control.

Each step computes the two-point diffusion divergence and the (optionally
regularised) reactions once, picks a step from the diffusion CFL bound,
then halves it until the update stays nonnegative.  Tiny negative round-off
is clamped and booked per species; anything larger rejects the step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .energy import EnergyConfig, lp_energy
from .errors import IntegrationError, StepRejected, StiffnessError
from .grid import NEUMANN, BoundarySpec, Grid, diffusion_terms
from .model import ReactionSystem, evaluate_reactions, regularize_reactions

log = logging.getLogger(__name__)

CLAMP_REL = 1e-13


@dataclass(frozen=True)
class StepControl:
    """``cfl`` scales the diffusion bound; ``rho`` caps the reaction drain per step."""

    cfl: float = 0.9
    dt_min: float = 1e-12
    dt_max: float = 0.1
    rho: float = 0.5

    def __post_init__(self):
        from .errors import ConfigError

        errs = []
        if not 0 < self.cfl <= 1:
            errs.append("cfl must lie in (0, 1]")
        if not 0 < self.rho <= 1:
            errs.append("rho must lie in (0, 1]")
        if not 0 < self.dt_min <= self.dt_max:
            errs.append("need 0 < dt_min <= dt_max")
        if errs:
            raise ConfigError(errs)


@dataclass
class SimState:
    u: np.ndarray
    t: float = 0.0
    step: int = 0
    dt: float = 0.0
    clamp_mass: Optional[np.ndarray] = None
    extra: Optional[np.ndarray] = None

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        if self.clamp_mass is None:
            self.clamp_mass = np.zeros(self.u.shape[0])

    def copy(self) -> "SimState":
        return SimState(
            self.u.copy(), self.t, self.step, self.dt, self.clamp_mass.copy(),
            None if self.extra is None else self.extra.copy(),
        )


def _rates(sys, grid, u, t, eps, bc):
    div, kmax = diffusion_terms(sys, grid, u, t, bc)
    f = evaluate_reactions(sys, grid.centers, t, u)
    if eps > 0:
        f = regularize_reactions(f, eps)
    return div, f, kmax


def _diffusion_dt(grid, kmax, bc, m, control):
    alpha = float(np.max(bc.alpha_array(m))) if bc.kind == "robin" else 0.0
    rate = 0.0
    for k, h in zip(kmax, grid.h):
        rate += 2.0 * k / h**2 + alpha / h
    if rate <= 0:
        return control.dt_max
    return min(control.cfl / rate, control.dt_max)


def _positive_dt(u, div, f, dt, control):
    """Halve ``dt`` until reactions drain at most ``rho u`` and the update is nonnegative."""
    while True:
        ok = np.all(control.rho * u + dt * f >= 0) and np.all(u + dt * (div + f) >= 0)
        if ok:
            return dt
        dt *= 0.5
        if dt < control.dt_min:
            raise StiffnessError(
                f"positivity requires dt < dt_min={control.dt_min:g}; refine the grid, "
                "lower dt_min or use eps-regularisation"
            )


def stable_dt(sys: ReactionSystem, grid: Grid, state, control: StepControl = StepControl(),
              eps: float = 0.0, bc: BoundarySpec = NEUMANN) -> float:
    """Largest admissible step from the current state.

    ``cfl / sum_k(2 kmax_k / h_k^2 + alpha / h_k)`` capped at ``dt_max`` (an
    all-degenerate state gives ``dt_max``), then halved for positivity.
    """
    st = state if isinstance(state, SimState) else SimState(state)
    div, f, kmax = _rates(sys, grid, st.u, st.t, eps, bc)
    return _positive_dt(st.u, div, f, _diffusion_dt(grid, kmax, bc, sys.m, control), control)


def _advance(sys, grid, state, dt, div, f):
    u = state.u
    new = u + dt * (div + f)
    scale = max(1.0, float(np.max(np.abs(u))))
    floor = -CLAMP_REL * scale
    low = float(np.min(new))
    if low < floor:
        raise StepRejected(f"negative value {low:.3e} after step of {dt:.3e}", t=state.t, min_value=low)
    clamp = state.clamp_mass.copy()
    if low < 0:
        neg = np.minimum(new, 0.0)
        clamp += -grid.integrate(neg)
        new = np.maximum(new, 0.0)
    extra = state.extra
    if sys.extra_rates is not None and extra is not None:
        extra = extra + dt * np.asarray(sys.extra_rates(grid.centers, state.t, u), dtype=float)
    return SimState(new, state.t + dt, state.step + 1, dt, clamp, extra)


def step(sys: ReactionSystem, grid: Grid, state: SimState, dt: float, eps: float = 0.0,
         bc: BoundarySpec = NEUMANN) -> SimState:
    """One explicit Euler step of size ``dt`` (raises StepRejected on real negativity)."""
    div, f, _ = _rates(sys, grid, state.u, state.t, eps, bc)
    return _advance(sys, grid, state, dt, div, f)


@dataclass
class DiagnosticsReport:
    times: np.ndarray
    masses: np.ndarray
    weighted_mass: np.ndarray
    linf: np.ndarray
    energies: dict
    extra_masses: Optional[np.ndarray]
    states: list
    clamp_mass: np.ndarray
    initial_mass: float
    min_value: float
    n_steps: int
    n_rejected: int
    names: tuple = ()
    weights: tuple = ()

    @property
    def total_mass(self) -> np.ndarray:
        return self.masses.sum(axis=1)

    @property
    def clamp_fraction(self) -> float:
        total = float(np.sum(self.clamp_mass))
        return total / self.initial_mass if self.initial_mass > 0 else total


def _record(report, sys, grid, st, energy_cfgs, keep_states, weights):
    mass = grid.integrate(st.u)
    report["masses"].append(mass)
    report["weighted"].append(float(np.dot(weights, mass)))
    report["linf"].append(np.max(st.u.reshape(sys.m, -1), axis=1))
    report["min"] = min(report["min"], float(np.min(st.u)))
    for cfg in energy_cfgs:
        report["energies"][cfg.p].append(lp_energy(st.u, grid, cfg))
    if st.extra is not None:
        report["extra"].append(grid.integrate(st.extra))
    if keep_states:
        report["states"].append(st.u.copy())


def integrate(
    sys: ReactionSystem,
    grid: Grid,
    u0,
    T: float,
    eps: float = 0.0,
    bc: BoundarySpec = NEUMANN,
    control: StepControl = StepControl(),
    sinks: Sequence[Callable] = (),
    checkpoints: int = 200,
    energy_cfgs: Sequence[EnergyConfig] = (),
    keep_states: bool = False,
    shift_initial: bool = True,
    max_steps: int = 50_000_000,
):
    """Advance ``u0`` to exactly ``T``; returns ``(DiagnosticsReport, SimState)``.

    Diagnostics are taken at ``checkpoints`` equally spaced times including
    ``0`` and ``T``; steps are shortened to land on them.  With ``eps > 0``
    reactions are regularised and (if ``shift_initial``) the initial data are
    shifted by ``eps``.  Each sink is called as ``sink(state, grid)`` with a
    private copy at every checkpoint.
    """
    if not T > 0:
        raise IntegrationError("T must be positive", t=0.0)
    if checkpoints < 2:
        raise IntegrationError("need at least 2 checkpoints", t=0.0)
    u0 = np.array(u0, dtype=float)
    if u0.shape != (sys.m,) + grid.shape:
        raise IntegrationError(f"initial field has shape {u0.shape}, expected {(sys.m,) + grid.shape}", t=0.0)
    if not np.all(np.isfinite(u0)) or np.any(u0 < 0):
        raise IntegrationError("initial data must be finite and nonnegative", t=0.0)
    if eps > 0 and shift_initial:
        u0 = u0 + eps
    extra0 = None
    if sys.extra_rates is not None:
        extra0 = np.zeros((len(sys.extra_names),) + grid.shape)
    state = SimState(u0, 0.0, extra=extra0)
    weights = sys.structural.c_array if sys.structural is not None else np.ones(sys.m)
    times = np.linspace(0.0, T, checkpoints)
    energy_cfgs = tuple(energy_cfgs)
    rec = {"masses": [], "weighted": [], "linf": [], "energies": {c.p: [] for c in energy_cfgs},
           "extra": [], "states": [], "min": np.inf}
    _record(rec, sys, grid, state, energy_cfgs, keep_states, weights)
    for sink in sinks:
        sink(state.copy(), grid)
    initial_mass = float(np.sum(grid.integrate(u0)))
    rejected = 0
    for target in times[1:]:
        while state.t < target:
            if state.step >= max_steps:
                raise IntegrationError("step budget exhausted", t=state.t)
            try:
                div, f, kmax = _rates(sys, grid, state.u, state.t, eps, bc)
                dt = _diffusion_dt(grid, kmax, bc, sys.m, control)
                dt = _positive_dt(state.u, div, f, dt, control)
            except StiffnessError as exc:
                raise IntegrationError(str(exc), t=state.t) from exc
            except Exception as exc:
                if isinstance(exc, IntegrationError):
                    raise
                raise IntegrationError(f"{type(exc).__name__}: {exc}", t=state.t) from exc
            last = False
            if state.t + dt >= target - 1e-12 * max(1.0, target):
                dt = target - state.t
                last = True
            while True:
                try:
                    new = _advance(sys, grid, state, dt, div, f)
                    break
                except StepRejected:
                    rejected += 1
                    dt *= 0.5
                    last = False
                    if dt < control.dt_min:
                        raise IntegrationError("step rejected below dt_min", t=state.t) from None
            if last:
                new.t = float(target)
            state = new
        _record(rec, sys, grid, state, energy_cfgs, keep_states, weights)
        for sink in sinks:
            sink(state.copy(), grid)
    report = DiagnosticsReport(
        times=times,
        masses=np.array(rec["masses"]),
        weighted_mass=np.array(rec["weighted"]),
        linf=np.array(rec["linf"]),
        energies={p: np.array(v) for p, v in rec["energies"].items()},
        extra_masses=np.array(rec["extra"]) if rec["extra"] else None,
        states=rec["states"],
        clamp_mass=state.clamp_mass.copy(),
        initial_mass=initial_mass,
        min_value=rec["min"],
        n_steps=state.step,
        n_rejected=rejected,
        names=sys.names,
        weights=tuple(float(w) for w in weights),
    )
    log.debug("integrated to T=%g in %d steps (%d rejected)", T, state.step, rejected)
    return report, state


@dataclass
class SweepResult:
    eps: tuple
    gaps: np.ndarray
    reports: list = field(default_factory=list, repr=False)

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.gaps) < 0))


def space_time_l2(times, states_a, states_b, grid: Grid) -> float:
    """Trapezoidal ``||a - b||_{L^2(Q_T)}`` over shared checkpoints."""
    sq = np.array([float(np.sum(grid.integrate((a - b) ** 2))) for a, b in zip(states_a, states_b)])
    return float(np.sqrt(np.trapezoid(sq, times)))


def epsilon_sweep(sys: ReactionSystem, grid: Grid, u0, T: float, eps_list, bc: BoundarySpec = NEUMANN,
                  control: StepControl = StepControl(), checkpoints: int = 51) -> SweepResult:
    """Pairwise space-time L^2 gaps between consecutive regularisation levels.

    All runs share the checkpoint times, so no interpolation is needed.
    ``eps = 0`` (last entry only) is the unregularised system.
    """
    eps_list = tuple(float(e) for e in eps_list)
    if any(e < 0 for e in eps_list) or any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise IntegrationError("eps_list must be strictly decreasing and nonnegative", t=0.0)
    reports = []
    for e in eps_list:
        rep, _ = integrate(sys, grid, u0, T, eps=e, bc=bc, control=control,
                           checkpoints=checkpoints, keep_states=True)
        reports.append(rep)
    gaps = [space_time_l2(reports[0].times, a.states, b.states, grid) for a, b in zip(reports, reports[1:])]
    return SweepResult(eps_list, np.array(gaps), reports)
