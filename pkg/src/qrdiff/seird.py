"""SEIRD epidemic systems with population-density driven diffusion.

Species order is ``(s, e, i, r)``; the deceased compartment ``d`` is a
passive per-cell ODE.  The diffusion factor is the living population
``n = s + e + i + r``.  Infection terms are written in rearranged form

    (1 - A0/n) beta s i = beta s i - A0 beta (s i / n)

so the singular part is an explicit bounded ratio.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigError
from .grid import Grid
from .sampling import corners, sobol
from .model import (
    ReactionSystem,
    StructuralParams,
    constant_diffusion,
    delta_regularized_ratio,
    singular_ratio,
)

Rate = Union[float, Callable]

SPECIES = ("s", "e", "i", "r")
SEIRD_A = ((1, 0, 0, 0), (1, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))
RATES = ("alpha", "mu", "sigma", "phi_e", "phi_r", "phi_d", "beta_i", "beta_e")
DIFFUSIONS = ("nu_s", "nu_e", "nu_i", "nu_r")


@dataclass(frozen=True)
class SeirdParams:
    """Rates are floats or callables ``rate(x, t)`` vectorised over points.

    ``beta_i_fn(i, n)`` / ``beta_e_fn(e, n)`` replace the constant contact
    rates in the heterogeneous model; ``response_bounds = (c_i, c_e)`` are
    the declared constants in ``beta_i(i, n) <= c_i (1 + i + n)``.  Field
    suprema are sampled over ``domain x [0, horizon]``.
    """

    alpha: Rate = 0.0
    mu: Rate = 0.05
    sigma: Rate = 0.5
    phi_e: Rate = 0.1
    phi_r: Rate = 0.1
    phi_d: Rate = 0.02
    beta_i: Rate = 1.0
    beta_e: Rate = 0.5
    A0: float = 0.0
    nu_s: Rate = 0.02
    nu_e: Rate = 0.02
    nu_i: Rate = 0.01
    nu_r: Rate = 0.02
    beta_i_fn: Optional[Callable] = None
    beta_e_fn: Optional[Callable] = None
    response_bounds: Optional[tuple] = None
    include_deceased: bool = True
    domain: tuple = (1.0, 1.0)
    horizon: float = 1.0
    n_field_samples: int = 2048

    def __post_init__(self):
        errors = []
        for name in RATES:
            lo = field_range(getattr(self, name), self)[0]
            if lo < 0:
                errors.append(f"rate {name} must be nonnegative (min {lo:g})")
        for name in DIFFUSIONS:
            lo = field_range(getattr(self, name), self)[0]
            if not lo > 0:
                errors.append(f"diffusion rate {name} must be positive (min {lo:g})")
        if callable(self.A0) or self.A0 < 0:
            errors.append("A0 must be a nonnegative constant")
        if (self.beta_i_fn is None) != (self.beta_e_fn is None):
            errors.append("give both beta_i_fn and beta_e_fn or neither")
        if self.beta_i_fn is not None and self.response_bounds is None:
            errors.append("response functions need declared response_bounds (c_i, c_e)")
        if errors:
            raise ConfigError(errors)

    def rate_values(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _space_time_points(params: SeirdParams):
    N = len(params.domain)
    scale = np.asarray(list(params.domain) + [params.horizon], dtype=float)
    pts = np.vstack([corners(N + 1, scale), sobol(N + 1, params.n_field_samples, 7) * scale])
    return pts[:, :N].T, pts[:, N]


def field_range(rate: Rate, params) -> tuple:
    """``(min, max)`` of a rate over sampled space-time points (exact for constants)."""
    if not callable(rate):
        return float(rate), float(rate)
    X, T = _space_time_points(params)
    vals = np.concatenate([np.ravel(np.broadcast_to(rate(X[:, T == t], float(t)), (int(np.sum(T == t)),)))
                           for t in np.unique(T)])
    return float(np.min(vals)), float(np.max(vals))


def _sup(rate, params):
    return field_range(rate, params)[1]


def _ev(rate, x, t):
    return np.asarray(rate(x, t), dtype=float) if callable(rate) else float(rate)


def _diffusion(params: SeirdParams):
    nus = [getattr(params, n) for n in DIFFUSIONS]
    if not any(callable(v) for v in nus):
        return constant_diffusion(nus)

    def diffusion(x, t):
        x = np.asarray(x, dtype=float)
        return np.stack([np.broadcast_to(_ev(v, x, t), x.shape[1:]) for v in nus]).astype(float)

    return diffusion


def _phi(u):
    return np.sum(u, axis=0)


def _structural(params: SeirdParams, hetero: bool) -> StructuralParams:
    a = _sup(params.alpha, params)
    K1 = field_range(lambda x, t: _ev(params.alpha, x, t) - _ev(params.mu, x, t), params)[1] \
        if callable(params.alpha) or callable(params.mu) else float(params.alpha) - float(params.mu)
    sig = _sup(params.sigma, params)
    rec = _sup(lambda x, t: _ev(params.phi_r, x, t) + _ev(params.phi_e, x, t), params) \
        if callable(params.phi_r) or callable(params.phi_e) else float(params.phi_r) + float(params.phi_e)
    A0 = float(params.A0)
    if not hetero:
        bsum = _sup(params.beta_i, params) + _sup(params.beta_e, params)
        # f_s <= alpha n + A0 (beta_i + beta_e) s, f_s + f_e <= alpha n, f_i <= sigma e, f_r <= (phi_r + phi_e) n
        K3 = max(a + A0 * bsum, a, sig, rec)
        K4 = max(2 * a + A0 * bsum, bsum, sig, rec)
        r, l = 1.0, 2.0
    else:
        csum = float(sum(params.response_bounds)) if params.response_bounds else \
            _sup(params.beta_i, params) + _sup(params.beta_e, params)
        # s (1 + i + n) <= 6 (1 + sum u^2) and <= 18 (1 + sum u^3) on the nonnegative cone
        K3 = max(2 * a + 6 * A0 * csum, 2 * a, sig, rec)
        K4 = max(4 * a + 18 * A0 * csum, 18 * csum, sig, rec)
        r, l = 2.0, 3.0
    return StructuralParams(
        b=1.0, M=1.0, pi_exp=1.0, M_tilde=1.0, c=(1.0, 1.0, 1.0, 1.0),
        K1=K1, K2=0.0, A=SEIRD_A, r=r, K3=K3, l=l, K4=K4,
    )


def _build(params: SeirdParams, label: str, quadratic: bool, delta: Optional[float] = None) -> ReactionSystem:
    hetero = params.beta_i_fn is not None
    p = params

    def contact(x, t, s, e, i, n):
        if hetero:
            return np.asarray(p.beta_i_fn(i, n), dtype=float), np.asarray(p.beta_e_fn(e, n), dtype=float)
        return _ev(p.beta_i, x, t), _ev(p.beta_e, x, t)

    def reactions(x, t, u):
        s, e, i, r = u
        n = s + e + i + r
        bi, be = contact(x, t, s, e, i, n)
        if delta is None:
            allee = p.A0 * (bi * singular_ratio(s, i, n, check=False) + be * singular_ratio(s, e, n, check=False))
        else:
            allee = bi * delta_regularized_ratio(s, i, n, delta, p.A0) + be * delta_regularized_ratio(s, e, n, delta, p.A0)
        infect = bi * s * i + be * s * e - allee
        alpha, mu, sigma = _ev(p.alpha, x, t), _ev(p.mu, x, t), _ev(p.sigma, x, t)
        phi_e, phi_r, phi_d = _ev(p.phi_e, x, t), _ev(p.phi_r, x, t), _ev(p.phi_d, x, t)
        death = phi_d * (n if quadratic else 1.0) * i
        f_s = alpha * n - infect - mu * s
        f_e = infect - (sigma + phi_e + mu) * e
        f_i = sigma * e - death - phi_r * i - mu * i
        f_r = phi_r * i + phi_e * e - mu * r
        return np.stack([np.broadcast_to(v, s.shape) for v in (f_s, f_e, f_i, f_r)]).astype(float)

    extra = None
    if p.include_deceased:
        def extra(x, t, u):
            s, e, i, r = u
            n = s + e + i + r
            return np.broadcast_to(_ev(p.phi_d, x, t) * (n if quadratic else 1.0) * i, s.shape)[None].copy()

    return ReactionSystem(
        m=4,
        reactions=reactions,
        phi=_phi,
        diffusion=_diffusion(p),
        structural=_structural(p, hetero),
        names=SPECIES,
        extra_rates=extra,
        extra_names=("d",) if p.include_deceased else (),
        label=label,
        meta={"params": p, "delta": delta},
    )


def build_seird_original(params: SeirdParams = SeirdParams()) -> ReactionSystem:
    """Mortality ``-phi_d i`` in the infected equation."""
    return _build(params, "seird_original", quadratic=False)


def build_seird_quadratic(params: SeirdParams = SeirdParams()) -> ReactionSystem:
    """Mortality ``-phi_d n i``; the default preset."""
    return _build(params, "seird_quadratic", quadratic=True)


def build_seird_delta(params: SeirdParams = SeirdParams(), delta: float = 1e-2) -> ReactionSystem:
    """Quadratic model with ``A0/n`` smoothed to ``A0/(n + delta)``."""
    if not delta > 0:
        raise ConfigError(f"delta must be positive, got {delta!r}")
    return _build(params, f"seird_delta({delta!r})", quadratic=True, delta=float(delta))


def build_seird_heterogeneous(params: SeirdParams) -> ReactionSystem:
    """Quadratic model with response functions ``beta(., n)`` and space-time rate fields.

    Without response functions the constant contact rates are used and the
    system agrees with :func:`build_seird_quadratic`; the structural
    constants are still the cubic-growth ones.
    """
    return _build(params, "seird_hetero", quadratic=True)


PRESETS = {
    "seird_original": build_seird_original,
    "seird_quadratic": build_seird_quadratic,
    "seird_delta": build_seird_delta,
    "seird_hetero": build_seird_heterogeneous,
}


def _gauss(grid: Grid, center, width, mass):
    X = grid.centers
    r2 = sum((X[k] - c) ** 2 for k, c in enumerate(center))
    amp = mass / ((2 * np.pi) ** (grid.dim / 2) * width**grid.dim)
    return amp * np.exp(-r2 / (2 * width**2))


def seird_initial_profiles(kind: str, grid: Grid, background: float = 1.0, mass: float = 0.01,
                           width: float = 0.05, values=(1.0, 0.0, 0.0, 0.0)) -> np.ndarray:
    """Built-in initial fields of shape ``(4, *grid.shape)``.

    ``homogeneous``: constant ``values``.  ``gaussian``: susceptibles at
    ``background`` and an infected spot of total ``mass`` at the centre.
    ``two_cluster``: two half-mass spots mirrored about ``x = L_x / 2``.
    """
    u = np.zeros((4,) + grid.shape)
    if kind == "homogeneous":
        for k, v in enumerate(values):
            u[k] = float(v)
    elif kind == "gaussian":
        u[0] = background
        u[2] = _gauss(grid, [0.5 * L for L in grid.extents], width, mass)
    elif kind == "two_cluster":
        u[0] = background
        c1 = [0.25 * grid.extents[0]] + [0.5 * L for L in grid.extents[1:]]
        c2 = [0.75 * grid.extents[0]] + [0.5 * L for L in grid.extents[1:]]
        u[2] = _gauss(grid, c1, width, 0.5 * mass) + _gauss(grid, c2, width, 0.5 * mass)
    else:
        raise ConfigError(f"unknown initial profile {kind!r}; choose homogeneous, gaussian or two_cluster")
    if np.any(u < 0) or not np.all(np.isfinite(u)):
        raise ConfigError("initial profile must be finite and nonnegative")
    return u
