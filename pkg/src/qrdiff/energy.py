"""Weighted polynomial energies and the runtime monitors built on them.

For weights ``theta > 0`` and an integer order ``p >= 2`` the pointwise
energy density is

    H_p(u) = sum_{|beta| = p} (p! / beta!) * prod_i theta_i^(beta_i^2) * u^beta

and ``L_p = int H_p dx``.  With ``theta = 1`` this is ``(sum_i u_i)^p``.
The weights are chosen so that the quadratic form coupling the species
gradients is positive definite and the weighted reaction sums are
dominated by ``1 + sum u^r`` (see :func:`select_theta`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, ContractError, SelectionError
from .grid import Grid, discrete_weighted_dirichlet
from .model import ReactionSystem, diffusion_matrices, evaluate_reactions
from .sampling import corners, sobol

INT64_MAX = 2**63 - 1
DEFAULT_P_MAX = 8


def _as_field(state):
    return np.asarray(getattr(state, "u", state), dtype=float)


def _coeff(p: int, beta) -> int:
    """``p! / prod(beta_i!)`` with a 64-bit overflow check."""
    if p < 0 or any(b < 0 for b in beta):
        raise ContractError("orders must be nonnegative")
    val = math.factorial(p)
    for b in beta:
        val //= math.factorial(b)
    if val > INT64_MAX:
        raise ConfigError(f"multinomial coefficient for p={p} exceeds 64-bit range; choose a smaller p")
    return val


def multinomial_coeff(p: int, beta) -> int:
    """Multinomial coefficient ``p!/(beta_1! ... beta_m!)`` for ``|beta| = p``."""
    beta = tuple(int(b) for b in beta)
    if sum(beta) != p:
        raise ContractError(f"|beta| = {sum(beta)} differs from p = {p}")
    return _coeff(p, beta)


def _compositions(m: int, order: int):
    if m == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in _compositions(m - 1, order - first):
            yield (first,) + rest


@dataclass(frozen=True)
class MultiIndexSet:
    """All ``beta`` in ``Z_+^m`` with ``|beta| = order``, descending lexicographic.

    ``coeffs[k] = p! / beta_k!`` where ``p`` is the energy order the set
    belongs to (equal to ``order`` for the top-level set).
    """

    m: int
    order: int
    p: int
    indices: tuple
    coeffs: tuple

    @cached_property
    def array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int).reshape(len(self.indices), self.m)

    def __len__(self):
        return len(self.indices)


def enumerate_multi_indices(m: int, order: int, p: Optional[int] = None) -> MultiIndexSet:
    if m < 1 or order < 0:
        raise ContractError("need m >= 1 and order >= 0")
    p = order if p is None else p
    idx = tuple(_compositions(m, order))
    return MultiIndexSet(m, order, p, idx, tuple(_coeff(p, b) for b in idx))


def theta_power(theta, idx: MultiIndexSet) -> np.ndarray:
    """``prod_i theta_i^(beta_i^2)`` for every index in the set."""
    theta = np.asarray(theta, dtype=float)
    return np.prod(theta[None, :] ** (idx.array.astype(float) ** 2), axis=1)


@dataclass(frozen=True)
class EnergyConfig:
    p: int
    theta: tuple
    p_max: int = DEFAULT_P_MAX

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 2:
            raise ConfigError(f"energy order must be an integer >= 2, got {self.p!r}")
        if self.p > self.p_max:
            raise ConfigError(f"energy order {self.p} exceeds the cap p_max={self.p_max}")
        theta = tuple(float(v) for v in self.theta)
        if not theta or any(not v > 0 for v in theta):
            raise ConfigError("theta must be a nonempty vector of positive reals")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "p", int(self.p))

    @property
    def m(self) -> int:
        return len(self.theta)

    @cached_property
    def theta_array(self) -> np.ndarray:
        return np.asarray(self.theta)

    @cached_property
    def top(self) -> MultiIndexSet:
        return enumerate_multi_indices(self.m, self.p)

    @cached_property
    def first(self) -> MultiIndexSet:
        return enumerate_multi_indices(self.m, self.p - 1, self.p)

    @cached_property
    def second(self) -> MultiIndexSet:
        return enumerate_multi_indices(self.m, self.p - 2, self.p)

    @cached_property
    def _top_weights(self) -> np.ndarray:
        return np.asarray(self.top.coeffs, dtype=float) * theta_power(self.theta, self.top)

    @cached_property
    def _first_weights(self) -> np.ndarray:
        return np.asarray(self.first.coeffs, dtype=float) * theta_power(self.theta, self.first)

    @cached_property
    def c_low(self) -> float:
        return float(np.min(self.theta_array ** (self.p**2)))

    @cached_property
    def c_high(self) -> float:
        return float(np.max(theta_power(self.theta, self.top)) * self.m ** (self.p - 1))


def _monomials(u, idx: MultiIndexSet, top: int) -> np.ndarray:
    """``u^beta`` for every index, shape ``(K, *pts)``; ``0^0 = 1``."""
    pows = [np.ones_like(u)]
    for _ in range(top):
        pows.append(pows[-1] * u)
    out = np.ones((len(idx),) + u.shape[1:])
    for k, beta in enumerate(idx.indices):
        for i, b in enumerate(beta):
            if b:
                out[k] *= pows[b][i]
    return out


def hp_pointwise(u, cfg: EnergyConfig) -> np.ndarray:
    """Energy density ``H_p(u)``; ``u`` has shape ``(m, *pts)``."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != cfg.m:
        raise ContractError("state and theta have different species counts")
    mono = _monomials(u, cfg.top, cfg.p)
    return np.tensordot(cfg._top_weights, mono, axes=1)


def hp_gradient(u, cfg: EnergyConfig) -> np.ndarray:
    """Partial derivatives ``dH_p/du_j``, shape ``(m, *pts)``.

    Uses ``dH_p/du_j = sum_{|beta|=p-1} (p!/beta!) theta^(beta^2) u^beta theta_j^(2 beta_j + 1)``.
    """
    u = np.asarray(u, dtype=float)
    mono = _monomials(u, cfg.first, cfg.p - 1)
    base = cfg._first_weights.reshape((-1,) + (1,) * (u.ndim - 1)) * mono
    expo = 2 * cfg.first.array + 1
    factors = cfg.theta_array[None, :] ** expo
    return np.tensordot(factors.T, base, axes=1)


def lp_energy(state, grid: Grid, cfg: EnergyConfig) -> float:
    """``L_p = int H_p(u) dx`` as a cell-volume-weighted sum."""
    return float(grid.integrate(hp_pointwise(_as_field(state), cfg)))


def lp_equivalence_bounds(cfg: EnergyConfig):
    """Constants with ``c_low sum u_i^p <= H_p(u) <= c_high sum u_i^p``."""
    return cfg.c_low, cfg.c_high


def norms(state, grid: Grid, p) -> np.ndarray:
    """Per-species ``L^p`` norms (volume weighted) or cell maxima for ``p = inf``."""
    u = _as_field(state)
    if p == np.inf or p == "inf":
        return np.max(np.abs(u).reshape(u.shape[0], -1), axis=1)
    p = float(p)
    return grid.integrate(np.abs(u) ** p) ** (1.0 / p)


def mass_functional(state, grid: Grid, c) -> float:
    """``sum_i c_i int u_i``."""
    return float(np.dot(np.asarray(c, dtype=float), grid.integrate(_as_field(state))))


# ---------------------------------------------------------------- PD check


def assemble_b_tilde(theta, D) -> np.ndarray:
    """Block matrix with ``theta_k^2 D_k`` on the diagonal, ``(D_k + D_l)/2`` off it.

    ``D`` has shape ``(m, N, N)``.
    """
    theta = np.asarray(theta, dtype=float)
    m, N, _ = D.shape
    B = np.empty((m * N, m * N))
    for k in range(m):
        for l in range(m):
            blk = theta[k] ** 2 * D[k] if k == l else 0.5 * (D[k] + D[l])
            B[k * N:(k + 1) * N, l * N:(l + 1) * N] = blk
    return B


def assemble_b(theta, D, beta) -> np.ndarray:
    """Unscaled block matrix ``C_kl(beta) (D_k + D_l) / 2`` for ``|beta| = p - 2``."""
    theta = np.asarray(theta, dtype=float)
    beta = np.asarray(beta)
    m, N, _ = D.shape
    w = theta ** (2 * beta + 1)
    B = np.empty((m * N, m * N))
    for k in range(m):
        for l in range(m):
            ckl = theta[k] ** (4 * beta[k] + 4) if k == l else w[k] * w[l]
            B[k * N:(k + 1) * N, l * N:(l + 1) * N] = 0.5 * ckl * (D[k] + D[l])
    return B


@dataclass
class PDResult:
    ok: bool
    min_eigenvalue: float
    witness: Optional[tuple] = None


def _sample_list(samples):
    if isinstance(samples, tuple) and len(samples) == 2 and np.ndim(samples[1]) == 1 and np.ndim(samples[0]) == 2:
        X, T = samples
        return [(X[:, j], float(T[j])) for j in range(X.shape[1])]
    return [(np.asarray(x, dtype=float), float(t)) for x, t in samples]


def check_pd(cfg, sys: ReactionSystem, beta, samples, species: Optional[Sequence[int]] = None) -> PDResult:
    """Positive definiteness of the scaled coupling matrix at sample points.

    ``cfg`` is an :class:`EnergyConfig` or a bare theta vector.  ``samples``
    is a list of ``(x, t)`` pairs or a tuple ``(X, T)`` of arrays.  The
    scaled matrix does not depend on ``beta`` (the unscaled one is congruent
    to it); ``beta`` is only validated.  ``species`` restricts the check to a
    principal sub-block.
    """
    theta = np.asarray(getattr(cfg, "theta", cfg), dtype=float)
    if isinstance(cfg, EnergyConfig) and sum(beta) != cfg.p - 2:
        raise ContractError("check_pd expects |beta| = p - 2")
    sel = list(range(sys.m)) if species is None else list(species)
    lam = np.inf
    witness = None
    for x, t in _sample_list(samples):
        D = diffusion_matrices(sys, x.reshape(-1, 1), t)[..., 0]
        D = D[sel]
        B = assemble_b_tilde(theta[sel], D)
        if not np.allclose(B, B.T, rtol=1e-12, atol=0.0):
            raise ContractError("assembled coupling matrix is not symmetric")
        ev = float(np.linalg.eigvalsh(B)[0])
        if ev < lam:
            lam = ev
            witness = (x, t)
    return PDResult(ok=bool(lam > 0), min_eigenvalue=lam, witness=witness if lam <= 0 else None)


# ---------------------------------------------------------- theta selection


def space_time_samples(extents, t_max: float, n: int, seed: int = 0):
    """Scrambled Sobol points in the space-time box plus its corners; returns ``(X, T)``."""
    N = len(extents)
    scale = np.asarray(list(extents) + [t_max], dtype=float)
    pts = np.vstack([corners(N + 1, scale), sobol(N + 1, n, seed) * scale])
    return pts[:, :N].T.copy(), pts[:, N].copy()


def state_samples(m: int, U: float, n: int, seed: int = 0) -> np.ndarray:
    """Sobol points in ``[0, U]^m`` plus corners and the faces ``u_i = 0``; shape ``(m, S)``."""
    pts = sobol(m, n, seed) * U
    faces = []
    for i in range(m):
        f = pts[: max(1, n // (2 * m))].copy()
        f[:, i] = 0.0
        faces.append(f)
    return np.vstack([corners(m, U), pts] + faces).T.copy()


def _gammas(A, w):
    """Solve ``gamma^T A = w^T``; nonnegative gamma certifies the domination."""
    return solve_triangular(np.asarray(A).T, np.asarray(w, dtype=float), lower=False)


@dataclass
class ThetaSelection:
    theta: tuple
    K_theta: float
    K_fit: float
    min_eigenvalue: float
    p: int
    box: float
    n_checked: int = 0
    gammas: dict = field(default_factory=dict)

    def config(self) -> EnergyConfig:
        return EnergyConfig(self.p, self.theta)


def _domination_lhs(f, theta, beta):
    w = theta ** (2 * np.asarray(beta) + 1)
    return np.tensordot(w, f, axes=1)


def select_theta(
    sys: ReactionSystem,
    p: int,
    U: float,
    samples,
    n_state_samples: int = 4096,
    seed: int = 0,
    safety: float = 2.0,
    max_exponent: int = 40,
) -> ThetaSelection:
    """Choose energy weights inductively from the last species to the first.

    ``theta_m`` starts at 1; each ``theta_i`` (``i = m-1 .. 1``) is the
    smallest power of two such that

    (a) the coupling matrix restricted to species ``i..m`` is positive
        definite at every ``(x, t)`` sample, and
    (b) for every ``|beta| = p - 1`` the weights ``w = theta^(2 beta + 1)``
        are a nonnegative combination of the rows of the triangular matrix
        ``A``, i.e. ``w^T = gamma^T A`` with ``gamma >= 0``.

    Each component is multiplied by ``safety`` as soon as it is fixed, so
    the later (smaller index) components are chosen against the final
    values.  Condition (b) gives ``sum_i w_i f_i <= K3 sum(gamma) (1 + sum
    u^r)`` whenever the intermediate sums hold; this bound is then checked
    on sampled states in ``[0, U]^m``.
    """
    st = sys.structural
    if st is None:
        raise SelectionError("system has no structural parameters (matrix A, r, K3)")
    m = sys.m
    A = st.A_array
    first = enumerate_multi_indices(m, p - 1, p)
    samples = _sample_list(samples)
    theta = np.ones(m)
    for i in range(m - 1, -1, -1):
        failed = None
        for k in range(max_exponent + 1):
            theta[i] = 2.0**k
            pd = check_pd(theta, sys, (), samples, species=range(i, m))
            if not pd.ok:
                failed = "positive definiteness of the coupling matrix"
                continue
            ok_b = True
            for beta in first.indices:
                w = theta ** (2 * np.asarray(beta) + 1)
                g = _gammas(A[i:, i:], w[i:])
                if g[0] < 0:
                    ok_b = False
                    break
            if not ok_b:
                failed = "intermediate-sum weight condition (gamma_i >= 0)"
                continue
            failed = None
            break
        if failed:
            raise SelectionError(f"theta_{i + 1} exceeded 2^{max_exponent}: {failed} not met")
        theta[i] *= safety

    pd = check_pd(theta, sys, (), samples)
    if not pd.ok:
        raise SelectionError("positive definiteness lost after scaling")
    gammas = {}
    K_theta = 0.0
    for beta in first.indices:
        g = _gammas(A, theta ** (2 * np.asarray(beta) + 1))
        if np.any(g < -1e-12 * np.max(np.abs(g))):
            raise SelectionError(f"intermediate-sum weight condition fails for beta={beta}")
        gammas[beta] = g
        K_theta = max(K_theta, st.K3 * float(np.sum(g)))

    uu = state_samples(m, U, n_state_samples, seed=seed)
    X = np.stack([samples[j % len(samples)][0] for j in range(uu.shape[1])], axis=1)
    # reactions are evaluated per distinct time to keep model callables scalar in t
    times = np.array([samples[j % len(samples)][1] for j in range(uu.shape[1])])
    f = np.empty_like(uu)
    for tval in np.unique(times):
        sel = times == tval
        f[:, sel] = evaluate_reactions(sys, X[:, sel], float(tval), uu[:, sel])
    rhs_base = 1.0 + np.sum(uu**st.r, axis=0)
    K_fit = 0.0
    for beta in first.indices:
        lhs = _domination_lhs(f, theta, beta)
        rhs = K_theta * rhs_base
        scale = 1.0 + np.max(np.abs(lhs))
        bad = lhs > rhs + 1e-9 * scale
        if np.any(bad):
            j = int(np.argmax(bad))
            raise SelectionError(
                f"intermediate-sum domination violated for beta={beta} at u={uu[:, j]}, "
                f"lhs={lhs[j]:.6g} > {rhs[j]:.6g}"
            )
        K_fit = max(K_fit, float(np.max(lhs / rhs_base)))
    return ThetaSelection(
        theta=tuple(float(v) for v in theta),
        K_theta=K_theta,
        K_fit=K_fit,
        min_eigenvalue=pd.min_eigenvalue,
        p=p,
        box=U,
        n_checked=uu.shape[1],
        gammas=gammas,
    )


# ----------------------------------------------------------------- monitors


def derivative_identity_check(u0, u1, dt: float, cfg: EnergyConfig) -> float:
    """Max cell discrepancy between the difference quotient of ``H_p`` and the chain rule.

    The chain-rule side is evaluated at ``u0`` with the difference quotient
    of ``u``; the discrepancy is the first-order Taylor remainder.
    """
    u0 = _as_field(u0)
    u1 = _as_field(u1)
    lhs = (hp_pointwise(u1, cfg) - hp_pointwise(u0, cfg)) / dt
    rhs = np.sum(hp_gradient(u0, cfg) * (u1 - u0) / dt, axis=0)
    return float(np.max(np.abs(lhs - rhs)))


@dataclass
class DissipationResult:
    p: int
    times: np.ndarray
    energies: np.ndarray
    dissipation: np.ndarray
    growth: np.ndarray
    residuals: np.ndarray
    satisfied: np.ndarray
    alpha_hat: float
    C_hat: float
    tolerance: float
    decay_rate: float

    @property
    def fraction(self) -> float:
        return float(np.mean(self.satisfied)) if self.satisfied.size else 1.0


def dissipation_constant(min_eigenvalue: float, p: int, b: float, M: float) -> float:
    """Conservative stand-in for the dissipation coefficient: ``lam M 4p(p-1)/(b+p)^2``."""
    return float(min_eigenvalue * M * 4.0 * p * (p - 1) / (b + p) ** 2)


def dissipation_monitor(
    times,
    states,
    grid: Grid,
    cfg: EnergyConfig,
    sys: ReactionSystem,
    eps: float = 0.0,
    tol_rel: float = 1e-6,
    pd_samples=None,
) -> DissipationResult:
    """Check ``L_p' + a sum_k int u_k^(b+p-2)|grad u_k|^2 <= C (sum_i int u_i^(p-1+r) + |Omega|)``.

    ``a`` comes from the smallest sampled eigenvalue of the coupling matrix.
    ``C`` is the largest observed pointwise ratio between the reaction part
    of the energy derivative, ``grad H_p(u) . f(u)``, and ``sum_i u_i^(p-1+r) + 1``
    over all cells and checkpoints.  Per interval the residual uses
    trapezoidal averages of the dissipation and growth terms.
    """
    from .model import regularize_reactions

    st = sys.structural
    if st is None:
        raise ContractError("dissipation monitor needs structural parameters (b, M, r)")
    times = np.asarray(times, dtype=float)
    if len(times) < 3:
        raise ContractError("need at least 3 checkpoints")
    p = cfg.p
    if pd_samples is None:
        X = grid.centers.reshape(grid.dim, -1)
        step = max(1, X.shape[1] // 16)
        pd_samples = [(X[:, j], float(t)) for t in times[:: max(1, len(times) // 4)] for j in range(0, X.shape[1], step)]
    lam = check_pd(cfg, sys, (p - 2,) + (0,) * (sys.m - 1), pd_samples).min_eigenvalue
    alpha_hat = dissipation_constant(lam, p, st.b, st.M) if lam > 0 else 0.0
    w = st.b + p - 2
    energies = np.array([lp_energy(u, grid, cfg) for u in states])
    diss = np.array([sum(discrete_weighted_dirichlet(grid, u, i, w) for i in range(sys.m)) for u in states])
    growth = np.array([float(np.sum(grid.integrate(np.asarray(u) ** (p - 1 + st.r)))) + grid.volume for u in states])
    C_hat = 0.0
    for t, u in zip(times, states):
        u = np.asarray(u)
        f = evaluate_reactions(sys, grid.centers, float(t), u)
        if eps > 0:
            f = regularize_reactions(f, eps)
        react = np.sum(hp_gradient(u, cfg) * f, axis=0)
        base = 1.0 + np.sum(u ** (p - 1 + st.r), axis=0)
        C_hat = max(C_hat, float(np.max(react / base)))
    C_hat = max(C_hat, 0.0)
    dt = np.diff(times)
    rate = np.diff(energies) / dt
    residuals = rate + alpha_hat * 0.5 * (diss[1:] + diss[:-1]) - C_hat * 0.5 * (growth[1:] + growth[:-1])
    tol = tol_rel * max(1.0, float(np.max(np.abs(energies))))
    half = len(times) // 2
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(energies[half:])
    if np.all(np.isfinite(logs)) and len(logs) >= 2:
        decay = float(-np.polyfit(times[half:], logs, 1)[0])
    else:
        decay = float("nan")
    return DissipationResult(
        p=p,
        times=times,
        energies=energies,
        dissipation=diss,
        growth=growth,
        residuals=residuals,
        satisfied=residuals <= tol,
        alpha_hat=alpha_hat,
        C_hat=C_hat,
        tolerance=tol,
        decay_rate=decay,
    )


@dataclass
class MassCheck:
    ok: bool
    margins: np.ndarray
    slack: float


def mass_control_monitor(times, weighted_mass, total_mass, K1: float, K2: float, volume: float,
                         slack_rel: float = 1e-8) -> MassCheck:
    """Interval form of the mass-control inequality between checkpoints.

    ``M(t+D) <= M(t) + D (K1 S + K2 |Omega|)`` where ``M`` is the weighted
    mass and ``S`` the unweighted total mass taken at the endpoint that
    makes the bound largest (max if ``K1 >= 0``, min otherwise).
    """
    times = np.asarray(times, dtype=float)
    Mw = np.asarray(weighted_mass, dtype=float)
    S = np.asarray(total_mass, dtype=float)
    pick = np.maximum if K1 >= 0 else np.minimum
    bound = Mw[:-1] + np.diff(times) * (K1 * pick(S[:-1], S[1:]) + K2 * volume)
    slack = slack_rel * max(1.0, float(np.max(np.abs(Mw))))
    margins = bound + slack - Mw[1:]
    return MassCheck(ok=bool(np.all(margins >= 0)), margins=margins, slack=slack)


def plateau_ratio(times, linf, split: Optional[float] = None) -> np.ndarray:
    """Per species ``sup_{t >= split} |u|_inf / sup_{t <= split} |u|_inf``."""
    times = np.asarray(times, dtype=float)
    linf = np.asarray(linf, dtype=float)
    split = 0.5 * (times[0] + times[-1]) if split is None else split
    early = np.max(linf[times <= split], axis=0)
    late = np.max(linf[times >= split], axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(early > 0, late / early, np.where(late > 0, np.inf, 0.0))
