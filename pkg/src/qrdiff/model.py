"""Reaction-diffusion systems with solution-dependent diffusion.

A system has ``m`` species ``u_i`` evolving by

    du_i/dt - div(d_i(x, t) Phi(u) grad u_i) = f_i(x, t, u)

All model callables are vectorised over sample points.  Arrays follow one
convention throughout the package:

* ``u`` has shape ``(m, *pts)``; a single state is ``(m,)``.
* ``x`` has shape ``(N, *pts)``; a single point is ``(N,)``.
* ``t`` is a float.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AssemblyError, ContractError, ModelError

__all__ = [
    "StructuralParams",
    "ReactionSystem",
    "constant_diffusion",
    "evaluate_reactions",
    "evaluate_phi",
    "regularize_reactions",
    "singular_ratio",
    "delta_regularized_ratio",
    "diffusion_matrices",
    "diagonal_diffusion",
]


@dataclass(frozen=True)
class StructuralParams:
    """Constants a model author claims for the structural hypotheses.

    ``b, M`` bound Phi from below (``Phi >= M u_i^b``), ``pi_exp, M_tilde``
    from above (``Phi <= M_tilde (1 + sum u^pi)``).  ``c, K1, K2`` give the
    mass control ``sum c_i f_i <= K1 sum u + K2``.  ``A, r, K3`` give the
    lower-triangular intermediate sums and ``l, K4`` the polynomial growth
    bound.  None of these are trusted; the audit module checks them.
    """

    b: float
    M: float
    pi_exp: float
    M_tilde: float
    c: tuple
    K1: float
    K2: float
    A: tuple
    r: float
    K3: float
    l: float
    K4: float

    def __post_init__(self):
        errors = []
        if self.b < 0:
            errors.append("b must be >= 0")
        if self.M <= 0:
            errors.append("M must be > 0")
        if self.pi_exp <= 0:
            errors.append("pi_exp must be > 0")
        if self.M_tilde <= 0:
            errors.append("M_tilde must be > 0")
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or np.any(c <= 0):
            errors.append("mass weights c must all be > 0")
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            errors.append("A must be a square matrix")
        else:
            if np.any(np.triu(A, 1) != 0):
                errors.append("A must be lower triangular")
            if np.any(np.diag(A) <= 0):
                errors.append("A must have a positive diagonal")
            if np.any(A < 0):
                errors.append("A must have nonnegative entries")
            if c.ndim == 1 and A.shape[0] != c.shape[0]:
                errors.append("A and c have different sizes")
        if self.r < 0:
            errors.append("r must be >= 0")
        if errors:
            raise ContractError("; ".join(errors))
        # normalise to hashable tuples
        object.__setattr__(self, "c", tuple(float(v) for v in c))
        object.__setattr__(self, "A", tuple(tuple(float(v) for v in row) for row in A))

    @property
    def c_array(self) -> np.ndarray:
        return np.asarray(self.c)

    @property
    def A_array(self) -> np.ndarray:
        return np.asarray(self.A)


@dataclass(frozen=True)
class ReactionSystem:
    """Immutable description of one reaction-diffusion system.

    ``diffusion(x, t)`` returns shape ``(m, *pts)`` for scalar-times-identity
    coefficients, or ``(m, N, N, *pts)`` when ``anisotropic`` is set.
    ``extra_rates`` optionally drives passive per-cell ODE components (e.g.
    a deceased compartment) that take no part in diffusion or the audits.
    """

    m: int
    reactions: Callable
    phi: Callable
    diffusion: Callable
    structural: Optional[StructuralParams] = None
    names: tuple = ()
    anisotropic: bool = False
    extra_rates: Optional[Callable] = None
    extra_names: tuple = ()
    label: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 1:
            raise ContractError(f"species count must be an integer >= 1, got {self.m!r}")
        names = tuple(self.names) or tuple(f"u{i + 1}" for i in range(self.m))
        if len(names) != self.m:
            raise ContractError(f"expected {self.m} species names, got {len(names)}")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "extra_names", tuple(self.extra_names))
        if self.structural is not None and len(self.structural.c) != self.m:
            raise ContractError("structural parameters sized for a different species count")


def constant_diffusion(values: Sequence[float]) -> Callable:
    """Space-time constant scalar diffusion rates, one per species."""
    vals = np.asarray(values, dtype=float)
    if np.any(vals <= 0):
        raise ContractError("diffusion rates must be positive")

    def diffusion(x, t):
        x = np.asarray(x)
        shape = (vals.size,) + x.shape[1:]
        return np.broadcast_to(vals.reshape((-1,) + (1,) * (x.ndim - 1)), shape)

    diffusion.constant_values = vals
    return diffusion


def _first_bad(arr):
    bad = ~np.isfinite(arr)
    idx = np.argwhere(bad)[0]
    return tuple(int(i) for i in idx)


def evaluate_reactions(sys: ReactionSystem, x, t: float, u) -> np.ndarray:
    """Evaluate ``f(x, t, u)`` exactly as the model defines it (no clamping)."""
    u = np.asarray(u, dtype=float)
    out = np.asarray(sys.reactions(np.asarray(x, dtype=float), t, u), dtype=float)
    if out.shape != u.shape:
        out = np.broadcast_to(out, u.shape).copy()
    if not np.all(np.isfinite(out)):
        idx = _first_bad(out)
        pt = idx[1:]
        raise ModelError(
            f"non-finite reaction value for species {sys.names[idx[0]]}",
            x=np.asarray(x)[(slice(None),) + pt] if np.ndim(x) > 1 else x,
            t=t,
            u=u[(slice(None),) + pt],
        )
    return out


def evaluate_phi(sys: ReactionSystem, u) -> np.ndarray:
    """Evaluate the density factor Phi; must be finite and nonnegative."""
    u = np.asarray(u, dtype=float)
    out = np.asarray(sys.phi(u), dtype=float)
    out = np.broadcast_to(out, u.shape[1:]) if out.shape != u.shape[1:] else out
    if not np.all(np.isfinite(out)) or np.any(out < 0):
        bad = ~np.isfinite(out) | (out < 0)
        pt = tuple(int(i) for i in np.argwhere(np.atleast_1d(bad))[0]) if out.ndim else ()
        raise ModelError(
            f"Phi must be finite and nonnegative, got {np.asarray(out)[pt]!r}",
            u=u[(slice(None),) + pt],
        )
    return out


def regularize_reactions(f_vals, eps: float) -> np.ndarray:
    """Bounded regularisation ``f_i / (1 + eps * sum_j |f_j|)``.

    Works along axis 0, so ``f_vals`` may be a single vector or a field.
    """
    if not eps > 0:
        raise ContractError(f"eps must be positive, got {eps!r}")
    f = np.asarray(f_vals, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ContractError("reaction values must be finite")
    return f / (1.0 + eps * np.sum(np.abs(f), axis=0))


def singular_ratio(a, c, n, check: bool = True):
    """``a*c/n`` for components ``a, c`` of a nonnegative total ``n``.

    The ratio is squeezed to zero as ``n -> 0`` and is defined as exactly 0
    there.  The result never exceeds ``min(a, c)``.
    """
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    n = np.asarray(n, dtype=float)
    if check:
        tol = 1e-12 * np.maximum(1.0, n)
        if np.any(a > n + tol) or np.any(c > n + tol):
            raise ContractError("singular_ratio requires a <= n and c <= n")
        if np.any(a < 0) or np.any(c < 0) or np.any(n < 0):
            raise ContractError("singular_ratio requires nonnegative inputs")
    pos = n > 0
    safe_n = np.where(pos, n, 1.0)
    out = np.where(pos, a * c / safe_n, 0.0)
    out = np.minimum(out, np.minimum(a, c))
    return out if out.ndim else float(out)


def delta_regularized_ratio(a, c, n, delta: float, A0: float = 1.0):
    """Smooth replacement ``A0*a*c/(n + delta)`` of ``A0*a*c/n``."""
    if not delta > 0:
        raise ContractError(f"delta must be positive, got {delta!r}")
    out = A0 * np.asarray(a, dtype=float) * np.asarray(c, dtype=float) / (np.asarray(n, dtype=float) + delta)
    return out if np.ndim(out) else float(out)


def diffusion_matrices(sys: ReactionSystem, x, t: float) -> np.ndarray:
    """Diffusion tensors with shape ``(m, N, N, *pts)``."""
    x = np.asarray(x, dtype=float)
    N = x.shape[0]
    d = np.asarray(sys.diffusion(x, t), dtype=float)
    if sys.anisotropic:
        return d
    eye = np.eye(N).reshape((1, N, N) + (1,) * (d.ndim - 1))
    return d[:, None, None, ...] * eye


def diagonal_diffusion(sys: ReactionSystem, x, t: float) -> np.ndarray:
    """Per-axis diffusion coefficients, shape ``(m, N, *pts)``.

    Two-point fluxes can only represent diagonal tensors, so off-diagonal
    entries are rejected.
    """
    x = np.asarray(x, dtype=float)
    N = x.shape[0]
    d = np.asarray(sys.diffusion(x, t), dtype=float)
    if not sys.anisotropic:
        return np.broadcast_to(d[:, None, ...], (d.shape[0], N) + d.shape[1:])
    off = d.copy()
    for k in range(N):
        off[:, k, k, ...] = 0.0
    if np.any(off != 0):
        raise AssemblyError("non-diagonal diffusion tensors are not supported by the two-point flux scheme")
    return np.stack([d[:, k, k, ...] for k in range(N)], axis=1)
