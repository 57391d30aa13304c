"""Uniform rectangular finite-volume meshes and the two-point flux operator.

Fields are arrays of shape ``(m, n_x)`` or ``(m, n_x, n_y)`` holding cell
averages, species first, row-major.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import AssemblyError, ConfigError, ContractError
from .model import ReactionSystem, diagonal_diffusion, evaluate_phi

__all__ = [
    "Grid",
    "BoundarySpec",
    "face_diffusivity",
    "apply_diffusion_operator",
    "diffusion_terms",
    "boundary_trace_integral",
    "boundary_flux_total",
    "discrete_weighted_dirichlet",
    "restrict",
    "write_snapshot",
    "read_snapshot",
]


@dataclass(frozen=True)
class Grid:
    """Cell-centred uniform mesh on ``[0, L_x] (x [0, L_y])``."""

    shape: tuple
    extents: tuple

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        extents = tuple(float(e) for e in self.extents)
        if len(shape) not in (1, 2):
            raise ConfigError("only 1D and 2D grids are supported")
        if len(extents) != len(shape):
            raise ConfigError("need one extent per axis")
        if any(n < 2 for n in shape):
            raise ConfigError("need at least 2 cells per axis")
        if any(not e > 0 for e in extents):
            raise ConfigError("extents must be positive")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "extents", extents)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def h(self) -> tuple:
        return tuple(e / n for e, n in zip(self.extents, self.shape))

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    def face_area(self, axis: int) -> float:
        """Measure of a face normal to ``axis`` (1 in 1D)."""
        return self.cell_volume / self.h[axis]

    @cached_property
    def centers(self) -> np.ndarray:
        axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.shape, self.h)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def face_centers(self, axis: int) -> np.ndarray:
        """Coordinates of interior faces normal to ``axis``."""
        return self._faces[axis]

    @cached_property
    def _faces(self):
        out = []
        for axis in range(self.dim):
            axes = [(np.arange(n) + 0.5) * h for n, h in zip(self.shape, self.h)]
            axes[axis] = np.arange(1, self.shape[axis]) * self.h[axis]
            out.append(np.stack(np.meshgrid(*axes, indexing="ij")))
        return tuple(out)

    def integrate(self, values) -> np.ndarray:
        """Volume-weighted sum over the trailing spatial axes."""
        values = np.asarray(values, dtype=float)
        axes = tuple(range(values.ndim - self.dim, values.ndim))
        return np.sum(values, axis=axes) * self.cell_volume

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(tuple(n * factor for n in self.shape), self.extents)


@dataclass(frozen=True)
class BoundarySpec:
    """Zero-flux or Robin boundary: ``D Phi grad u . eta + alpha u = 0``."""

    kind: str = "neumann_zero_flux"
    alpha: tuple = ()

    def __post_init__(self):
        if self.kind not in ("neumann_zero_flux", "robin"):
            raise ConfigError(f"unknown boundary kind {self.kind!r}")
        alpha = tuple(float(a) for a in self.alpha)
        if any(a < 0 for a in alpha):
            raise ConfigError("Robin coefficients must be >= 0")
        if self.kind == "robin" and not alpha:
            raise ConfigError("Robin boundary needs alpha coefficients")
        object.__setattr__(self, "alpha", alpha)

    def alpha_array(self, m: int) -> np.ndarray:
        if self.kind != "robin":
            return np.zeros(m)
        if len(self.alpha) == 1:
            return np.full(m, self.alpha[0])
        if len(self.alpha) != m:
            raise ConfigError(f"expected {m} Robin coefficients, got {len(self.alpha)}")
        return np.asarray(self.alpha)


NEUMANN = BoundarySpec()


def face_diffusivity(sys: ReactionSystem, u_left, u_right, x_face, t: float, i: int, axis: int = 0) -> float:
    """``d_i(x_face, t) * (Phi(u_left) + Phi(u_right)) / 2`` at one face."""
    x_face = np.asarray(x_face, dtype=float)
    d = diagonal_diffusion(sys, x_face, t)[i, axis]
    phi_l = evaluate_phi(sys, u_left)
    phi_r = evaluate_phi(sys, u_right)
    val = float(np.ravel(d * 0.5 * (phi_l + phi_r))[0])
    if val < 0 or not np.isfinite(val):
        raise AssemblyError(f"face diffusivity {val!r} is not a nonnegative number")
    return val


def _face_slices(ndim, axis):
    lo = [slice(None)] * ndim
    hi = [slice(None)] * ndim
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    return tuple(lo), tuple(hi)


def _face_coefficients(sys, grid, phi, t):
    """Per axis: ``d_face * mean(Phi)`` with shape ``(m, *face_shape)``."""
    coeffs = []
    const = getattr(sys.diffusion, "constant_values", None)
    for axis in range(grid.dim):
        lo, hi = _face_slices(grid.dim, axis)
        phi_face = 0.5 * (phi[lo] + phi[hi])
        if const is not None:
            d = const.reshape((-1,) + (1,) * grid.dim)
        else:
            d = diagonal_diffusion(sys, grid.face_centers(axis), t)[:, axis]
        coeffs.append(d * phi_face)
    return coeffs


def diffusion_terms(sys: ReactionSystem, grid: Grid, u, t: float, bc: BoundarySpec = NEUMANN):
    """Divergence field and per-axis maximum face diffusivity.

    Returns ``(div, kmax)`` where ``div`` has the shape of ``u`` and
    ``kmax[axis]`` is the largest interior face coefficient ``d Phi``.
    """
    u = np.asarray(u, dtype=float)
    phi = evaluate_phi(sys, u)
    coeffs = _face_coefficients(sys, grid, phi, t)
    div = np.zeros_like(u)
    kmax = []
    for axis, k in enumerate(coeffs):
        if np.any(k < 0):
            raise AssemblyError("negative face diffusivity; diffusion must be elliptic")
        h = grid.h[axis]
        ax = axis + 1
        lo = (slice(None),) + _face_slices(grid.dim, axis)[0]
        hi = (slice(None),) + _face_slices(grid.dim, axis)[1]
        flux = k * (u[hi] - u[lo]) / h
        div[lo] += flux / h
        div[hi] -= flux / h
        kmax.append(float(np.max(k)) if k.size else 0.0)
        if bc.kind == "robin":
            alpha = bc.alpha_array(u.shape[0]).reshape((-1,) + (1,) * grid.dim)
            first = [slice(None)] * u.ndim
            last = [slice(None)] * u.ndim
            first[ax] = slice(0, 1)
            last[ax] = slice(-1, None)
            div[tuple(first)] -= alpha * u[tuple(first)] / h
            div[tuple(last)] -= alpha * u[tuple(last)] / h
    if not np.all(np.isfinite(div)):
        idx = tuple(int(i) for i in np.argwhere(~np.isfinite(div))[0])
        raise AssemblyError(f"non-finite diffusion term at species/cell index {idx}")
    return div, kmax


def apply_diffusion_operator(sys: ReactionSystem, grid: Grid, u, t: float, bc: BoundarySpec = NEUMANN) -> np.ndarray:
    """Cell averages of ``div(d_i Phi(u) grad u_i)`` with two-point fluxes."""
    return diffusion_terms(sys, grid, u, t, bc)[0]


def boundary_trace_integral(grid: Grid, u, i: int) -> float:
    """Integral of the trace of ``u_i`` over the boundary.

    The trace on a boundary face is the adjacent cell value, which is the
    same first-order trace the Robin flux uses.
    """
    ui = np.asarray(u, dtype=float)[i]
    total = 0.0
    for axis in range(grid.dim):
        first = np.take(ui, 0, axis=axis)
        last = np.take(ui, -1, axis=axis)
        total += (np.sum(first) + np.sum(last)) * grid.face_area(axis)
    return float(total)


def boundary_flux_total(grid: Grid, u, bc: BoundarySpec) -> np.ndarray:
    """Per-species outflow ``alpha_i * trace integral`` through the boundary."""
    m = np.asarray(u).shape[0]
    alpha = bc.alpha_array(m)
    return np.array([alpha[i] * boundary_trace_integral(grid, u, i) for i in range(m)])


def discrete_weighted_dirichlet(grid: Grid, u, i: int, w: float) -> float:
    """Face quadrature of ``int u_i^w |grad u_i|^2``."""
    if w < 0:
        raise ContractError("weight exponent must be >= 0")
    ui = np.asarray(u, dtype=float)[i]
    total = 0.0
    for axis in range(grid.dim):
        lo, hi = _face_slices(grid.dim, axis)
        grad = (ui[hi] - ui[lo]) / grid.h[axis]
        mid = 0.5 * (ui[hi] + ui[lo])
        total += float(np.sum(np.power(mid, w) * grad * grad))
    return total * grid.cell_volume


def restrict(u, factor: int = 2) -> np.ndarray:
    """Average blocks of ``factor`` cells per axis (fine -> coarse)."""
    u = np.asarray(u, dtype=float)
    m, *shape = u.shape
    new_shape = [m]
    for n in shape:
        if n % factor:
            raise ContractError("grid size not divisible by the restriction factor")
        new_shape += [n // factor, factor]
    v = u.reshape(new_shape)
    return v.mean(axis=tuple(range(2, v.ndim, 2)))


def write_snapshot(path, grid: Grid, u, t: float) -> None:
    """Write a QDF1 snapshot: ASCII header line then little-endian float64."""
    u = np.ascontiguousarray(u, dtype="<f8")
    m = u.shape[0]
    if u.shape[1:] != grid.shape:
        raise ContractError("field does not match grid")
    parts = ["QDF1", str(m)] + [str(n) for n in grid.shape] + [repr(float(h)) for h in grid.h] + [repr(float(t))]
    with open(path, "wb") as fh:
        fh.write((" ".join(parts) + "\n").encode("ascii"))
        fh.write(u.tobytes(order="C"))


def read_snapshot(path):
    """Read a QDF1 snapshot; returns ``(grid, u, t)``."""
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    tokens = data[:nl].decode("ascii").split()
    if not tokens or tokens[0] != "QDF1":
        raise ConfigError(f"{path}: not a QDF1 snapshot")
    if len(tokens) == 5:
        dim = 1
    elif len(tokens) == 7:
        dim = 2
    else:
        raise ConfigError(f"{path}: malformed QDF1 header")
    m = int(tokens[1])
    shape = tuple(int(v) for v in tokens[2:2 + dim])
    h = tuple(float(v) for v in tokens[2 + dim:2 + 2 * dim])
    t = float(tokens[-1])
    u = np.frombuffer(data[nl + 1:], dtype="<f8")
    if u.size != m * int(np.prod(shape)):
        raise ConfigError(f"{path}: payload size does not match header")
    grid = Grid(shape, tuple(n * hh for n, hh in zip(shape, h)))
    return grid, u.reshape((m,) + shape).astype(float), t
