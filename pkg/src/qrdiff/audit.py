"""Sampling audits of the structural hypotheses of a reaction-diffusion system.

Every inequality is checked on a declared box ``[0, U]^m`` times the
space-time box, using scrambled Sobol points plus corners and the faces
``u_i = 0``.  A pass is reported as ``passed_on_box``: evidence, not proof.
Every violation carries a witness point that can be re-evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError
from .model import ReactionSystem, diffusion_matrices, evaluate_phi, evaluate_reactions
from .sampling import corners, sobol

PASSED = "passed_on_box"
VIOLATED = "violated"
NOT_APPLICABLE = "not_applicable"

ZERO_TOL = 1e-12
SLACK_TOL = 1e-9


@dataclass(frozen=True)
class Sampling:
    """Where and how densely to sample.  ``seed`` fixes every Sobol stream."""

    U: float = 10.0
    extents: tuple = (1.0,)
    t_max: float = 1.0
    n_interior: int = 4096
    n_face: int = 1000
    n_times: int = 9
    seed: int = 0


@dataclass
class Witness:
    x: np.ndarray
    t: float
    u: np.ndarray
    lhs: float
    rhs: float
    index: Optional[int] = None

    def as_dict(self):
        return {"x": [float(v) for v in np.ravel(self.x)], "t": float(self.t),
                "u": [float(v) for v in np.ravel(self.u)], "lhs": float(self.lhs), "rhs": float(self.rhs),
                "index": self.index}


@dataclass
class Verdict:
    name: str
    status: str
    witness: Optional[Witness] = None
    detail: str = ""
    data: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == PASSED

    def as_dict(self):
        out = {"name": self.name, "status": self.status, "detail": self.detail}
        if self.witness is not None:
            out["witness"] = self.witness.as_dict()
        out.update({k: v for k, v in self.data.items() if isinstance(v, (int, float, str, type(None), list))})
        return out


@dataclass
class SampleSet:
    X: np.ndarray
    T: np.ndarray
    U: np.ndarray


def make_samples(m: int, s: Sampling) -> SampleSet:
    """State samples paired with space-time points.

    The state set holds the box corners, ``n_interior`` Sobol points and, for
    each face ``u_i = 0``, ``n_face`` points on the full face plus
    ``n_face // 4`` on each of the shrunken faces of size ``U/10``,
    ``U/100`` and ``U/1000``, where sign changes near the origin hide.
    """
    if s.U <= 0:
        raise ContractError("box size U must be positive")
    parts = [corners(m, s.U), sobol(m, s.n_interior, s.seed) * s.U]
    for i in range(m):
        for level, scale in enumerate((1.0, 1e-1, 1e-2, 1e-3)):
            n = s.n_face if level == 0 else max(1, s.n_face // 4)
            f = sobol(m, n, s.seed + 1 + 4 * i + level) * s.U * scale
            f[:, i] = 0.0
            parts.append(f)
    U = np.vstack(parts).T
    N = len(s.extents)
    xs = sobol(N, U.shape[1], s.seed + 997) * np.asarray(s.extents)
    times = np.linspace(0.0, s.t_max, s.n_times)
    T = times[np.arange(U.shape[1]) % s.n_times]
    return SampleSet(xs.T.copy(), T, U.copy())


def _reactions(sys, ss: SampleSet):
    f = np.empty_like(ss.U)
    for t in np.unique(ss.T):
        sel = ss.T == t
        f[:, sel] = evaluate_reactions(sys, ss.X[:, sel], float(t), ss.U[:, sel])
    return f


def _witness(ss, j, lhs, rhs, index=None):
    return Witness(ss.X[:, j].copy(), float(ss.T[j]), ss.U[:, j].copy(), float(lhs), float(rhs), index)


def _inequality(name, ss, lhs, rhs, slack, index=None, detail=""):
    """Verdict for ``lhs <= rhs + slack`` over all samples (1D arrays)."""
    gap = lhs - rhs - slack
    if np.any(gap > 0):
        j = int(np.argmax(gap))
        return Verdict(name, VIOLATED, _witness(ss, j, lhs[j], rhs[j], index), detail)
    return Verdict(name, PASSED, detail=detail)


def check_quasi_positivity(sys: ReactionSystem, sampling: Sampling = Sampling(), samples=None) -> Verdict:
    """``f_i >= 0`` on every face ``u_i = 0`` (to ``1e-12 * scale``)."""
    ss = samples or make_samples(sys.m, sampling)
    f = _reactions(sys, ss)
    scale = 1.0 + float(np.max(np.abs(f)))
    for i in range(sys.m):
        face = ss.U[i] == 0.0
        if not np.any(face):
            continue
        vals = np.where(face, f[i], np.inf)
        j = int(np.argmin(vals))
        if vals[j] < -ZERO_TOL * scale:
            return Verdict("quasi_positivity", VIOLATED, _witness(ss, j, -vals[j], 0.0, i),
                           f"f_{i + 1} < 0 at u_{i + 1} = 0")
    return Verdict("quasi_positivity", PASSED)


def check_mass_control(sys: ReactionSystem, c, K1: float, K2: float, sampling: Sampling = Sampling(),
                       samples=None) -> Verdict:
    """``sum c_i f_i <= K1 sum u_i + K2``."""
    ss = samples or make_samples(sys.m, sampling)
    f = _reactions(sys, ss)
    c = np.asarray(c, dtype=float)
    scale = 1.0 + float(np.max(np.abs(f)))
    lhs = c @ f
    rhs = K1 * np.sum(ss.U, axis=0) + K2
    v = _inequality("mass_control", ss, lhs, rhs, SLACK_TOL * scale)
    v.data.update(K1=float(K1), K2=float(K2))
    return v


def check_intermediate_sum(sys: ReactionSystem, A, r: float, K3: float, sampling: Sampling = Sampling(),
                           samples=None) -> Verdict:
    """Row-wise ``(A f)_i <= K3 (1 + sum u^r)`` for lower-triangular ``A``."""
    ss = samples or make_samples(sys.m, sampling)
    A = np.asarray(A, dtype=float)
    if A.shape != (sys.m, sys.m) or np.any(np.triu(A, 1) != 0) or np.any(np.diag(A) <= 0) or np.any(A < 0):
        raise ContractError("A must be a nonnegative lower-triangular m x m matrix with positive diagonal")
    f = _reactions(sys, ss)
    scale = 1.0 + float(np.max(np.abs(f)))
    rows = A @ f
    rhs = K3 * (1.0 + np.sum(ss.U**r, axis=0))
    for i in range(sys.m):
        v = _inequality("intermediate_sum", ss, rows[i], rhs, SLACK_TOL * scale, index=i,
                        detail=f"row {i + 1}")
        if not v.passed:
            return v
    return Verdict("intermediate_sum", PASSED, data={"r": float(r), "K3": float(K3)})


def check_polynomial_growth(sys: ReactionSystem, l: float, K4: float, sampling: Sampling = Sampling(),
                            samples=None, l_max: int = 10) -> Verdict:
    """``f_i <= K4 (1 + sum u^l)``; also finds the smallest integer ``l <= l_max`` that passes."""
    ss = samples or make_samples(sys.m, sampling)
    f = _reactions(sys, ss)
    scale = 1.0 + float(np.max(np.abs(f)))
    fmax = np.max(f, axis=0)

    def bound(ll):
        return K4 * (1.0 + np.sum(ss.U**ll, axis=0))

    smallest = next((k for k in range(l_max + 1) if np.all(fmax <= bound(k) + SLACK_TOL * scale)), None)
    v = _inequality("polynomial_growth", ss, fmax, bound(l), SLACK_TOL * scale)
    if v.witness is not None:
        v.witness.index = int(np.argmax(f[:, np.argmax(fmax - bound(l))]))
    v.data.update(l=float(l), K4=float(K4), smallest_l=smallest)
    return v


def check_phi_bounds(sys: ReactionSystem, b: float, M: float, pi_exp: float, M_tilde: float,
                     sampling: Sampling = Sampling(), samples=None) -> Verdict:
    """``M u_i^b <= Phi(u) <= M_tilde (1 + sum u^pi)`` for every ``i``."""
    ss = samples or make_samples(sys.m, sampling)
    phi = evaluate_phi(sys, ss.U)
    scale = 1.0 + float(np.max(phi))
    for i in range(sys.m):
        lower = M * ss.U[i] ** b
        v = _inequality("phi_bounds", ss, lower, phi, SLACK_TOL * scale, index=i,
                        detail=f"lower bound fails for u_{i + 1}")
        if not v.passed:
            return v
    upper = M_tilde * (1.0 + np.sum(ss.U**pi_exp, axis=0))
    v = _inequality("phi_bounds", ss, phi, upper, SLACK_TOL * scale, detail="upper bound")
    return v if not v.passed else Verdict("phi_bounds", PASSED)


# ------------------------------------------------------------------ entropy


@dataclass(frozen=True)
class EntropyFunction:
    """A scalar convex candidate ``h``.

    ``kind`` is ``entropy`` (``z log z - z + mu z``), ``power`` (``z^k``) or
    ``table`` (user callables ``h``, ``dh`` with a declared convexity flag).
    """

    kind: str
    mu: float = 0.0
    k: float = 2.0
    h: Optional[Callable] = None
    dh: Optional[Callable] = None
    convex: bool = True

    def __post_init__(self):
        if self.kind not in ("entropy", "power", "table"):
            raise ContractError(f"unknown entropy function kind {self.kind!r}")
        if self.kind == "table" and (self.h is None or self.dh is None):
            raise ContractError("table entropy functions need h and dh")

    def value(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "entropy":
            with np.errstate(divide="ignore", invalid="ignore"):
                zl = np.where(z > 0, z * np.log(np.where(z > 0, z, 1.0)), 0.0)
            return zl - z + self.mu * z
        if self.kind == "power":
            return z**self.k
        return np.asarray(self.h(z), dtype=float)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "entropy":
            with np.errstate(divide="ignore"):
                return np.log(z) + self.mu
        if self.kind == "power":
            with np.errstate(divide="ignore", invalid="ignore"):
                return self.k * z ** (self.k - 1)
        return np.asarray(self.dh(z), dtype=float)


def _safe_product(dh, f):
    with np.errstate(invalid="ignore"):
        prod = dh * f
    return np.where(f == 0, 0.0, prod)


def check_entropy_conditions(sys: ReactionSystem, h: Sequence[EntropyFunction], K5: float, K6: float,
                             K7: Optional[float] = None, r: Optional[float] = None, A=None,
                             sampling: Sampling = Sampling(), samples=None) -> Verdict:
    """Convexity of each ``h_i``, ``grad H . f <= K5 sum h + K6`` and, if given, the transformed sums.

    The transformed intermediate sums ``A (h_i' f_i) <= K7 (sum h + 1)_+^r``
    are only checked when ``A``, ``K7`` and ``r`` are all supplied.
    """
    if len(h) != sys.m:
        raise ContractError("need one entropy function per species")
    ss = samples or make_samples(sys.m, sampling)
    z = np.linspace(0.0, sampling.U, 2001)
    dz = z[1] - z[0]
    for i, hi in enumerate(h):
        if hi.kind == "table" and not hi.convex:
            return Verdict("entropy", VIOLATED, detail=f"h_{i + 1} declared non-convex")
        vals = hi.value(z)
        second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
        tol = ZERO_TOL * (1.0 + float(np.max(np.abs(vals))))
        if np.any(second < -tol):
            j = int(np.argmin(second))
            u = np.zeros(sys.m)
            u[i] = z[j + 1]
            w = Witness(np.zeros(len(sampling.extents)), 0.0, u, float(-second[j] / dz**2), 0.0, i)
            return Verdict("entropy", VIOLATED, w, f"h_{i + 1} is not convex")
    f = _reactions(sys, ss)
    scale = 1.0 + float(np.max(np.abs(f)))
    H = np.array([h[i].value(ss.U[i]) for i in range(sys.m)])
    G = np.array([_safe_product(h[i].derivative(ss.U[i]), f[i]) for i in range(sys.m)])
    lhs = np.sum(G, axis=0)
    lhs = np.where(np.isnan(lhs), -np.inf, lhs)
    v = _inequality("entropy", ss, lhs, K5 * np.sum(H, axis=0) + K6, SLACK_TOL * scale,
                    detail="entropy production bound")
    if not v.passed:
        return v
    if A is None or K7 is None or r is None:
        return Verdict("entropy", PASSED, detail="entropy production only; transformed sums not supplied",
                       data={"transformed_sums": NOT_APPLICABLE})
    A = np.asarray(A, dtype=float)
    G = np.where(np.isnan(G), -np.inf, G)
    # skip zero entries so that 0 * (-inf) from log(0) does not poison a row
    rows = np.array([np.sum(A[i, A[i] != 0][:, None] * G[A[i] != 0], axis=0) for i in range(sys.m)])
    rows = np.where(np.isnan(rows), -np.inf, rows)
    rhs = K7 * np.maximum(np.sum(H, axis=0) + 1.0, 0.0) ** r
    for i in range(sys.m):
        v = _inequality("entropy", ss, rows[i], rhs, SLACK_TOL * scale, index=i,
                        detail=f"transformed intermediate sum row {i + 1}")
        if not v.passed:
            return v
    return Verdict("entropy", PASSED, data={"transformed_sums": PASSED})


# ------------------------------------------------------- SEIRD rate audit


def check_heterogeneous_rates(sys_or_params, sampling: Sampling = Sampling(), samples=None) -> Verdict:
    """Response growth ``beta(z, n) <= c (1 + z + n)``, diffusion ellipticity and bounded rates."""
    from .seird import RATES, SeirdParams

    params = sys_or_params if isinstance(sys_or_params, SeirdParams) else sys_or_params.meta.get("params")
    if params is None:
        return Verdict("heterogeneous_rates", NOT_APPLICABLE, detail="not a SEIRD system")
    ss = samples or make_samples(4, sampling)
    s, e, i, r = ss.U
    n = s + e + i + r
    data = {}
    if params.beta_i_fn is not None:
        ci, ce = params.response_bounds
        bi = np.asarray(params.beta_i_fn(i, n), dtype=float)
        be = np.asarray(params.beta_e_fn(e, n), dtype=float)
        scale = 1.0 + float(np.max(np.abs(np.concatenate([bi, be]))))
        if np.any(bi < -ZERO_TOL * scale) or np.any(be < -ZERO_TOL * scale):
            j = int(np.argmin(np.minimum(bi, be)))
            return Verdict("heterogeneous_rates", VIOLATED, _witness(ss, j, min(bi[j], be[j]), 0.0),
                           "response functions must be nonnegative")
        for vals, z, c, lab in ((bi, i, ci, "beta_i"), (be, e, ce, "beta_e")):
            v = _inequality("heterogeneous_rates", ss, vals, c * (1.0 + z + n), SLACK_TOL * scale,
                            detail=f"{lab} growth")
            if not v.passed:
                return v
    X, T = ss.X, ss.T
    lams = []
    for k, name in enumerate(("nu_s", "nu_e", "nu_i", "nu_r")):
        lo = np.inf
        for t in np.unique(T):
            sel = T == t
            D = diffusion_matrices(_seird_shell(params), X[:, sel], float(t))[k]
            ev = np.linalg.eigvalsh(np.moveaxis(D, -1, 0))[:, 0]
            lo = min(lo, float(np.min(ev)))
        lams.append(lo)
        if not lo > 0:
            return Verdict("heterogeneous_rates", VIOLATED, detail=f"{name} not uniformly elliptic",
                           data={"lambda": lams})
    total = 0.0
    for t in np.unique(T):
        sel = T == t
        acc = 0.0
        for name in RATES:
            if name.startswith("beta"):
                continue
            val = getattr(params, name)
            acc = acc + (np.asarray(val(X[:, sel], float(t)), dtype=float) if callable(val) else float(val))
        total = max(total, float(np.max(acc)))
    if not math.isfinite(total):
        return Verdict("heterogeneous_rates", VIOLATED, detail="rates not bounded")
    data["lambda"] = lams
    data["rate_bound"] = total
    return Verdict("heterogeneous_rates", PASSED, data=data)


def _seird_shell(params):
    from .seird import _diffusion

    return ReactionSystem(m=4, reactions=lambda x, t, u: np.zeros_like(u), phi=lambda u: np.sum(u, axis=0),
                          diffusion=_diffusion(params))


# ----------------------------------------------------------- theorem logic

MODES = {"th1": "th1", "mass": "th1", "th2": "th2", "linf_la": "th2", "th3": "th3", "lq_lq": "th3"}


def _exact(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(str(v))


def admissible_r_bound(b, N: int, mode: str = "th1", aux=None) -> Fraction:
    """Strict upper bound for the intermediate-sum order ``r`` as an exact fraction.

    ``th1``: ``1 + b + 2/N``; ``th2`` (``aux = a >= 1``): ``1 + b + 2a/N``;
    ``th3`` (``aux = q > 1``): ``1 + N b/(N+2) + 2q/(N+2)``.
    """
    if mode not in MODES:
        raise ContractError(f"unknown mode {mode!r}; use th1, th2 or th3")
    if int(N) != N or N < 1:
        raise ContractError("N must be a positive integer")
    b = _exact(b)
    if b < 0:
        raise ContractError("b must be >= 0")
    N = Fraction(int(N))
    mode = MODES[mode]
    if mode == "th1":
        return 1 + b + 2 / N
    if aux is None:
        raise ContractError(f"{mode} needs an auxiliary exponent")
    a = _exact(aux)
    if mode == "th2":
        if a < 1:
            raise ContractError("th2 needs a >= 1")
        return 1 + b + 2 * a / N
    if a <= 1:
        raise ContractError("th3 needs q > 1")
    return 1 + N * b / (N + 2) + 2 * a / (N + 2)


@dataclass
class Applicability:
    theorem: Optional[str]
    hypotheses_passed: bool
    r_bound: Optional[Fraction]
    r_margin: Optional[float]
    uniform_in_time: bool
    reason: str

    def as_dict(self):
        return {
            "theorem": self.theorem,
            "hypotheses_passed": self.hypotheses_passed,
            "r_bound": None if self.r_bound is None else str(self.r_bound),
            "r_margin": self.r_margin,
            "uniform_in_time": self.uniform_in_time,
            "reason": self.reason,
        }


def theorem_applicability(verdicts: dict, b, N: int, r, K1=None, K2=None, mode: str = "th1", aux=None,
                          boundary: str = "neumann_zero_flux", sup_F: Optional[float] = None,
                          K5=None, K6=None) -> Applicability:
    """Which existence result the audited hypotheses support, and whether boundedness is uniform.

    ``mode`` selects the a priori bound: ``th1`` (mass control), ``th2``
    (``L^inf(L^a)`` bound with ``aux = a``), ``th3`` (``L^q(L^q)`` with
    ``aux = q``) or ``th4`` (entropy).  Robin boundaries map onto the
    Robin result with the same case split and ``r >= 0``.
    """
    robin = boundary == "robin"
    base = ["phi_bounds", "quasi_positivity", "polynomial_growth"]
    if mode == "th4":
        need = base + ["entropy"]
        bound = admissible_r_bound(b, N, "th1")
    else:
        key = MODES.get(mode)
        if key is None:
            raise ContractError(f"unknown mode {mode!r}")
        need = base + ["intermediate_sum"] + (["mass_control"] if key == "th1" else [])
        bound = admissible_r_bound(b, N, key, aux)
    missing = [k for k in need if k not in verdicts or not verdicts[k].passed]
    r_low = 0 if robin else 1
    r_ok = r_low <= _exact(r) < bound
    margin = float(bound - _exact(r))
    name = "th5" if robin else ("th4" if mode == "th4" else MODES[mode])
    if robin and mode == "th4":
        return Applicability(None, False, bound, margin, False, "entropy route not available with Robin boundaries")
    passed = not missing and r_ok
    if not passed:
        why = []
        if missing:
            why.append("not passed on box: " + ", ".join(missing))
        if not r_ok:
            why.append(f"r = {r} outside [{r_low}, {bound})")
        return Applicability(name, False, bound, margin, False, "; ".join(why))
    if mode == "th4":
        if K5 is not None and (K5 < 0 or (K5 == 0 and K6 == 0)):
            return Applicability(name, True, bound, margin, True, f"K5 = {K5:g} < 0 or K5 = K6 = 0")
        return Applicability(name, True, bound, margin, False, "K5 >= 0 and not K5 = K6 = 0")
    if MODES[mode] == "th1":
        if K1 is not None and (K1 < 0 or (K1 == 0 and K2 == 0)):
            clause = "K1 < 0" if K1 < 0 else "K1 = K2 = 0"
            return Applicability(name, True, bound, margin, True, f"{clause} (K1 = {K1:g})")
        return Applicability(name, True, bound, margin, False, f"K1 = {K1:g} > 0 or K2 > 0: bounds may grow in time")
    if sup_F is not None and math.isfinite(sup_F):
        return Applicability(name, True, bound, margin, True, "sup_T F(T) < infinity")
    return Applicability(name, True, bound, margin, False, "sup_T F(T) not declared finite")


@dataclass
class AuditReport:
    box: float
    verdicts: dict
    r_bounds: dict
    applicability: Applicability
    notes: list = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(v.status != VIOLATED for v in self.verdicts.values())

    @property
    def witnesses(self) -> dict:
        return {k: v.witness for k, v in self.verdicts.items() if v.witness is not None}

    def as_dict(self):
        return {
            "box": self.box,
            "verdicts": {k: v.as_dict() for k, v in self.verdicts.items()},
            "r_bounds": {k: str(v) for k, v in self.r_bounds.items()},
            "applicability": self.applicability.as_dict(),
            "notes": list(self.notes),
        }

    def format_text(self) -> str:
        lines = [f"audit on box [0, {self.box:g}]^m"]
        for k, v in self.verdicts.items():
            line = f"  {k:<22} {v.status}"
            if v.detail:
                line += f"  ({v.detail})"
            lines.append(line)
            if v.witness is not None:
                w = v.witness
                lines.append(f"      witness x={np.round(w.x, 6).tolist()} t={w.t:g} u={np.round(w.u, 6).tolist()}"
                             f" lhs={w.lhs:.6g} rhs={w.rhs:.6g}")
        lines.append("  admissible r bounds: " + ", ".join(f"{k} < {v}" for k, v in self.r_bounds.items()))
        a = self.applicability
        lines.append(f"  theorem: {a.theorem} hypotheses_passed={a.hypotheses_passed} r_margin={a.r_margin}")
        lines.append(f"  uniform in time: {a.uniform_in_time} ({a.reason})")
        lines.extend("  note: " + n for n in self.notes)
        return "\n".join(lines)


def audit(sys: ReactionSystem, sampling: Sampling = Sampling(), boundary: str = "neumann_zero_flux",
          mode: str = "th1", aux=None, sup_F=None, entropy=None) -> AuditReport:
    """Run every applicable check against the system's declared structural constants.

    ``entropy`` is an optional dict with keys ``h`` (list of
    :class:`EntropyFunction`), ``K5``, ``K6`` and optionally ``K7``, ``r``, ``A``.
    """
    st = sys.structural
    if st is None:
        raise ContractError("system declares no structural parameters to audit")
    ss = make_samples(sys.m, sampling)
    v = {
        "quasi_positivity": check_quasi_positivity(sys, sampling, ss),
        "mass_control": check_mass_control(sys, st.c, st.K1, st.K2, sampling, ss),
        "intermediate_sum": check_intermediate_sum(sys, st.A, st.r, st.K3, sampling, ss),
        "polynomial_growth": check_polynomial_growth(sys, st.l, st.K4, sampling, ss),
        "phi_bounds": check_phi_bounds(sys, st.b, st.M, st.pi_exp, st.M_tilde, sampling, ss),
    }
    if entropy is not None:
        v["entropy"] = check_entropy_conditions(sys, entropy["h"], entropy["K5"], entropy["K6"],
                                                entropy.get("K7"), entropy.get("r"), entropy.get("A"),
                                                sampling, ss)
    else:
        v["entropy"] = Verdict("entropy", NOT_APPLICABLE, detail="no entropy functions declared")
    if "params" in sys.meta:
        v["heterogeneous_rates"] = check_heterogeneous_rates(sys, sampling)
    N = len(sampling.extents)
    bounds = {"th1": admissible_r_bound(st.b, N, "th1")}
    if mode in ("th2", "linf_la", "th3", "lq_lq") and aux is not None:
        bounds[MODES[mode]] = admissible_r_bound(st.b, N, mode, aux)
    app = theorem_applicability(v, st.b, N, st.r, st.K1, st.K2, mode, aux, boundary, sup_F,
                                (entropy or {}).get("K5"), (entropy or {}).get("K6"))
    notes = ["local Lipschitz continuity of f is assumed, not audited",
             "verdicts hold on the sampled box only"]
    return AuditReport(sampling.U, v, bounds, app, notes)
