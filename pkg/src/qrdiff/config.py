"""INI run configurations: parsing with full error collection and canonical emit.

Example::

    [model]
    preset = seird_quadratic

    [grid]
    shape = 64, 64
    extents = 1, 1

    [run]
    T = 5

Sections and keys are fixed (see ``SCHEMA``); species-keyed sections
(``[reactions]``, ``[diffusion]``, initial expressions, exact solutions)
take one key per species.  ``emit_config`` writes every value explicitly in
a fixed order so that ``parse_config_text(emit_config(cfg)) == cfg``.
"""
from __future__ import annotations

import ast
import configparser
import difflib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, ContractError, QrdError
from .grid import BoundarySpec, Grid
from .integrator import StepControl
from .model import ReactionSystem, StructuralParams, constant_diffusion

PRESETS = ("seird_quadratic", "seird_original", "seird_delta", "seird_hetero", "heat", "custom")
SEIRD_RATE_KEYS = ("alpha", "mu", "sigma", "phi_e", "phi_r", "phi_d", "beta_i", "beta_e", "A0",
                   "nu_s", "nu_e", "nu_i", "nu_r", "beta_i_response", "beta_e_response", "response_bounds")
INITIAL_KINDS = ("gaussian", "homogeneous", "two_cluster", "expression")


# ------------------------------------------------------------------ specs


@dataclass(frozen=True)
class ModelSpec:
    preset: str = "seird_quadratic"
    delta: float = 0.01
    include_deceased: bool = True
    species: tuple = ()
    constants: tuple = ()
    phi: str = "1"
    reactions: tuple = ()
    diffusion: tuple = ()
    rates: tuple = ()
    structural: Optional[StructuralParams] = None


@dataclass(frozen=True)
class GridSpec:
    shape: tuple = (64, 64)
    extents: tuple = (1.0, 1.0)


@dataclass(frozen=True)
class InitialSpec:
    kind: str = "gaussian"
    background: float = 1.0
    mass: float = 0.01
    width: float = 0.05
    values: tuple = (1.0, 0.0, 0.0, 0.0)
    expressions: tuple = ()


@dataclass(frozen=True)
class RunSpec:
    T: float = 5.0
    checkpoints: int = 200
    eps: float = 0.0
    control: StepControl = StepControl()
    snapshots: int = 5
    monitor: bool = True


@dataclass(frozen=True)
class EnergySpec:
    orders: tuple = (2,)
    theta: Optional[tuple] = None
    samples: int = 64


@dataclass(frozen=True)
class AuditSpec:
    U: float = 10.0
    seed: int = 0
    n_interior: int = 4096
    n_face: int = 1000
    mode: str = "th1"
    aux: Optional[float] = None
    sup_F: Optional[float] = None


@dataclass(frozen=True)
class ConvergeSpec:
    kind: str = "grid"
    levels: int = 3
    eps: tuple = (1e-2, 1e-3, 1e-4)
    norm: str = "max"
    exact: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec = ModelSpec()
    grid: GridSpec = GridSpec()
    boundary: BoundarySpec = BoundarySpec()
    initial: InitialSpec = InitialSpec()
    run: RunSpec = RunSpec()
    energy: EnergySpec = EnergySpec()
    audit: AuditSpec = AuditSpec()
    converge: ConvergeSpec = ConvergeSpec()
    output: str = "runs/default"

    @property
    def species(self) -> tuple:
        if self.model.preset == "heat":
            return ("u",)
        if self.model.preset == "custom":
            return self.model.species
        return ("s", "e", "i", "r")


# --------------------------------------------------------- value handling


def _f(s):
    return float(s)


def _floats(s):
    return tuple(float(v) for v in s.split(",") if v.strip())


def _ints(s):
    return tuple(int(v) for v in s.split(",") if v.strip())


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _opt(conv):
    def parse(s):
        return None if s.strip().lower() in ("", "none", "auto") else conv(s)
    return parse


def _fmt(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    return str(v)


def _matrix(s):
    rows = [r for r in s.split(";") if r.strip()]
    return tuple(tuple(float(v) for v in r.split(",")) for r in rows)


def _fmt_matrix(A):
    return "; ".join(", ".join(repr(float(v)) for v in row) for row in A)


# key -> (attribute, converter)
SCHEMA = {
    "model": {"preset": str, "delta": _f, "include_deceased": _bool, "species": None, "constants": None,
              "phi": str},
    "grid": {"shape": _ints, "extents": _floats},
    "boundary": {"kind": str, "alpha": _floats},
    "initial": {"kind": str, "background": _f, "mass": _f, "width": _f, "values": _floats},
    "run": {"T": _f, "checkpoints": int, "eps": _f, "cfl": _f, "dt_min": _f, "dt_max": _f, "rho": _f,
            "snapshots": int, "monitor": _bool},
    "energy": {"orders": _ints, "theta": _opt(_floats), "samples": int},
    "audit": {"U": _f, "seed": int, "n_interior": int, "n_face": int, "mode": str, "aux": _opt(_f),
              "sup_F": _opt(_f)},
    "converge": {"kind": str, "levels": int, "eps": _floats, "norm": str},
    "output": {"directory": str},
    "structural": {"b": _f, "M": _f, "pi_exp": _f, "M_tilde": _f, "c": _floats, "K1": _f, "K2": _f,
                   "A": _matrix, "r": _f, "K3": _f, "l": _f, "K4": _f},
    "rates": {k: str for k in SEIRD_RATE_KEYS},
}
SPECIES_SECTIONS = ("reactions", "diffusion", "exact")


def _suggest(key, options):
    close = difflib.get_close_matches(key, list(options), n=1, cutoff=0.5)
    return f"; did you mean {close[0]!r}?" if close else ""


def _uses_space_time(expr: str) -> bool:
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError:
        return False
    return any(isinstance(n, ast.Name) and n.id in ("x", "y", "t") for n in ast.walk(tree))


def _number_or_expr(s: str):
    try:
        return float(s)
    except ValueError:
        return s.strip()


# ------------------------------------------------------------------ parse


def parse_config(path) -> RunConfig:
    """Read and validate an INI file (raises ConfigError listing every problem)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} not found")
    return parse_config_text(path.read_text(), source=str(path))


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",), strict=True)
    cp.optionxform = str
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc.message if hasattr(exc, 'message') else exc}") from None
    errors = []
    raw = {}
    known = set(SCHEMA) | set(SPECIES_SECTIONS)
    for sec in cp.sections():
        if sec not in known:
            errors.append(f"unknown section [{sec}]" + _suggest(sec, known))
            continue
        raw[sec] = dict(cp.items(sec))

    def get(sec, key, default):
        if key not in raw.get(sec, {}):
            return default
        conv = SCHEMA[sec][key]
        try:
            return conv(raw[sec][key])
        except (ValueError, TypeError) as exc:
            errors.append(f"[{sec}] {key}: cannot parse {raw[sec][key]!r} ({exc})")
            return default

    # unknown keys in fixed sections
    m_raw = raw.get("model", {})
    preset = m_raw.get("preset", ModelSpec.preset).strip()
    if preset not in PRESETS:
        errors.append(f"[model] preset: unknown preset {preset!r}" + _suggest(preset, PRESETS))
        preset = ModelSpec.preset
    species = tuple(v.strip() for v in m_raw.get("species", "").split(",") if v.strip())
    if preset == "heat":
        species = ("u",)
    elif preset != "custom":
        species = ("s", "e", "i", "r")
    initial_keys = set(SCHEMA["initial"]) | set(species)
    for sec, items in raw.items():
        if sec in SPECIES_SECTIONS:
            allowed = set(species)
        elif sec == "initial":
            allowed = initial_keys
        else:
            allowed = set(SCHEMA[sec])
        for key in items:
            if key not in allowed:
                msg = f"[{sec}] unknown key {key!r}" + _suggest(key, allowed)
                if sec == "diffusion" and ("." in key):
                    msg = (f"[diffusion] {key}: only scalar or diagonal diffusion is supported; "
                           "off-diagonal tensor entries cannot be represented by two-point fluxes")
                errors.append(msg)

    # model
    constants = ()
    if "constants" in m_raw:
        try:
            pairs = []
            for item in m_raw["constants"].split(","):
                if item.strip():
                    name, val = item.split("=")
                    pairs.append((name.strip(), float(val)))
            constants = tuple(pairs)
        except ValueError:
            errors.append(f"[model] constants: expected 'name = value, ...', got {m_raw['constants']!r}")
    structural = None
    if "structural" in raw:
        vals = {k: get("structural", k, None) for k in SCHEMA["structural"]}
        missing = [k for k, v in vals.items() if v is None]
        if missing:
            errors.append("[structural] missing keys: " + ", ".join(missing))
        else:
            try:
                structural = StructuralParams(pi_exp=vals["pi_exp"], **{k: v for k, v in vals.items() if k != "pi_exp"})
            except ContractError as exc:
                errors.append(f"[structural] {exc}")
    reactions = tuple(raw.get("reactions", {}).get(s, "").strip() for s in species) if preset == "custom" else ()
    diffusion = tuple(raw.get("diffusion", {}).get(s, "").strip() for s in species) if preset == "custom" else ()
    if preset == "custom":
        if not species:
            errors.append("[model] species: custom models must list their species")
        for name, group in (("reactions", reactions), ("diffusion", diffusion)):
            absent = [s for s, e in zip(species, group) if not e]
            if absent:
                errors.append(f"[{name}] missing entries for species: " + ", ".join(absent))
    rates = tuple((k, _number_or_expr(raw["rates"][k])) for k in SEIRD_RATE_KEYS if k in raw.get("rates", {}))
    model = ModelSpec(
        preset=preset,
        delta=get("model", "delta", ModelSpec.delta),
        include_deceased=get("model", "include_deceased", ModelSpec.include_deceased),
        species=species if preset == "custom" else (),
        constants=constants,
        phi=m_raw.get("phi", ModelSpec.phi).strip() if preset == "custom" else ModelSpec.phi,
        reactions=reactions,
        diffusion=diffusion,
        rates=rates,
        structural=structural,
    )
    if preset == "custom" and _uses_space_time(model.phi):
        errors.append(f"[model] phi must depend on the densities only, got {model.phi!r}")
    if rates and preset in ("heat", "custom"):
        errors.append(f"[rates] overrides only apply to SEIRD presets, not {preset!r}")
    if model.preset == "seird_delta" and not model.delta > 0:
        errors.append("[model] delta must be positive")

    shape = get("grid", "shape", GridSpec.shape if preset != "heat" else (128,))
    extents = get("grid", "extents", None)
    if extents is None:
        extents = tuple(1.0 for _ in shape)
    grid = GridSpec(shape, extents)
    try:
        Grid(shape, extents)
    except ConfigError as exc:
        errors.extend(f"[grid] {e}" for e in exc.errors)

    try:
        boundary = BoundarySpec(get("boundary", "kind", "neumann_zero_flux"), get("boundary", "alpha", ()))
        if boundary.kind == "robin":
            boundary.alpha_array(len(species) or 1)
    except ConfigError as exc:
        errors.extend(f"[boundary] {e}" for e in exc.errors)
        boundary = BoundarySpec()

    ikind = get("initial", "kind", "expression" if preset in ("heat", "custom") else InitialSpec.kind)
    if ikind not in INITIAL_KINDS:
        errors.append(f"[initial] kind: unknown {ikind!r}" + _suggest(ikind, INITIAL_KINDS))
    iraw = raw.get("initial", {})
    exprs = tuple(iraw.get(s, "").strip() for s in species) if ikind == "expression" else ()
    if ikind == "expression":
        if preset == "heat" and not exprs[0]:
            exprs = ("1 + cos(pi*x)",)
        absent = [s for s, e in zip(species, exprs) if not e]
        if absent:
            errors.append("[initial] missing expressions for species: " + ", ".join(absent))
    elif preset in ("heat", "custom"):
        errors.append(f"[initial] kind {ikind!r} is only available for SEIRD presets; use expression")
    initial = InitialSpec(
        kind=ikind,
        background=get("initial", "background", InitialSpec.background),
        mass=get("initial", "mass", InitialSpec.mass),
        width=get("initial", "width", InitialSpec.width),
        values=get("initial", "values", InitialSpec.values),
        expressions=exprs,
    )
    if initial.width <= 0:
        errors.append("[initial] width must be positive")
    if initial.mass < 0 or initial.background < 0 or any(v < 0 for v in initial.values):
        errors.append("[initial] background, mass and values must be nonnegative")

    T = get("run", "T", RunSpec.T)
    if not T > 0:
        errors.append("T must be positive")
    checkpoints = get("run", "checkpoints", RunSpec.checkpoints)
    if checkpoints < 3:
        errors.append("[run] checkpoints must be at least 3")
    eps = get("run", "eps", RunSpec.eps)
    if eps < 0:
        errors.append("[run] eps must be >= 0")
    d = StepControl()
    try:
        control = StepControl(get("run", "cfl", d.cfl), get("run", "dt_min", d.dt_min),
                              get("run", "dt_max", d.dt_max), get("run", "rho", d.rho))
    except ConfigError as exc:
        errors.extend(f"[run] {e}" for e in exc.errors)
        control = d
    snapshots = get("run", "snapshots", RunSpec.snapshots)
    if snapshots < 0:
        errors.append("[run] snapshots must be >= 0")
    run = RunSpec(T, checkpoints, eps, control, snapshots, get("run", "monitor", RunSpec.monitor))

    orders = get("energy", "orders", EnergySpec.orders)
    for p in orders:
        if p < 2:
            errors.append(f"[energy] requested p = {p} must be >= 2")
        elif p > 8:
            errors.append(f"[energy] requested p = {p} exceeds the cap 8")
    theta = get("energy", "theta", None)
    if theta is not None and (len(theta) != len(species) or any(v <= 0 for v in theta)):
        errors.append(f"[energy] theta needs {len(species)} positive entries")
    energy = EnergySpec(orders, theta, get("energy", "samples", EnergySpec.samples))

    audit = AuditSpec(
        U=get("audit", "U", AuditSpec.U),
        seed=get("audit", "seed", AuditSpec.seed),
        n_interior=get("audit", "n_interior", AuditSpec.n_interior),
        n_face=get("audit", "n_face", AuditSpec.n_face),
        mode=get("audit", "mode", AuditSpec.mode),
        aux=get("audit", "aux", None),
        sup_F=get("audit", "sup_F", None),
    )
    if not audit.U > 0:
        errors.append("[audit] U must be positive")
    if audit.mode not in ("th1", "th2", "th3", "th4"):
        errors.append(f"[audit] mode must be th1, th2, th3 or th4, got {audit.mode!r}")

    ckind = get("converge", "kind", ConvergeSpec.kind)
    if ckind not in ("grid", "eps"):
        errors.append(f"[converge] kind must be grid or eps, got {ckind!r}")
    norm = get("converge", "norm", ConvergeSpec.norm)
    if norm not in ("max", "l2"):
        errors.append(f"[converge] norm must be max or l2, got {norm!r}")
    exact = ()
    if "exact" in raw:
        exact = tuple(raw["exact"].get(s, "").strip() for s in species)
        if any(not e for e in exact):
            errors.append("[exact] needs one expression per species")
    elif preset == "heat" and len(shape) == 1:
        exact = ("1 + exp(-pi**2*t)*cos(pi*x)",) if exprs == ("1 + cos(pi*x)",) else ()
    converge = ConvergeSpec(ckind, get("converge", "levels", ConvergeSpec.levels),
                            get("converge", "eps", ConvergeSpec.eps), norm, exact)
    if converge.levels < 2:
        errors.append("[converge] levels must be >= 2")

    cfg = RunConfig(model, grid, boundary, initial, run, energy, audit, converge,
                    get("output", "directory", RunConfig.output))
    if not errors:
        errors.extend(_probe(cfg))
    if errors:
        raise ConfigError(errors)
    return cfg


def _probe(cfg: RunConfig) -> list:
    """Build everything once and evaluate each model function at a few points."""
    errs = []
    try:
        sys = build_system(cfg)
        grid = build_grid(cfg)
        u0 = initial_field(cfg, sys, grid)
        from .model import diagonal_diffusion, evaluate_phi, evaluate_reactions

        evaluate_reactions(sys, grid.centers, 0.0, u0)
        evaluate_phi(sys, u0)
        d = diagonal_diffusion(sys, grid.centers, 0.0)
        if np.any(~np.isfinite(d)) or np.any(d <= 0):
            errs.append("diffusion rates must be positive and finite on the grid")
    except ConfigError as exc:
        errs.extend(exc.errors)
    except (QrdError, ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
        errs.append(f"model evaluation failed: {exc}")
    return errs


# ------------------------------------------------------------------- emit


def emit_config(cfg: RunConfig) -> str:
    """Canonical INI text; every key explicit, fixed order."""
    out = []

    def section(name, items):
        out.append(f"[{name}]")
        out.extend(f"{k} = {v}" for k, v in items)
        out.append("")

    m = cfg.model
    items = [("preset", m.preset), ("delta", _fmt(m.delta)), ("include_deceased", _fmt(m.include_deceased))]
    if m.preset == "custom":
        items.append(("species", ", ".join(m.species)))
        items.append(("phi", m.phi))
    if m.constants:
        items.append(("constants", ", ".join(f"{k} = {v!r}" for k, v in m.constants)))
    section("model", items)
    if m.preset == "custom":
        section("reactions", list(zip(m.species, m.reactions)))
        section("diffusion", list(zip(m.species, m.diffusion)))
    if m.rates:
        section("rates", [(k, _fmt(v)) for k, v in m.rates])
    if m.structural is not None:
        s = m.structural
        section("structural", [("b", _fmt(s.b)), ("M", _fmt(s.M)), ("pi_exp", _fmt(s.pi_exp)),
                               ("M_tilde", _fmt(s.M_tilde)), ("c", _fmt(s.c)), ("K1", _fmt(s.K1)),
                               ("K2", _fmt(s.K2)), ("A", _fmt_matrix(s.A)), ("r", _fmt(s.r)),
                               ("K3", _fmt(s.K3)), ("l", _fmt(s.l)), ("K4", _fmt(s.K4))])
    section("grid", [("shape", _fmt(cfg.grid.shape)), ("extents", _fmt(cfg.grid.extents))])
    b = [("kind", cfg.boundary.kind)]
    if cfg.boundary.alpha:
        b.append(("alpha", _fmt(cfg.boundary.alpha)))
    section("boundary", b)
    i = cfg.initial
    items = [("kind", i.kind), ("background", _fmt(i.background)), ("mass", _fmt(i.mass)),
             ("width", _fmt(i.width)), ("values", _fmt(i.values))]
    items += list(zip(cfg.species, i.expressions))
    section("initial", items)
    r = cfg.run
    section("run", [("T", _fmt(r.T)), ("checkpoints", _fmt(r.checkpoints)), ("eps", _fmt(r.eps)),
                    ("cfl", _fmt(r.control.cfl)), ("dt_min", _fmt(r.control.dt_min)),
                    ("dt_max", _fmt(r.control.dt_max)), ("rho", _fmt(r.control.rho)),
                    ("snapshots", _fmt(r.snapshots)), ("monitor", _fmt(r.monitor))])
    e = cfg.energy
    section("energy", [("orders", _fmt(e.orders)), ("theta", "auto" if e.theta is None else _fmt(e.theta)),
                       ("samples", _fmt(e.samples))])
    a = cfg.audit
    section("audit", [("U", _fmt(a.U)), ("seed", _fmt(a.seed)), ("n_interior", _fmt(a.n_interior)),
                      ("n_face", _fmt(a.n_face)), ("mode", a.mode), ("aux", _fmt(a.aux)), ("sup_F", _fmt(a.sup_F))])
    c = cfg.converge
    section("converge", [("kind", c.kind), ("levels", _fmt(c.levels)), ("eps", _fmt(c.eps)), ("norm", c.norm)])
    if c.exact:
        section("exact", list(zip(cfg.species, c.exact)))
    section("output", [("directory", cfg.output)])
    return "\n".join(out)


# ----------------------------------------------------------------- builders


def build_grid(cfg: RunConfig) -> Grid:
    return Grid(cfg.grid.shape, cfg.grid.extents)


def _rate(value, constants):
    from .expressions import field_function

    if isinstance(value, float):
        return value
    f = field_function([value], constants)
    return lambda x, t: f(x, t)[0]


def _response(expr, var, constants):
    from .expressions import _eval, compile_expression

    tree = compile_expression(expr, (var,), constants)

    def beta(z, n):
        env = {"pi": np.pi, **constants, var: np.asarray(z, dtype=float), "u1": np.asarray(z, dtype=float),
               "n": np.asarray(n, dtype=float)}
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(_eval(tree, env), dtype=float), np.shape(z)).copy()

    return beta


def build_system(cfg: RunConfig) -> ReactionSystem:
    """The reaction system a config describes."""
    from . import seird
    from .expressions import field_function, scalar_function, vector_function

    m = cfg.model
    constants = dict(m.constants)
    if m.preset == "heat":
        st = StructuralParams(b=0.0, M=1.0, pi_exp=1.0, M_tilde=1.0, c=(1.0,), K1=0.0, K2=0.0,
                              A=((1.0,),), r=1.0, K3=0.0, l=1.0, K4=0.0)
        return ReactionSystem(m=1, reactions=lambda x, t, u: np.zeros_like(u),
                              phi=lambda u: np.ones(np.shape(u)[1:]), diffusion=constant_diffusion([1.0]),
                              structural=m.structural or st, names=("u",), label="heat")
    if m.preset == "custom":
        rates = [e for e in m.diffusion]
        try:
            vals = [float(e) for e in rates]
            diffusion = constant_diffusion(vals)
        except ValueError:
            diffusion = field_function(rates, constants)
        return ReactionSystem(
            m=len(m.species),
            reactions=vector_function(m.reactions, m.species, constants),
            phi=scalar_function(m.phi, m.species, constants),
            diffusion=diffusion,
            structural=m.structural,
            names=m.species,
            label="custom",
        )
    kw = {}
    rates = dict(m.rates)
    for key in seird.RATES + seird.DIFFUSIONS:
        if key in rates:
            kw[key] = _rate(rates[key], constants)
    if "A0" in rates:
        if not isinstance(rates["A0"], float):
            raise ConfigError("[rates] A0 must be a number")
        kw["A0"] = rates["A0"]
    if "beta_i_response" in rates or "beta_e_response" in rates:
        if m.preset != "seird_hetero":
            raise ConfigError("[rates] response functions need preset = seird_hetero")
        try:
            kw["beta_i_fn"] = _response(str(rates["beta_i_response"]), "i", constants)
            kw["beta_e_fn"] = _response(str(rates["beta_e_response"]), "e", constants)
            kw["response_bounds"] = _floats(str(rates["response_bounds"]))
        except KeyError as exc:
            raise ConfigError(f"[rates] missing {exc.args[0]}") from None
    kw["include_deceased"] = m.include_deceased
    kw["domain"] = cfg.grid.extents
    kw["horizon"] = cfg.run.T
    params = seird.SeirdParams(**kw)
    if m.preset == "seird_delta":
        sys = seird.build_seird_delta(params, m.delta)
    else:
        sys = seird.PRESETS[m.preset](params)
    if m.structural is not None:
        sys = replace(sys, structural=m.structural)
    return sys


def initial_field(cfg: RunConfig, sys: ReactionSystem, grid: Grid) -> np.ndarray:
    from .expressions import field_function
    from .seird import seird_initial_profiles

    i = cfg.initial
    if i.kind == "expression":
        f = field_function(list(i.expressions), dict(cfg.model.constants))
        u = np.array(f(grid.centers, 0.0), dtype=float)
    else:
        u = seird_initial_profiles(i.kind, grid, background=i.background, mass=i.mass, width=i.width,
                                   values=i.values)
    if u.shape != (sys.m,) + grid.shape:
        raise ConfigError(f"initial data has shape {u.shape}, expected {(sys.m,) + grid.shape}")
    if not np.all(np.isfinite(u)) or np.any(u < 0):
        raise ConfigError("initial data must be finite and nonnegative")
    return u


def exact_solution(cfg: RunConfig):
    """Callable ``(grid, t) -> field`` from the ``[exact]`` section, or None."""
    from .expressions import field_function

    if not cfg.converge.exact:
        return None
    f = field_function(list(cfg.converge.exact), dict(cfg.model.constants))
    return lambda grid, t: np.asarray(f(grid.centers, t), dtype=float)
