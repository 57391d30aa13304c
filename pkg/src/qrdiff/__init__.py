"""Finite-volume solver and structural auditor for cross-diffusion reaction systems."""
from .audit import Sampling, audit, admissible_r_bound, theorem_applicability
from .config import RunConfig, emit_config, parse_config, parse_config_text
from .energy import EnergyConfig, check_pd, dissipation_monitor, lp_energy, select_theta
from .errors import (
    ConfigError,
    ContractError,
    IntegrationError,
    ModelError,
    QrdError,
    SelectionError,
    StiffnessError,
)
from .grid import NEUMANN, BoundarySpec, Grid
from .integrator import StepControl, epsilon_sweep, integrate
from .model import ReactionSystem, StructuralParams
from .seird import SeirdParams, build_seird_quadratic

__version__ = "0.1.0"
