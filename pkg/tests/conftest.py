import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qrdiff.model import ReactionSystem, StructuralParams, constant_diffusion

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_system(reactions, m=1, phi=None, d=None, structural=None, names=()):
    """Small helper for hand-built systems in tests."""
    return ReactionSystem(
        m=m,
        reactions=reactions,
        phi=phi or (lambda u: np.ones(np.shape(u)[1:])),
        diffusion=constant_diffusion(d or [1.0] * m),
        structural=structural,
        names=names,
    )


def semilinear_structural(m=1, **kw):
    base = dict(b=0.0, M=1.0, pi_exp=1.0, M_tilde=1.0, c=(1.0,) * m, K1=0.0, K2=0.0,
                A=tuple(tuple(1.0 if i == j else 0.0 for j in range(m)) for i in range(m)),
                r=1.0, K3=0.0, l=1.0, K4=0.0)
    base.update(kw)
    return StructuralParams(**base)


@pytest.fixture
def heat_system():
    return make_system(lambda x, t, u: np.zeros_like(u), structural=semilinear_structural())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome != "passed":
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[name] = (report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        outcome, detail = _CRITERIA[name]
        num, label = name[len("test_criterion_"):].split("_", 1)
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {int(num):2d} {status}  {label.replace('_', ' ')}  {detail}")
