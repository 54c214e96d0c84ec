import pytest
from hypothesis import settings

from sna_lab.torus_dynamics import ArctanFamily, Rotation

settings.register_profile("lab", deadline=None, max_examples=60)
settings.load_profile("lab")

# lower end of the default bracket (a=40, tol 1e-5, budget 1e4, m 4096); the
# acceptance suite recomputes it and checks this value
BETA_HAT = 0.48714447021484375
FIG_BETA = 0.48714


@pytest.fixture(scope="session")
def golden():
    return Rotation.golden()


@pytest.fixture(scope="session")
def fam_c():
    return ArctanFamily(40.0, BETA_HAT)


@pytest.fixture(scope="session")
def fam_fig():
    return ArctanFamily(40.0, FIG_BETA)


def pytest_configure(config):
    config._acceptance = {}


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config._acceptance


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(config, "_acceptance", {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(log):
        ok, detail = log[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
