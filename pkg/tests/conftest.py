import pytest

from gputherm.floorplan import ChipSpec, generate_layer0, generate_layer2
from gputherm.stack import build_fermi_stack
from gputherm.thermal.kernels import BACKENDS

ACCEPTANCE_RESULTS = []


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return request.param


@pytest.fixture(scope="session")
def fp0():
    return generate_layer0()


@pytest.fixture(scope="session")
def fp2():
    return generate_layer2()


@pytest.fixture(scope="session")
def fermi_stack(fp0, fp2):
    return build_fermi_stack(fp0, fp2)


@pytest.fixture(scope="session")
def reduced_fp0():
    return generate_layer0(ChipSpec(reduced_l2=True))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(line)
