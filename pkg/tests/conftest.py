import pytest

from qutrit_gst.clifford import native_clifford_group
from qutrit_gst.design import build_design, default_germs, select_fiducials
from qutrit_gst.gates import build_native_gateset


@pytest.fixture(scope="session")
def model():
    return build_native_gateset()


@pytest.fixture(scope="session")
def group(model):
    return native_clifford_group(model)


@pytest.fixture(scope="session")
def fids(model, group):
    return select_fiducials(model=model, group=group)


@pytest.fixture(scope="session")
def small_design(fids, model):
    """LGST-sized design: fiducial pairs plus single germ repetitions."""
    return build_design(fids, default_germs(), (0, 1), model)


@pytest.fixture(scope="session")
def full_design(fids, model):
    return build_design(fids, default_germs(), (0, 1, 2, 4, 8, 16), model)
