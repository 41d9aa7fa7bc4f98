import pytest

from mfglab import EXAMPLE_MODEL, INSTANCE_B, solve_root_system, solve_selected


@pytest.fixture(scope="session")
def example_model():
    return EXAMPLE_MODEL


@pytest.fixture(scope="session")
def instance_b():
    return INSTANCE_B


@pytest.fixture(scope="session")
def example_roots(example_model):
    return solve_root_system(example_model)


@pytest.fixture(scope="session")
def example_selected(example_model):
    return solve_selected(example_model)


@pytest.fixture(scope="session")
def instance_b_selected(instance_b):
    return solve_selected(instance_b)
