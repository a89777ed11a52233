import numpy as np
import pytest

from fisherflow.mesh import DomainSpec, build_mesh


@pytest.fixture(scope="session")
def square_spec():
    return DomainSpec(kind="rectangle", h=0.1, width=1.0, height=1.0)


@pytest.fixture(scope="session")
def square_mesh(square_spec):
    return build_mesh(square_spec)


@pytest.fixture(scope="session")
def fine_square_mesh():
    return build_mesh(DomainSpec(kind="rectangle", h=0.05, width=1.0, height=1.0))


@pytest.fixture(scope="session")
def star_spec():
    return DomainSpec(kind="polar_star", h=0.1, r0=1.0, a=0.5, k=3)


@pytest.fixture(scope="session")
def star_mesh(star_spec):
    return build_mesh(star_spec)


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
