import numpy as np
import pytest

import edgescatter as es


@pytest.fixture(scope="session")
def basis10():
    return es.build_basis(es.WallSpec(), n_max=10)


@pytest.fixture(scope="session")
def basis8():
    return es.build_basis(es.WallSpec(), n_max=8)


@pytest.fixture(scope="session")
def tanh_basis():
    wall = es.WallSpec(kind="linear_plus_bounded", bounded_part=np.tanh)
    return es.build_basis(wall, n_max=10)


@pytest.fixture(scope="session")
def cs22(basis8):
    return es.channels_at(basis8, 2.2)


@pytest.fixture(scope="session")
def cs12(basis8):
    return es.channels_at(basis8, 1.2)


@pytest.fixture(scope="session")
def generic_potential():
    return es.build_potential([
        es.GaussianBump("q0", 1.0, 0.3, 0.2, 1.0, 1.2),
        es.GaussianBump("q1", -0.8, -0.5, 0.5, 0.8, 0.9),
        es.GaussianBump("q2", 0.6, 0.2, -0.3, 1.2, 1.0),
        es.GaussianBump("q3", 0.9, 0.0, 0.0, 0.9, 1.4),
    ])


def field_for(pot, basis, half=None):
    if half is None:
        half = pot.support_radius + 8.0
    grid = np.linspace(-half, half, max(int(8 * half), 16) + 1)
    return es.coupling_field(pot, basis, grid)


@pytest.fixture(scope="session")
def generic_field(generic_potential, basis8):
    return field_for(generic_potential, basis8)
