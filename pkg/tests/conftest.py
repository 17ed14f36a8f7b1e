import math

import pytest

from stochmech import (
    Observable,
    box_eigensystem,
    build_composite_state,
    harmonic_eigensystem,
)

INV_SQRT2 = 1.0 / math.sqrt(2.0)


@pytest.fixture(scope="session")
def harmonic_es():
    """Unit-frequency oscillator, four lowest states, default grid."""
    return harmonic_eigensystem(1.0, 4)


@pytest.fixture(scope="session")
def two_oscillator_state(harmonic_es):
    """(|01> + |10>)/sqrt(2) of two identical unit oscillators."""
    return build_composite_state(
        [harmonic_es, harmonic_es],
        [(INV_SQRT2, (0, 1)), (INV_SQRT2, (1, 0))],
    )


@pytest.fixture(scope="session")
def ground_product_state(harmonic_es):
    return build_composite_state([harmonic_es, harmonic_es], [(1.0, (0, 0))])


@pytest.fixture(scope="session")
def box_es():
    return box_eigensystem(1.0, 2)


@pytest.fixture(scope="session")
def box_singlet_state(box_es):
    """(|01> - |10>)/sqrt(2) of two identical unit boxes."""
    return build_composite_state(
        [box_es, box_es],
        [(INV_SQRT2, (0, 1)), (-INV_SQRT2, (1, 0))],
    )


@pytest.fixture(scope="session")
def pos0():
    return Observable("position", 0)


@pytest.fixture(scope="session")
def pos1():
    return Observable("position", 1)
