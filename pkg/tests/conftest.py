import numpy as np
import pytest

from qslbench.paulis import StateVector


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture
def singlet():
    amps = np.zeros(4, dtype=np.complex128)
    amps[0b01] = 1 / np.sqrt(2)  # |b1=1, b2=0>
    amps[0b10] = -1 / np.sqrt(2)
    return StateVector(amps)


@pytest.fixture
def double_singlet():
    """Singlet on sites (1,2) tensor singlet on sites (3,4)."""
    s = np.zeros((2, 2))
    s[1, 0], s[0, 1] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    amps = np.zeros(16, dtype=np.complex128)
    for b1 in range(2):
        for b2 in range(2):
            for b3 in range(2):
                for b4 in range(2):
                    amps[b1 | b2 << 1 | b3 << 2 | b4 << 3] = s[b1, b2] * s[b3, b4]
    return StateVector(amps)
