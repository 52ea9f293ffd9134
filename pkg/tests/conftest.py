import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
P0 = (I2 + Z) / 2
P1 = (I2 - Z) / 2
PPLUS = (I2 + X) / 2
PMINUS = (I2 - X) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def random_hermitian(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2


def random_traceless_normalized(d, rng):
    o = random_hermitian(d, rng)
    o -= np.trace(o) / d * np.eye(d)
    return o / np.sqrt(np.einsum("ij,ji->", o, o).real)


def random_density(d, rng):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
