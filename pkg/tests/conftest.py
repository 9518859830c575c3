import numpy as np
import pytest

from mfsim.harness import haar_random_amplitudes
from mfsim.statevec import RegisterLayout, StateVector

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
AXIS_MATS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_le(*ops):
    """Kronecker product in little-endian qubit order (first op = qubit 0)."""
    m = np.array([[1]], dtype=complex)
    for op in ops:
        m = np.kron(op, m)
    return m


def rot_xx(t):
    xx = kron_le(X, X)
    return np.cos(t) * np.eye(4) + 1j * np.sin(t) * xx


def embedded_state(data_amp, layout):
    """Full-register state with the data amplitudes on the low bits, rest |0>."""
    full = np.zeros(1 << layout.n_qubits, dtype=complex)
    full[: data_amp.size] = data_amp
    return StateVector(full, layout)


def random_two_atom_state(rng, with_backup=False):
    layout = RegisterLayout.build(2, with_backup=with_backup)
    return layout, embedded_state(haar_random_amplitudes(2, rng), layout)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
