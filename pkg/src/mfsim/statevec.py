"""Dense complex state-vector engine for small registers.

Qubit ordering is little-endian everywhere: qubit 0 is the least significant
bit of the amplitude index.  For a two-qubit operator acting on qubits
``(a, b)`` the 4x4 matrix is indexed by ``bit_a + 2 * bit_b``, i.e. the first
listed qubit is the low bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import ProtocolError, ResourceError, UsageError
from .pauli import PauliString

DEFAULT_QUBIT_CAP = 12

_UNITARY_ATOL = 1e-12
_PROJECTOR_ATOL = 1e-10


class QubitRole(Enum):
    DATA_A = "data_a"
    BACKUP_B = "backup_b"
    PHOTON_MODE = "photon_mode"


@dataclass(frozen=True)
class RegisterLayout:
    """Role assignment for every qubit plus the data<->backup pairing.

    Photon-mode qubits live in the single-excitation subspace with
    |0> = V (vacuum or V polarization) and |1> = H.
    """

    roles: tuple[QubitRole, ...]
    backup_of: dict[int, int] = field(default_factory=dict)  # data qubit -> backup qubit

    def __post_init__(self):
        object.__setattr__(self, "roles", tuple(self.roles))
        for a, b in self.backup_of.items():
            if self.roles[a] is not QubitRole.DATA_A:
                raise UsageError(f"qubit {a} paired as data but has role {self.roles[a]}")
            if self.roles[b] is not QubitRole.BACKUP_B:
                raise UsageError(f"qubit {b} paired as backup but has role {self.roles[b]}")

    @property
    def n_qubits(self) -> int:
        return len(self.roles)

    def qubits_with_role(self, role: QubitRole) -> list[int]:
        return [i for i, r in enumerate(self.roles) if r is role]

    @property
    def data_qubits(self) -> list[int]:
        return self.qubits_with_role(QubitRole.DATA_A)

    @property
    def photon_qubits(self) -> list[int]:
        return self.qubits_with_role(QubitRole.PHOTON_MODE)

    @classmethod
    def build(cls, n_data: int, with_backup: bool = False, n_photons: int = 2) -> "RegisterLayout":
        """Standard layout: data qubits first, then backups, then photon modes."""
        roles = [QubitRole.DATA_A] * n_data
        backup_of = {}
        if with_backup:
            for i in range(n_data):
                backup_of[i] = n_data + i
            roles += [QubitRole.BACKUP_B] * n_data
        roles += [QubitRole.PHOTON_MODE] * n_photons
        return cls(tuple(roles), backup_of)


@dataclass
class StateVector:
    """Normalized amplitudes over the register described by ``layout``."""

    amplitudes: np.ndarray
    layout: RegisterLayout

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        dim = 1 << self.layout.n_qubits
        if self.amplitudes.shape != (dim,):
            raise UsageError(
                f"amplitude vector has shape {self.amplitudes.shape}, expected ({dim},)"
            )

    @property
    def n_qubits(self) -> int:
        return self.layout.n_qubits

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.layout)

    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @classmethod
    def computational_basis(cls, layout: RegisterLayout, index: int = 0) -> "StateVector":
        dim = 1 << layout.n_qubits
        amp = np.zeros(dim, dtype=complex)
        amp[index] = 1.0
        return cls(amp, layout)

    def prob_qubit_one(self, qubit: int) -> float:
        """Probability of finding ``qubit`` in |1>."""
        t = self.amplitudes.reshape([2] * self.n_qubits)
        ax = self.n_qubits - 1 - qubit
        sl = [slice(None)] * self.n_qubits
        sl[ax] = 1
        branch = t[tuple(sl)]
        return float(np.vdot(branch, branch).real)

    def dump(self, threshold: float = 1e-14) -> list[list]:
        """Debug dump: list of [basis_index, re, im] triples above ``threshold``."""
        out = []
        for i, a in enumerate(self.amplitudes):
            if abs(a) > threshold:
                out.append([i, float(a.real), float(a.imag)])
        return out

    def dump_json(self, threshold: float = 1e-14) -> str:
        return json.dumps(self.dump(threshold))


def _check_unitary(u: np.ndarray, dim: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise UsageError(f"operator has shape {u.shape}, expected ({dim}, {dim})")
    if not np.allclose(u.conj().T @ u, np.eye(dim), atol=_UNITARY_ATOL * dim * 10):
        raise UsageError("operator is not unitary")
    return u


def apply_local(state: StateVector, qubit: int, u: np.ndarray) -> StateVector:
    """Apply a 2x2 unitary to one qubit."""
    n = state.n_qubits
    if not 0 <= qubit < n:
        raise UsageError(f"qubit {qubit} out of range for {n}-qubit register")
    u = _check_unitary(u, 2)
    t = state.amplitudes.reshape([2] * n)
    ax = n - 1 - qubit
    t = np.tensordot(u, t, axes=([1], [ax]))
    t = np.moveaxis(t, 0, ax)
    return StateVector(t.reshape(-1), state.layout)


def apply_two_qubit(state: StateVector, qubits: tuple[int, int], u: np.ndarray) -> StateVector:
    """Apply a 4x4 unitary on two qubits (first listed qubit is the low bit)."""
    a, b = qubits
    n = state.n_qubits
    if a == b:
        raise UsageError("two-qubit operation needs distinct qubits")
    for q in (a, b):
        if not 0 <= q < n:
            raise UsageError(f"qubit {q} out of range for {n}-qubit register")
    u = _check_unitary(u, 4)
    # Row index r = bit_a + 2*bit_b, so reshape axes are (b_out, a_out, b_in, a_in).
    u4 = u.reshape(2, 2, 2, 2)
    t = state.amplitudes.reshape([2] * n)
    ax_a, ax_b = n - 1 - a, n - 1 - b
    t = np.tensordot(u4, t, axes=([2, 3], [ax_b, ax_a]))
    t = np.moveaxis(t, [0, 1], [ax_b, ax_a])
    return StateVector(t.reshape(-1), state.layout)


def _apply_subset_operator(state: StateVector, qubits: Sequence[int], m: np.ndarray) -> np.ndarray:
    """Apply an arbitrary 2^k x 2^k matrix on the given qubits; returns raw amplitudes.

    Matrix index convention: first listed qubit is the least significant bit.
    """
    n = state.n_qubits
    k = len(qubits)
    mk = np.asarray(m, dtype=complex).reshape([2] * (2 * k))
    t = state.amplitudes.reshape([2] * n)
    # Axis for matrix bit j (significance j) is position k-1-j of the reshaped block.
    in_axes = [n - 1 - q for q in reversed(qubits)]
    t = np.tensordot(mk, t, axes=(list(range(k, 2 * k)), in_axes))
    t = np.moveaxis(t, list(range(k)), in_axes)
    return t.reshape(-1)


def measure(
    state: StateVector,
    qubits: Sequence[int],
    projectors: Sequence[np.ndarray],
    rng: np.random.Generator,
) -> tuple[int, StateVector, float]:
    """Projective measurement over a complete orthogonal projector set on ``qubits``.

    Returns (outcome index, renormalized collapsed state, outcome probability).
    """
    k = len(qubits)
    dim = 1 << k
    mats = [np.asarray(p, dtype=complex) for p in projectors]
    total = sum(mats)
    if not np.allclose(total, np.eye(dim), atol=_PROJECTOR_ATOL):
        raise UsageError("projectors do not sum to the identity on the measured subset")
    for i, p in enumerate(mats):
        if not np.allclose(p @ p, p, atol=_PROJECTOR_ATOL):
            raise UsageError(f"projector {i} is not idempotent")

    branches = [_apply_subset_operator(state, qubits, p) for p in mats]
    probs = np.array([float(np.vdot(b, b).real) for b in branches])
    if abs(probs.sum() - state.norm_squared()) > _PROJECTOR_ATOL:
        raise UsageError("projector probabilities do not sum to the state norm")

    r = rng.random() * probs.sum()
    acc = 0.0
    outcome = len(probs) - 1
    for i, p in enumerate(probs):
        acc += p
        if r < acc:
            outcome = i
            break
    collapsed = branches[outcome] / np.sqrt(probs[outcome])
    return outcome, StateVector(collapsed, state.layout), float(probs[outcome])


def expm_i_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(i t H) for Hermitian H via eigendecomposition."""
    h = np.asarray(h, dtype=complex)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * t * w)) @ v.conj().T


def exact_evolution(h, t: float, qubit_cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Exact unitary exp(i t H) for a Hamiltonian given as weighted Pauli terms.

    ``h`` is a HamiltonianSpec (anything with ``n_qubits`` and ``to_matrix()``).
    """
    if h.n_qubits > qubit_cap:
        raise ResourceError(
            f"register of {h.n_qubits} qubits exceeds the dense cap of {qubit_cap}"
        )
    return expm_i_hermitian(h.to_matrix(), t)


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, invariant under global phase of either argument."""
    if a.layout != b.layout:
        raise UsageError("fidelity requires matching register layouts")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def apply_pauli_string(state: StateVector, p: PauliString) -> StateVector:
    """Apply a Pauli string as local gates (its global phase is applied too)."""
    if len(p) != state.n_qubits:
        raise UsageError("Pauli string length does not match register")
    out = state
    from .pauli import PauliAxis  # local import to avoid cycle at module load

    for q, axis in enumerate(p.axes):
        if axis is not PauliAxis.I:
            out = apply_local(out, q, axis.matrix())
    if p.phase_power:
        out = StateVector(out.amplitudes * (1j ** p.phase_power), out.layout)
    return out
