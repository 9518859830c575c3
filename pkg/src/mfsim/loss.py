"""Photon-loss channel and the backup-qubit protocol that makes rounds loss-tolerant.

A lost photon is modeled as an environment measurement of its mode in the
computational {V, H} basis whose outcome is sampled but hidden from the
protocol; the mode is then emptied.  This keeps every trajectory a pure
state while reproducing the dephasing the loss induces on the protocol's
branch structure.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .emission import (
    PhotonEncoding,
    beamsplitter_measure,
    BeamSplitterOutcome,
    emission_unitary,
    _PHASE_I_ON_H,
)
from .errors import ProtocolError, UsageError
from .statevec import StateVector, apply_local, apply_two_qubit, measure

_RESET_ATOL = 1e-10

_X = np.array([[0, 1], [1, 0]], dtype=float)
_H = np.array([[1, 1], [1, -1]], dtype=float) / np.sqrt(2)
_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)
_PLUS = np.full((2, 2), 0.5, dtype=complex)                 # |+><+|
_MINUS = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)  # |-><-|

# CNOT with the first listed qubit (the backup atom) as control.
_COPY_GATE = np.array(
    [[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=float
)


@dataclass(frozen=True)
class LossPattern:
    lost: tuple[bool, bool]
    detectable: bool

    @property
    def any_lost(self) -> bool:
        return self.lost[0] or self.lost[1]


@dataclass(frozen=True)
class LossConfig:
    p_loss: float = 0.0
    encoding: PhotonEncoding = PhotonEncoding.POLARIZATION
    backup_enabled: bool = False

    def __post_init__(self):
        if not 0.0 <= self.p_loss <= 1.0:
            raise UsageError(f"p_loss={self.p_loss} outside [0, 1]")
        if self.backup_enabled and self.encoding is not PhotonEncoding.POLARIZATION:
            raise UsageError("the backup protocol requires polarization encoding")


def backup_entangle(state: StateVector, atom_a: int, atom_b: int, eps: float) -> StateVector:
    """Entangle a data atom with its reset backup atom at strength ``eps``.

    Same unitary as photon emission, with the backup atom playing the photon
    role: |a>_A |0>_B -> sqrt(1-eps)|a>|0> + sqrt(eps)|a xor 1>|1>.
    """
    if state.prob_qubit_one(atom_b) > _RESET_ATOL:
        raise ProtocolError(f"backup qubit {atom_b} is not reset to |0>")
    return apply_two_qubit(state, (atom_a, atom_b), emission_unitary(eps))


def photon_copy(state: StateVector, atom_b: int, photon: int) -> StateVector:
    """Copy the backup atom's computational value onto the vacuum photon mode.

    |0>_B -> |0>_B |V>,  |1>_B -> |1>_B |H>; the backup keeps its state.
    """
    if state.prob_qubit_one(photon) > _RESET_ATOL:
        raise ProtocolError(f"photon mode {photon} is not in |V> before copying")
    return apply_two_qubit(state, (atom_b, photon), _COPY_GATE)


def _environment_measure_and_reset(
    state: StateVector, qubit: int, rng: np.random.Generator
) -> StateVector:
    """Collapse one mode in the computational basis and empty it; outcome hidden."""
    outcome, state, _ = measure(state, [qubit], [_P0, _P1], rng)
    if outcome == 1:
        state = apply_local(state, qubit, _X)
    return state


def loss_channel(
    state: StateVector,
    photons: tuple[int, int],
    cfg: LossConfig,
    rng: np.random.Generator,
) -> tuple[StateVector, LossPattern]:
    """Independently lose each photon with probability ``p_loss``."""
    lost = []
    for q in photons:
        is_lost = bool(rng.random() < cfg.p_loss)
        lost.append(is_lost)
        if is_lost:
            state = _environment_measure_and_reset(state, q, rng)
    lost_t = (lost[0], lost[1])
    detectable = (
        (lost_t[0] or lost_t[1]) if cfg.encoding is PhotonEncoding.POLARIZATION else False
    )
    return state, LossPattern(lost_t, detectable)


@dataclass(frozen=True)
class BackupRoundResult:
    """One backup-protocol attempt, already reduced to its effective operation.

    ``direction`` is +-1 when the round realized a rotation e^{+-i t XX} on
    the atoms, None otherwise.  ``flips`` marks X byproducts picked up on the
    (first, second) atom of the pair.  ``b_bits`` are the backup-atom
    measurement outcomes (sign bits in the +- basis, values in the
    computational basis after a loss).
    """

    bs_outcome: BeamSplitterOutcome | None
    direction: int | None
    flips: tuple[bool, bool]
    b_bits: tuple[int, int]
    loss: LossPattern


def _measure_sign_and_reset(
    state: StateVector, qubit: int, rng: np.random.Generator
) -> tuple[int, StateVector]:
    """Measure one backup atom in the (|0>+-|1>)/sqrt2 basis and reset it to |0>."""
    outcome, state, _ = measure(state, [qubit], [_PLUS, _MINUS], rng)
    state = apply_local(state, qubit, _H)
    if outcome == 1:
        state = apply_local(state, qubit, _X)
    return outcome, state


def _measure_bit_and_reset(
    state: StateVector, qubit: int, rng: np.random.Generator
) -> tuple[int, StateVector]:
    outcome, state, _ = measure(state, [qubit], [_P0, _P1], rng)
    if outcome == 1:
        state = apply_local(state, qubit, _X)
    return outcome, state


def backup_round(
    state: StateVector,
    pair_a: tuple[int, int],
    pair_b: tuple[int, int],
    photons: tuple[int, int],
    eps: float,
    cfg: LossConfig,
    rng: np.random.Generator,
) -> tuple[StateVector, BackupRoundResult]:
    """One loss-tolerant round: backup entangling, photon copy, loss, measurements.

    If both photons arrive the photons get the incomplete Bell measurement and
    the backup atoms are measured in the sign basis; the product of the sign
    bits fixes the rotation's time direction.  If any photon is lost the
    backup atoms are measured in the computational basis instead, which
    collapses the register onto a known Pauli branch (no rotation, retry).
    """
    atom_a, atom_a2 = pair_a
    bak_a, bak_a2 = pair_b
    p1, p2 = photons

    state = backup_entangle(state, atom_a, bak_a, eps)
    state = backup_entangle(state, atom_a2, bak_a2, 1.0 - eps)
    state = apply_local(state, atom_a2, _X)
    state = photon_copy(state, bak_a, p1)
    state = photon_copy(state, bak_a2, p2)
    state = apply_local(state, p1, _PHASE_I_ON_H)

    state, pattern = loss_channel(state, photons, cfg, rng)

    if not pattern.any_lost:
        outcome, state, _ = beamsplitter_measure(state, photons, rng)
        s1, state = _measure_sign_and_reset(state, bak_a, rng)
        s2, state = _measure_sign_and_reset(state, bak_a2, rng)
        sign_product = -1 if (s1 + s2) % 2 else 1
        if outcome is BeamSplitterOutcome.PLUS:
            return state, BackupRoundResult(outcome, sign_product, (False, False), (s1, s2), pattern)
        if outcome is BeamSplitterOutcome.MINUS:
            return state, BackupRoundResult(outcome, -sign_product, (False, False), (s1, s2), pattern)
        if outcome is BeamSplitterOutcome.HH:
            return state, BackupRoundResult(outcome, None, (True, False), (s1, s2), pattern)
        return state, BackupRoundResult(outcome, None, (False, True), (s1, s2), pattern)

    # A photon is missing: clear any surviving mode, then read the backups in
    # the computational basis to collapse onto a known Pauli branch.
    for q, was_lost in zip(photons, pattern.lost):
        if not was_lost:
            state = _environment_measure_and_reset(state, q, rng)
    b1, state = _measure_bit_and_reset(state, bak_a, rng)
    b2, state = _measure_bit_and_reset(state, bak_a2, rng)
    flips = (b1 == 1, b2 == 0)
    return state, BackupRoundResult(None, None, flips, (b1, b2), pattern)


class RoundEffect(Enum):
    PLUS_ROTATION = "plus_rotation"
    MINUS_ROTATION = "minus_rotation"
    KNOWN_PAULI = "known_pauli"
    UNRESOLVED = "unresolved"


def classify_round_effect(
    state_before: StateVector,
    state_after: StateVector,
    pair: tuple[int, int],
    t_round: float,
    frame_delta,
) -> RoundEffect:
    """Identify what operation a round actually applied, by oracle comparison.

    ``frame_delta`` is the Pauli string the round's bookkeeping claims was
    picked up.  UNRESOLVED signals a bug in the round implementation.
    """
    from .statevec import apply_pauli_string, fidelity  # deferred: thin test oracle

    threshold = 1.0 - 1e-9
    xx = np.kron(_X, _X)
    for effect, t in (
        (RoundEffect.PLUS_ROTATION, t_round),
        (RoundEffect.MINUS_ROTATION, -t_round),
    ):
        rot = np.cos(t) * np.eye(4) + 1j * np.sin(t) * xx
        cand = apply_two_qubit(state_before, pair, rot)
        if fidelity(cand, state_after) >= threshold:
            return effect
    cand = apply_pauli_string(state_before, frame_delta)
    if fidelity(cand, state_after) >= threshold:
        return RoundEffect.KNOWN_PAULI
    return RoundEffect.UNRESOLVED
