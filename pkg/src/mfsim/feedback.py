"""Repeat-until-success controller realizing V(t) = e^{it XX} and V^{kl}(t).

Each round aims an angle, emits, measures, and updates a running residual:
a Plus outcome subtracts the aimed angle, a Minus outcome adds it (so the
next round aims double, reproducing the eps-doubling policy), and HH/VV
outcomes only multiply the Pauli error frame.  For a conjugated rotation
e^{it s_k x s_l} the pair is dressed with u_k (x) u_l around the loop and
byproducts are recorded as s_k / s_l at the pair sites.  If the incoming
frame anticommutes with the rotation axis the roles of Plus and Minus are
swapped (the time direction is inverted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Protocol

import numpy as np

from .emission import BeamSplitterOutcome, joint_emission, beamsplitter_measure
from .errors import IncompleteRotationError, UsageError
from .loss import BackupRoundResult, LossConfig, LossPattern, backup_round, loss_channel, \
    _environment_measure_and_reset
from .pauli import (
    ErrorFrame,
    PauliAxis,
    PauliString,
    conjugation_unitary,
    frame_conjugate_direction,
)
from .statevec import StateVector, apply_local

_ANGLE_TOL = 1e-12


class PolicyMode(Enum):
    RESIDUAL_EXACT = "residual_exact"
    PAPER_DOUBLING = "paper_doubling"


@dataclass(frozen=True)
class EpsilonPolicy:
    """How each round picks its emission strength.

    RESIDUAL_EXACT inverts the exact outcome law, eps = tan(a)/(1 + tan(a))
    for aimed angle a, so a Plus outcome closes the residual exactly.
    PAPER_DOUBLING uses the small-angle rule eps = sin(a) literally; its
    aimed-angle sequence t, 2t, 4t, ... matches RESIDUAL_EXACT whenever no
    HH/VV outcome intervenes, but the realized rotation is only approximate.
    """

    mode: PolicyMode = PolicyMode.RESIDUAL_EXACT
    max_rounds: int = 64

    def eps_for(self, aimed: float) -> float:
        if self.mode is PolicyMode.RESIDUAL_EXACT:
            s, c = math.sin(aimed), math.cos(aimed)
            return s / (s + c)
        return min(1.0, max(0.0, math.sin(aimed)))


def reduce_angle(t: float) -> float:
    """Reduce modulo pi into (-pi/2, pi/2]; e^{i pi XX} is a global phase."""
    r = math.remainder(t, math.pi)
    if r <= -math.pi / 2 + _ANGLE_TOL:
        r += math.pi
    return r


@dataclass
class RoundRecord:
    """Audit entry for one feedback round."""

    outcome: str
    eps_used: float
    aimed_angle: float
    frame_after: str
    b_measurements: Optional[tuple[int, int]] = None
    lost: Optional[tuple[bool, bool]] = None

    def to_dict(self) -> dict:
        d = {
            "outcome": self.outcome,
            "eps_used": self.eps_used,
            "aimed_angle": self.aimed_angle,
            "frame_after": self.frame_after,
        }
        if self.b_measurements is not None:
            d["b_measurements"] = list(self.b_measurements)
        if self.lost is not None:
            d["lost"] = list(self.lost)
        return d


@dataclass(frozen=True)
class RoundOutcome:
    """Effective result of one round, in the undressed (X-basis) picture."""

    label: str
    direction: Optional[int]  # +-1 physical rotation direction, None if no rotation
    flips: tuple[bool, bool]  # X byproducts on the (first, second) pair atom
    b_bits: Optional[tuple[int, int]] = None
    loss: Optional[LossPattern] = None


class RoundEngine(Protocol):
    def attempt(
        self, state: StateVector, pair: tuple[int, int], eps: float, rng: np.random.Generator
    ) -> tuple[StateVector, RoundOutcome]: ...


_OUTCOME_TO_ROUND = {
    BeamSplitterOutcome.PLUS: (1, (False, False)),
    BeamSplitterOutcome.MINUS: (-1, (False, False)),
    BeamSplitterOutcome.HH: (None, (True, False)),
    BeamSplitterOutcome.VV: (None, (False, True)),
}


class DirectRoundEngine:
    """Round via direct photon emission and beam-splitter measurement.

    With a lossy polarization channel a missing photon is heralded; the round
    is then discarded (the damage to the atoms goes unrecorded, which is why
    the direct protocol is not loss-tolerant).  With occupation encoding the
    loss is silent and the measured outcome is trusted as-is.
    """

    def __init__(self, photons: tuple[int, int], loss_cfg: Optional[LossConfig] = None):
        self.photons = photons
        self.loss_cfg = loss_cfg

    def attempt(self, state, pair, eps, rng):
        state = joint_emission(state, pair, self.photons, eps)
        if self.loss_cfg is not None and self.loss_cfg.p_loss > 0.0:
            state, pattern = loss_channel(state, self.photons, self.loss_cfg, rng)
            if pattern.detectable:
                for q, was_lost in zip(self.photons, pattern.lost):
                    if not was_lost:
                        state = _environment_measure_and_reset(state, q, rng)
                return state, RoundOutcome("loss", None, (False, False), loss=pattern)
        else:
            pattern = None
        outcome, state, _ = beamsplitter_measure(state, self.photons, rng)
        direction, flips = _OUTCOME_TO_ROUND[outcome]
        return state, RoundOutcome(outcome.value, direction, flips, loss=pattern)


class BackupRoundEngine:
    """Round via the backup-atom protocol; photon losses only cost retries."""

    def __init__(
        self,
        photons: tuple[int, int],
        backup_of: dict[int, int],
        loss_cfg: LossConfig,
    ):
        if not loss_cfg.backup_enabled:
            raise UsageError("BackupRoundEngine requires backup_enabled")
        self.photons = photons
        self.backup_of = backup_of
        self.loss_cfg = loss_cfg

    def attempt(self, state, pair, eps, rng):
        pair_b = (self.backup_of[pair[0]], self.backup_of[pair[1]])
        state, res = backup_round(
            state, pair, pair_b, self.photons, eps, self.loss_cfg, rng
        )
        if res.loss.any_lost:
            label = "loss"
        else:
            label = res.bs_outcome.value
        return state, RoundOutcome(label, res.direction, res.flips, res.b_bits, res.loss)


def _pair_string(n: int, pair: tuple[int, int], k: PauliAxis, l: PauliAxis,
                 first: bool, second: bool) -> PauliString:
    sites = {}
    if first:
        sites[pair[0]] = k
    if second:
        sites[pair[1]] = l
    return PauliString.embed(n, sites)


def realize_v_kl(
    state: StateVector,
    pair: tuple[int, int],
    k: PauliAxis,
    l: PauliAxis,
    t_target: float,
    policy: EpsilonPolicy,
    frame: ErrorFrame,
    rng: np.random.Generator,
    engine: Optional[RoundEngine] = None,
) -> tuple[StateVector, ErrorFrame, list[RoundRecord]]:
    """Realize e^{i t s_k x s_l} on ``pair`` modulo the tracked error frame.

    On success the frame-corrected output equals the exact rotation applied
    to the frame-corrected input, up to global phase.  Raises
    IncompleteRotationError (with state, frame, and residual attached) if
    max_rounds is exhausted.
    """
    if k is PauliAxis.I or l is PauliAxis.I:
        raise UsageError("rotation axes must be X, Y, or Z")
    a, b = pair
    if a == b:
        raise UsageError("rotation needs two distinct qubits")
    n = state.n_qubits
    target = _pair_string(n, pair, k, l, True, True)

    residual = reduce_angle(t_target)
    records: list[RoundRecord] = []
    if abs(residual) <= _ANGLE_TOL:
        return state, frame, records

    if engine is None:
        engine = DirectRoundEngine(tuple(state.layout.photon_qubits[:2]))

    # u e^{it XX} u^dag = e^{it (u X u^dag) x (u X u^dag)}, so enter the inner
    # X-basis picture with u^dag and leave it with u.
    dressed = k is not PauliAxis.X or l is not PauliAxis.X
    if dressed:
        u_k, u_l = conjugation_unitary(k), conjugation_unitary(l)
        state = apply_local(state, a, u_k.conj().T)
        state = apply_local(state, b, u_l.conj().T)

    for _ in range(policy.max_rounds):
        aimed = abs(residual)
        eps = policy.eps_for(aimed)
        sign_swap = frame_conjugate_direction(frame, target)
        state, out = engine.attempt(state, pair, eps, rng)

        if out.flips[0] or out.flips[1]:
            frame = frame.updated(_pair_string(n, pair, k, l, *out.flips))
        if out.direction is not None:
            residual = reduce_angle(residual - sign_swap * out.direction * aimed)

        records.append(
            RoundRecord(out.label, eps, aimed, str(frame), out.b_bits,
                        out.loss.lost if out.loss else None)
        )
        if abs(residual) <= _ANGLE_TOL:
            residual = 0.0
            break

    if dressed:
        state = apply_local(state, a, u_k)
        state = apply_local(state, b, u_l)

    if abs(residual) > _ANGLE_TOL:
        err = IncompleteRotationError(residual, records)
        err.state = state  # resumable: caller may retry with t = residual
        err.frame = frame
        raise err

    return state, frame, records


def realize_v(
    state: StateVector,
    pair: tuple[int, int],
    t_target: float,
    policy: EpsilonPolicy,
    frame: ErrorFrame,
    rng: np.random.Generator,
    engine: Optional[RoundEngine] = None,
) -> tuple[StateVector, ErrorFrame, list[RoundRecord]]:
    """Realize e^{it XX} on ``pair`` modulo the tracked error frame."""
    return realize_v_kl(
        state, pair, PauliAxis.X, PauliAxis.X, t_target, policy, frame, rng, engine
    )
