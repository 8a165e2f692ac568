"""Ideal linear-optical gates acting on coherent-state superpositions.

All three gates map coherent product states to coherent product states, so they
are applied exactly by rewriting labels (and, for displacement, a phase).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .coherent import StateVector
from .errors import GateWiringError

SQRT2 = np.sqrt(2.0)


class GateKind(enum.Enum):
    BPS = "BPS"
    PHASE = "PHASE"
    DISPLACE = "DISPLACE"


def _check_mode(state, m):
    if not (isinstance(m, (int, np.integer)) and 0 <= m < state.mode_count):
        raise GateWiringError(f"mode {m!r} out of range for {state.mode_count} modes")


def apply_bps(state: StateVector, i: int, j: int) -> StateVector:
    """Symmetric beam splitter: labels ``(b, g)`` on ``(i, j)`` become ``((b+g)/√2, (b-g)/√2)``."""
    _check_mode(state, i)
    _check_mode(state, j)
    if i == j:
        raise GateWiringError(f"beam splitter needs two distinct modes, got ({i}, {j})")
    labels = state.labels.copy()
    b, g = state.labels[:, i], state.labels[:, j]
    labels[:, i] = (b + g) / SQRT2
    labels[:, j] = (b - g) / SQRT2
    return StateVector(state.mode_count, state.coeffs, labels)


def apply_phase(state: StateVector, m: int, psi: float) -> StateVector:
    """Phase shifter; the label on mode ``m`` is multiplied by ``exp(i psi)``."""
    _check_mode(state, m)
    labels = state.labels.copy()
    labels[:, m] = labels[:, m] * np.exp(1j * psi)
    return StateVector(state.mode_count, state.coeffs, labels)


def apply_displacement(state: StateVector, m: int, beta) -> StateVector:
    """``D(beta)|delta> = exp((beta conj(delta) - conj(beta) delta)/2) |beta + delta>`` on mode ``m``."""
    _check_mode(state, m)
    beta = complex(beta)
    delta = state.labels[:, m]
    phase = np.exp((beta * np.conj(delta) - np.conj(beta) * delta) / 2)
    labels = state.labels.copy()
    labels[:, m] = delta + beta
    return StateVector(state.mode_count, state.coeffs * phase, labels)


@dataclass(frozen=True)
class GateSpec:
    kind: GateKind
    modes: tuple
    phase: float = 0.0
    displacement: complex = 0j

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        want = 2 if self.kind is GateKind.BPS else 1
        if len(modes) != want:
            raise GateWiringError(f"{self.kind.value} takes {want} mode(s), got {len(modes)}")
        if self.kind is GateKind.BPS and modes[0] == modes[1]:
            raise GateWiringError("beam splitter modes must be distinct")

    @classmethod
    def bps(cls, i, j):
        return cls(GateKind.BPS, (i, j))

    @classmethod
    def phase_shift(cls, m, psi):
        return cls(GateKind.PHASE, (m,), phase=float(psi))

    @classmethod
    def displace(cls, m, beta):
        return cls(GateKind.DISPLACE, (m,), displacement=complex(beta))

    def apply(self, state: StateVector) -> StateVector:
        if self.kind is GateKind.BPS:
            return apply_bps(state, *self.modes)
        if self.kind is GateKind.PHASE:
            return apply_phase(state, self.modes[0], self.phase)
        return apply_displacement(state, self.modes[0], self.displacement)


def apply_gates(state: StateVector, gates) -> StateVector:
    for gate in gates:
        state = gate.apply(state)
    return state
