"""Photon-number-resolving detection on coherent-state superpositions.

Detector outcomes are grouped in three classes (zero, even non-zero, odd).  Class
probabilities are exact: each class is a projector whose coherent-state matrix
elements are closed-form,

    <b|ZERO|d>         = exp(-(|b|^2 + |d|^2)/2)
    <b|EVEN_NONZERO|d> = (<b|d> + <b|-d>)/2 - <b|ZERO|d>
    <b|ODD|d>          = (<b|d> - <b|-d>)/2

using the parity operator identity ``<b|Pi|d> = <b|-d>``.
"""

from __future__ import annotations

import enum
import itertools
import math
from typing import Sequence

import numpy as np

from .coherent import (DROP_TOL, MERGE_TOL, NORMALIZED_TOL, StateVector, canonicalize,
                       fidelity, inner_product, log_overlap_matrix, normalize, scale)
from .errors import (DegenerateStateError, HeterogeneousClassError, MeasurementWiringError,
                     PreconditionError)

PROBABILITY_FLOOR = 1e-15


class OutcomeClass(enum.Enum):
    ZERO = "ZERO"
    EVEN_NONZERO = "EVEN"
    ODD = "ODD"

    def __contains__(self, n):
        if self is OutcomeClass.ZERO:
            return n == 0
        if self is OutcomeClass.ODD:
            return n % 2 == 1
        return n > 0 and n % 2 == 0

    @classmethod
    def of(cls, n: int) -> "OutcomeClass":
        if n == 0:
            return cls.ZERO
        return cls.ODD if n % 2 else cls.EVEN_NONZERO

    @property
    def representatives(self) -> tuple:
        """The two smallest photon numbers in the class (one for ZERO)."""
        return {"ZERO": (0,), "EVEN": (2, 4), "ODD": (1, 3)}[self.value]


# a detection pattern is a tuple of OutcomeClass, one per measured mode
DetectionPattern = tuple


def all_patterns(k: int):
    return list(itertools.product(list(OutcomeClass), repeat=k))


def fock_amplitude(n: int, alpha) -> complex:
    """``<n|alpha> = exp(-|alpha|^2/2) alpha^n / sqrt(n!)``."""
    alpha = complex(alpha)
    if alpha == 0:
        return 1.0 + 0j if n == 0 else 0j
    if n <= 20:
        return complex(np.exp(-abs(alpha) ** 2 / 2) * alpha ** n / math.sqrt(math.factorial(n)))
    log_mag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * math.lgamma(n + 1)
    return complex(math.exp(log_mag) * np.exp(1j * n * np.angle(alpha)))


def _log_fock_amplitudes(n, labels):
    """``(log|<n|label>|, arg<n|label>)`` per label; ``-inf`` marks an exact zero."""
    labels = np.asarray(labels, dtype=complex)
    mag2 = np.abs(labels) ** 2
    if n == 0:
        return -mag2 / 2, np.zeros(len(labels))
    log_mag = np.full(len(labels), -np.inf)
    nz = labels != 0
    x = labels[nz]
    log_mag[nz] = -mag2[nz] / 2 + n * np.log(np.abs(x)) - 0.5 * math.lgamma(n + 1)
    phase = np.zeros(len(labels))
    phase[nz] = n * np.angle(x)
    return log_mag, phase


def _fock_amplitudes(n, labels):
    log_mag, phase = _log_fock_amplitudes(n, labels)
    return np.exp(log_mag) * np.exp(1j * phase)


def _check_measured(state, modes):
    modes = list(modes)
    for m in modes:
        if not (isinstance(m, (int, np.integer)) and 0 <= m < state.mode_count):
            raise MeasurementWiringError(f"mode {m!r} out of range for {state.mode_count} modes")
    if len(set(modes)) != len(modes):
        raise MeasurementWiringError(f"measured modes repeat: {modes}")
    return modes


def project_photon_number(state: StateVector, m: int, n: int) -> StateVector:
    """Unnormalized ``<n|_m |state>``: mode ``m`` is removed, coefficients pick up ``<n|label>``."""
    _check_measured(state, [m])
    if n < 0:
        raise PreconditionError("photon number must be non-negative")
    amps = _fock_amplitudes(n, state.labels[:, m])
    labels = np.delete(state.labels, m, axis=1)
    return StateVector(state.mode_count - 1, state.coeffs * amps, labels)


def _class_matrices(bra, ket, only=None):
    """Per-class matrices ``<b|Pi_class|d>`` for label columns ``bra`` (S,) and ``ket`` (T,)."""
    b = bra[:, None]
    d = ket[None, :]
    base = -(np.abs(b) ** 2 + np.abs(d) ** 2) / 2
    zero = np.exp(base)
    if only is OutcomeClass.ZERO:
        return {only: zero}
    cross = np.conj(b) * d
    direct = np.exp(base + cross)
    flipped = np.exp(base - cross)
    return {
        OutcomeClass.ZERO: zero,
        OutcomeClass.EVEN_NONZERO: (direct + flipped) / 2 - zero,
        OutcomeClass.ODD: (direct - flipped) / 2,
    }


def pattern_probabilities(state: StateVector, measured_modes: Sequence[int]) -> dict:
    """Exact probability of every class pattern on ``measured_modes`` (3**k entries)."""
    modes = _check_measured(state, measured_modes)
    if not abs(inner_product(state, state).real - 1.0) <= NORMALIZED_TOL:
        raise PreconditionError("class probabilities require a normalized state")
    rest = [m for m in range(state.mode_count) if m not in modes]
    weight = np.outer(np.conj(state.coeffs), state.coeffs)
    weight = weight * np.exp(log_overlap_matrix(state.labels[:, rest], state.labels[:, rest]))
    mats = [_class_matrices(state.labels[:, m], state.labels[:, m]) for m in modes]

    out = {}

    def walk(depth, acc, prefix):
        if depth == len(mats):
            out[prefix] = float(np.sum(acc).real)
            return
        for cls in OutcomeClass:
            walk(depth + 1, acc * mats[depth][cls], prefix + (cls,))

    walk(0, weight, ())
    return out


def class_probability(state: StateVector, pattern, measured_modes: Sequence[int]) -> float:
    """Probability that each measured mode's count falls in the corresponding class."""
    modes = _check_measured(state, measured_modes)
    pattern = tuple(pattern)
    if len(pattern) != len(modes):
        raise MeasurementWiringError("pattern length differs from the number of measured modes")
    if not abs(inner_product(state, state).real - 1.0) <= NORMALIZED_TOL:
        raise PreconditionError("class probabilities require a normalized state")
    rest = [m for m in range(state.mode_count) if m not in modes]
    acc = np.outer(np.conj(state.coeffs), state.coeffs)
    acc = acc * np.exp(log_overlap_matrix(state.labels[:, rest], state.labels[:, rest]))
    for m, cls in zip(modes, pattern):
        acc = acc * _class_matrices(state.labels[:, m], state.labels[:, m], cls)[cls]
    return float(np.sum(acc).real)


def check_grid(state: StateVector, modes, tol=MERGE_TOL):
    """Raise unless every listed mode's labels lie in ``{+g, -g, 0}`` for one ``g`` per mode."""
    for m in modes:
        col = state.labels[:, m]
        nonzero = col[np.abs(col) > tol]
        if len(nonzero) == 0:
            continue
        g = nonzero[0]
        if not np.all(np.minimum(np.abs(nonzero - g), np.abs(nonzero + g)) <= tol):
            raise HeterogeneousClassError(
                f"labels on mode {m} are not of the form {{+g, -g, 0}}; "
                "the heralded state depends on the exact photon count")


def project_counts(state: StateVector, counts: Sequence[int], measured_modes: Sequence[int],
                   rescale: bool = False) -> StateVector:
    """Unnormalized projection onto exact counts on several modes at once.

    With ``rescale`` the coefficients are divided by their largest magnitude in
    log space, which keeps the direction exact when the raw amplitudes underflow.
    """
    modes = _check_measured(state, measured_modes)
    log_mag = np.zeros(len(state))
    phase = np.zeros(len(state))
    for m, n in zip(modes, counts):
        lm, ph = _log_fock_amplitudes(n, state.labels[:, m])
        log_mag, phase = log_mag + lm, phase + ph
    if rescale and np.isfinite(log_mag).any():
        log_mag = log_mag - np.max(log_mag)
    labels = np.delete(state.labels, modes, axis=1)
    return StateVector(state.mode_count - len(modes), state.coeffs * np.exp(log_mag) * np.exp(1j * phase), labels)


def _normalized_projection(state, counts, modes):
    projected = project_counts(state, counts, modes, rescale=True)
    peak = np.max(np.abs(projected.coeffs), initial=0.0)
    if peak == 0.0:
        raise DegenerateStateError("projection vanishes identically")
    # rescale before dropping so tiny-but-exact amplitudes at large alpha survive
    projected = canonicalize(scale(1.0 / peak, projected), drop_tol=DROP_TOL)
    return normalize(projected)


def herald_class(state: StateVector, pattern, measured_modes: Sequence[int]):
    """Condition ``state`` on a class pattern; returns ``(normalized state, probability)``.

    Requires the label grid ``{+g, -g, 0}`` on each measured mode so that the
    conditional state is the same pure state for every count in the class.
    """
    modes = _check_measured(state, measured_modes)
    pattern = tuple(pattern)
    check_grid(state, modes)
    prob = class_probability(state, pattern, modes)
    if prob <= PROBABILITY_FLOOR:
        raise DegenerateStateError(f"class pattern has probability {prob:.3e}")
    first = [cls.representatives[0] for cls in pattern]
    second = [cls.representatives[-1] for cls in pattern]
    heralded = _normalized_projection(state, first, modes)
    if second != first:
        other = _normalized_projection(state, second, modes)
        if abs(1.0 - fidelity(heralded, other)) > 1e-10:
            raise HeterogeneousClassError("conditional states differ within one class")
    return heralded, prob
