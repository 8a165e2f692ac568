"""Exact algebra of finite superpositions of multimode coherent states.

A state is stored as a coefficient vector ``c`` of length ``T`` and a label
matrix of shape ``(T, M)``: term ``t`` is ``c[t] |labels[t, 0], ..., labels[t, M-1]>``.
Inner products are evaluated term-by-term with the coherent overlap

    <beta|delta> = exp(-(|beta|^2 + |delta|^2 - 2 conj(beta) delta) / 2)

so every quantity is exact up to floating point, independent of photon number.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DegenerateStateError, DimensionError

MERGE_TOL = 1e-9
DROP_TOL = 1e-13
SINGULAR_TOL = 1e-14
NORMALIZED_TOL = 1e-10


class CoherentTerm(NamedTuple):
    coeff: complex
    labels: tuple


def _frozen(array):
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable superposition of coherent product states over ``mode_count`` modes."""

    mode_count: int
    coeffs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex).reshape(-1)
        labels = np.array(self.labels, dtype=complex).reshape(len(coeffs), self.mode_count)
        if self.mode_count < 0:
            raise DimensionError("mode_count must be non-negative")
        if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(labels))):
            raise ValueError("state contains non-finite values")
        object.__setattr__(self, "coeffs", _frozen(coeffs))
        object.__setattr__(self, "labels", _frozen(labels))

    @classmethod
    def from_terms(cls, terms: Iterable, mode_count: int | None = None) -> "StateVector":
        """Build from ``(coeff, labels)`` pairs."""
        terms = [(complex(c), tuple(complex(x) for x in lab)) for c, lab in terms]
        if mode_count is None:
            if not terms:
                raise DimensionError("mode_count is required for an empty term list")
            mode_count = len(terms[0][1])
        for _, lab in terms:
            if len(lab) != mode_count:
                raise DimensionError(f"term has {len(lab)} labels, expected {mode_count}")
        coeffs = np.array([c for c, _ in terms], dtype=complex)
        labels = np.array([lab for _, lab in terms], dtype=complex).reshape(len(terms), mode_count)
        return cls(mode_count, coeffs, labels)

    @property
    def terms(self) -> list[CoherentTerm]:
        return [CoherentTerm(complex(c), tuple(complex(x) for x in row))
                for c, row in zip(self.coeffs, self.labels)]

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        return f"StateVector(mode_count={self.mode_count}, terms={len(self)})"


def coherent_state(*labels) -> StateVector:
    """The product coherent state ``|labels[0], labels[1], ...>`` with unit coefficient."""
    return StateVector(len(labels), np.ones(1), np.array([labels], dtype=complex))


def scalar_state(value=1.0) -> StateVector:
    """The zero-mode state holding a single scalar; the identity for :func:`tensor`."""
    return StateVector(0, np.array([value], dtype=complex), np.zeros((1, 0)))


def coherent_overlap(beta, delta):
    """``<beta|delta>`` for scalars or broadcastable arrays of coherent amplitudes."""
    beta = np.asarray(beta, dtype=complex)
    delta = np.asarray(delta, dtype=complex)
    out = np.exp(-(np.abs(beta) ** 2 + np.abs(delta) ** 2 - 2 * np.conj(beta) * delta) / 2)
    return complex(out) if out.ndim == 0 else out


def log_overlap_matrix(bra_labels, ket_labels):
    """Matrix of ``log prod_m <bra_s,m|ket_t,m>`` for label matrices of shape (S, M), (T, M)."""
    b = np.asarray(bra_labels, dtype=complex)[:, None, :]
    k = np.asarray(ket_labels, dtype=complex)[None, :, :]
    return np.sum(-(np.abs(b) ** 2 + np.abs(k) ** 2 - 2 * np.conj(b) * k) / 2, axis=-1)


def _check_modes(a: StateVector, b: StateVector):
    if a.mode_count != b.mode_count:
        raise DimensionError(f"mode-count mismatch: {a.mode_count} vs {b.mode_count}")


def inner_product(bra: StateVector, ket: StateVector) -> complex:
    """``<bra|ket>`` via the full Gram sum over term pairs."""
    _check_modes(bra, ket)
    if len(bra) == 0 or len(ket) == 0:
        return 0j
    gram = np.exp(log_overlap_matrix(bra.labels, ket.labels))
    return complex(np.conj(bra.coeffs) @ gram @ ket.coeffs)


def norm(state: StateVector) -> float:
    # tiny negative values are Gram round-off, not physics
    return float(np.sqrt(max(inner_product(state, state).real, 0.0)))


def scale(s, state: StateVector) -> StateVector:
    return StateVector(state.mode_count, complex(s) * state.coeffs, state.labels)


def normalize(state: StateVector) -> StateVector:
    n = norm(state)
    if n <= SINGULAR_TOL:
        raise DegenerateStateError(f"cannot normalize a state of norm {n:.3e}")
    return scale(1.0 / n, state)


def is_normalized(state: StateVector, tol=NORMALIZED_TOL) -> bool:
    return abs(inner_product(state, state).real - 1.0) <= tol


def add(a: StateVector, b: StateVector) -> StateVector:
    _check_modes(a, b)
    return StateVector(a.mode_count,
                       np.concatenate([a.coeffs, b.coeffs]),
                       np.concatenate([a.labels, b.labels]))


def tensor(*states: StateVector) -> StateVector:
    """Tensor product; modes are concatenated in argument order."""
    out = scalar_state()
    for s in states:
        coeffs = np.outer(out.coeffs, s.coeffs).reshape(-1)
        left = np.repeat(out.labels, len(s), axis=0)
        right = np.tile(s.labels, (len(out), 1))
        out = StateVector(out.mode_count + s.mode_count, coeffs, np.hstack([left, right]))
    return out


def permute_modes(state: StateVector, order: Sequence[int]) -> StateVector:
    """New state whose mode ``k`` is mode ``order[k]`` of ``state``."""
    order = list(order)
    if sorted(order) != list(range(state.mode_count)):
        raise DimensionError(f"{order} is not a permutation of {state.mode_count} modes")
    return StateVector(state.mode_count, state.coeffs, state.labels[:, order])


def canonicalize(state: StateVector, tol=MERGE_TOL, drop_tol=DROP_TOL) -> StateVector:
    """Merge terms with label vectors equal within ``tol`` and drop negligible coefficients."""
    labels, coeffs = state.labels, state.coeffs
    used = np.zeros(len(coeffs), dtype=bool)
    out_c, out_l = [], []
    for i in range(len(coeffs)):
        if used[i]:
            continue
        if state.mode_count:
            same = ~used & (np.max(np.abs(labels - labels[i]), axis=1) <= tol)
        else:
            same = ~used
        used |= same
        out_c.append(coeffs[same].sum())
        out_l.append(labels[i])
    keep = [k for k, c in enumerate(out_c) if abs(c) >= drop_tol]
    return StateVector(state.mode_count,
                       np.array([out_c[k] for k in keep], dtype=complex),
                       np.array([out_l[k] for k in keep], dtype=complex).reshape(len(keep), state.mode_count))


def fidelity(a: StateVector, b: StateVector) -> float:
    """``|<a|b>|^2`` after normalizing both states."""
    na, nb = norm(a), norm(b)
    if na <= SINGULAR_TOL or nb <= SINGULAR_TOL:
        raise DegenerateStateError("fidelity of a zero-norm state is undefined")
    return abs(inner_product(a, b)) ** 2 / (na * nb) ** 2


def split_modes(state: StateVector, modes: Sequence[int]) -> tuple[np.ndarray, list, list]:
    """Coefficient matrix of ``state`` across the bipartition ``modes | rest``.

    Returns ``(C, left_labels, right_labels)`` with ``state = sum_ij C[i,j] |left_i>|right_j>``
    where the left/right label vectors are the distinct sub-labels (within MERGE_TOL).
    """
    modes = list(modes)
    rest = [m for m in range(state.mode_count) if m not in modes]
    left, right = [], []

    def index_of(pool, vec):
        for k, v in enumerate(pool):
            if np.max(np.abs(v - vec), initial=0.0) <= MERGE_TOL:
                return k
        pool.append(vec)
        return len(pool) - 1

    entries = []
    for c, lab in zip(state.coeffs, state.labels):
        entries.append((index_of(left, lab[modes]), index_of(right, lab[rest]), c))
    matrix = np.zeros((len(left), len(right)), dtype=complex)
    for i, j, c in entries:
        matrix[i, j] += c
    return matrix, left, right
