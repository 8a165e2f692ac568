"""Brute-force photon-number-basis oracle.

States are dense amplitude arrays truncated at ``cutoff`` photons per mode.
Gates are built from first principles (binomial expansion of the beam splitter,
Laguerre matrix elements for the displacement) and never call the coherent
engine; the engine is touched only to encode a state for final comparison.

The full nine-mode protocol does not fit in memory as one dense array, so it is
carried as a :class:`FactoredFockState`: a sum of terms, each a product of
dense three-mode blocks.  The arithmetic inside each block is still exact
number-basis arithmetic.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .errors import CutoffTooSmallError, GateWiringError, MeasurementWiringError, PreconditionError
from .measurement import OutcomeClass

DEFAULT_EPS = 1e-10


def default_cutoff(alpha) -> int:
    return 8 * math.ceil(abs(alpha) ** 2) + 16


def suggest_cutoff(mean_photons, eps=DEFAULT_EPS) -> int:
    """Smallest cutoff whose Poisson tail beyond it is below ``eps``."""
    n = max(1, int(stats.poisson.isf(eps, mean_photons)) if mean_photons > 0 else 1)
    while stats.poisson.sf(n, mean_photons) > eps:
        n += 1
    return n


def coherent_vector(alpha, cutoff) -> np.ndarray:
    """Number-basis amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` for n = 0..cutoff."""
    alpha = complex(alpha)
    n = np.arange(cutoff + 1)
    if alpha == 0:
        out = np.zeros(cutoff + 1, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -abs(alpha) ** 2 / 2 + n * math.log(abs(alpha)) - 0.5 * special.gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def class_mask(cls: OutcomeClass, cutoff) -> np.ndarray:
    return np.array([n in cls for n in range(cutoff + 1)], dtype=float)


@functools.lru_cache(maxsize=8)
def bps_kernel(cutoff: int) -> np.ndarray:
    """``U[p, q, m, n] = <p, q| B |m, n>`` from a† -> (c†+d†)/√2, b† -> (c†-d†)/√2.

    The binomial sum is done in exact integers; only the final scale is float.
    """
    d = cutoff + 1
    lf = special.gammaln(np.arange(2 * d) + 1)
    kernel = np.zeros((d, d, d, d))
    for m in range(d):
        for n in range(d):
            for p in range(max(0, m + n - cutoff), min(m + n, cutoff) + 1):
                q = m + n - p
                total = 0
                for k in range(max(0, p - n), min(m, p) + 1):
                    l = p - k
                    total += math.comb(m, k) * math.comb(n, l) * (-1) ** (n - l)
                if total:
                    scale = math.exp(0.5 * (lf[p] + lf[q] - lf[m] - lf[n]) - (m + n) / 2 * math.log(2))
                    kernel[p, q, m, n] = total * scale
    kernel.setflags(write=False)
    return kernel


def displacement_matrix(beta, cutoff) -> np.ndarray:
    """Truncated ``<m|D(beta)|n>`` via generalized Laguerre polynomials."""
    beta = complex(beta)
    d = cutoff + 1
    x = abs(beta) ** 2
    out = np.zeros((d, d), dtype=complex)
    lf = special.gammaln(np.arange(d) + 1)
    for m in range(d):
        for n in range(d):
            lo, hi = min(m, n), max(m, n)
            factor = (beta if m >= n else -np.conj(beta)) ** (hi - lo)
            out[m, n] = (math.exp(0.5 * (lf[lo] - lf[hi]) - x / 2) * factor
                         * special.eval_genlaguerre(lo, hi - lo, x))
    return out


def _move_apply(array, axes, op):
    """Apply a linear map on the given axes (contracting them with ``op``'s trailing axes)."""
    k = len(axes)
    contracted = np.tensordot(array, op, axes=(list(axes), list(range(k, 2 * k))))
    # tensordot puts the new axes last; put them back in place
    return np.moveaxis(contracted, list(range(contracted.ndim - k, contracted.ndim)), list(axes))


def _mass(array):
    return float(np.sum(np.abs(array) ** 2))


@dataclass
class FockTensor:
    """Dense truncated amplitudes of shape ``(cutoff+1,) * mode_count``."""

    mode_count: int
    cutoff: int
    amplitudes: np.ndarray
    lost_mass: float = 0.0
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.cutoff < 1:
            raise PreconditionError("cutoff must be at least 1")
        want = (self.cutoff + 1,) * self.mode_count
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(want)

    @property
    def norm_squared(self) -> float:
        return _mass(self.amplitudes)

    @property
    def reliable(self) -> bool:
        return self.lost_mass <= self.eps

    def _check_mode(self, m, error=GateWiringError):
        if not (isinstance(m, (int, np.integer)) and 0 <= m < self.mode_count):
            raise error(f"mode {m!r} out of range for {self.mode_count} modes")

    def _after_gate(self, new, strict):
        lost = max(0.0, self.norm_squared - _mass(new))
        out = FockTensor(self.mode_count, self.cutoff, new, self.lost_mass + lost, self.eps)
        if strict and not out.reliable:
            raise CutoffTooSmallError(
                f"gate pushed {out.lost_mass:.2e} of probability past cutoff {self.cutoff}",
                suggested_cutoff=2 * self.cutoff)
        return out

    def normalized(self) -> "FockTensor":
        return FockTensor(self.mode_count, self.cutoff,
                          self.amplitudes / math.sqrt(self.norm_squared), self.lost_mass, self.eps)


def encode(state, cutoff, eps=DEFAULT_EPS, strict=True) -> FockTensor:
    """Number-basis expansion of a coherent superposition.

    The truncated mass is bounded per term by the Poisson tails of its labels.
    """
    if cutoff < 1:
        raise PreconditionError("cutoff must be at least 1")
    amps = np.zeros((cutoff + 1,) * state.mode_count, dtype=complex)
    tail = 0.0
    peak = 0.0
    for coeff, labels in zip(state.coeffs, state.labels):
        term = np.array(coeff, dtype=complex)
        for lab in labels:
            term = np.multiply.outer(term, coherent_vector(lab, cutoff))
            mu = abs(lab) ** 2
            peak = max(peak, mu)
            tail = max(tail, float(stats.poisson.sf(cutoff, mu)))
        amps += term
    if strict and tail > eps:
        raise CutoffTooSmallError(
            f"cutoff {cutoff} leaves tail mass {tail:.2e} > {eps:.0e}",
            suggested_cutoff=suggest_cutoff(peak, eps))
    return FockTensor(state.mode_count, cutoff, amps, tail, eps)


def apply_bps_fock(t: FockTensor, i, j, strict=True) -> FockTensor:
    t._check_mode(i)
    t._check_mode(j)
    if i == j:
        raise GateWiringError("beam splitter needs two distinct modes")
    return t._after_gate(_move_apply(t.amplitudes, (i, j), bps_kernel(t.cutoff)), strict)


def apply_phase_fock(t: FockTensor, m, psi) -> FockTensor:
    """Multiplies the number-``n`` component of mode ``m`` by ``exp(i n psi)``."""
    t._check_mode(m)
    shape = [1] * t.mode_count
    shape[m] = t.cutoff + 1
    phases = np.exp(1j * psi * np.arange(t.cutoff + 1)).reshape(shape)
    return FockTensor(t.mode_count, t.cutoff, t.amplitudes * phases, t.lost_mass, t.eps)


def apply_displacement_fock(t: FockTensor, m, beta, strict=True) -> FockTensor:
    t._check_mode(m)
    return t._after_gate(_move_apply(t.amplitudes, (m,), displacement_matrix(beta, t.cutoff)), strict)


def _check_reliable(t):
    if not t.reliable:
        raise CutoffTooSmallError(f"tensor lost {t.lost_mass:.2e} > {t.eps:.0e} to truncation",
                                  suggested_cutoff=2 * t.cutoff)


def pattern_probability(t: FockTensor, pattern, measured_modes) -> float:
    """Class probability by explicit summation over counts up to the cutoff."""
    _check_reliable(t)
    modes = list(measured_modes)
    for m in modes:
        t._check_mode(m, MeasurementWiringError)
    weight = np.abs(t.amplitudes) ** 2 / t.norm_squared
    for m, cls in zip(modes, pattern):
        shape = [1] * t.mode_count
        shape[m] = t.cutoff + 1
        weight = weight * class_mask(cls, t.cutoff).reshape(shape)
    return float(weight.sum())


def herald_fock(t: FockTensor, counts, measured_modes):
    """Slice exact counts out of the tensor; returns ``(normalized remainder, probability)``."""
    _check_reliable(t)
    modes = list(measured_modes)
    for m in modes:
        t._check_mode(m, MeasurementWiringError)
    index = [slice(None)] * t.mode_count
    for m, n in zip(modes, counts):
        if not 0 <= n <= t.cutoff:
            raise PreconditionError(f"count {n} outside 0..{t.cutoff}")
        index[m] = n
    rest = t.amplitudes[tuple(index)]
    prob = _mass(rest) / t.norm_squared
    out = FockTensor(t.mode_count - len(modes), t.cutoff, rest, t.lost_mass, t.eps)
    return (out.normalized() if prob > 0 else out), prob


def fock_fidelity(a: FockTensor, b: FockTensor) -> float:
    if a.amplitudes.shape != b.amplitudes.shape:
        raise PreconditionError("tensors differ in shape")
    overlap = np.vdot(a.amplitudes, b.amplitudes)
    return float(abs(overlap) ** 2 / (a.norm_squared * b.norm_squared))


@dataclass
class FactoredFockState:
    """Sum over terms of products of dense blocks.

    ``blocks[g]`` has shape ``(T, d, ..., d)`` holding block ``g`` of every term;
    ``groups[g]`` names the global modes it covers, in axis order.
    """

    coeffs: np.ndarray
    groups: tuple
    blocks: list
    cutoff: int
    lost_mass: float = 0.0
    eps: float = DEFAULT_EPS

    def _locate(self, mode):
        for g, members in enumerate(self.groups):
            if mode in members:
                return g, members.index(mode)
        raise GateWiringError(f"mode {mode!r} is not in any block")

    def block_gram(self, g, masks=None) -> np.ndarray:
        """``G[s, t] = <block_s| mask |block_t>`` for block ``g``; masks map local axis -> weights."""
        data = self.blocks[g]
        weighted = data
        if masks:
            for axis, mask in masks.items():
                shape = [1] * data.ndim
                shape[axis + 1] = len(mask)
                weighted = weighted * mask.reshape(shape)
        flat = data.reshape(len(data), -1)
        return np.conj(flat) @ weighted.reshape(len(data), -1).T

    @property
    def norm_squared(self) -> float:
        total = np.outer(np.conj(self.coeffs), self.coeffs)
        for g in range(len(self.groups)):
            total = total * self.block_gram(g)
        return float(np.sum(total).real)

    def normalized(self) -> "FactoredFockState":
        return FactoredFockState(self.coeffs / math.sqrt(self.norm_squared), self.groups,
                                 self.blocks, self.cutoff, self.lost_mass, self.eps)

    def apply_bps(self, i, j, strict=True) -> "FactoredFockState":
        gi, ai = self._locate(i)
        gj, aj = self._locate(j)
        if gi != gj:
            raise GateWiringError("beam splitter modes must share a block")
        before = self.norm_squared
        blocks = list(self.blocks)
        blocks[gi] = _move_apply(self.blocks[gi], (ai + 1, aj + 1), bps_kernel(self.cutoff))
        out = FactoredFockState(self.coeffs, self.groups, blocks, self.cutoff, self.lost_mass, self.eps)
        out.lost_mass += max(0.0, before - out.norm_squared)
        if strict and out.lost_mass > self.eps:
            raise CutoffTooSmallError(f"beam splitter lost {out.lost_mass:.2e} past cutoff",
                                      suggested_cutoff=2 * self.cutoff)
        return out

    def pattern_probability(self, pattern, measured_modes) -> float:
        masks = [dict() for _ in self.groups]
        for mode, cls in zip(measured_modes, pattern):
            g, axis = self._locate(mode)
            masks[g][axis] = class_mask(cls, self.cutoff)
        total = np.outer(np.conj(self.coeffs), self.coeffs)
        for g in range(len(self.groups)):
            total = total * self.block_gram(g, masks[g])
        return float(np.sum(total).real) / self.norm_squared

    def herald(self, counts, measured_modes) -> tuple:
        """Dense tensor of the unmeasured modes (block order) after slicing exact counts."""
        sliced = []
        for g, members in enumerate(self.groups):
            index = [slice(None)] * (len(members) + 1)
            for mode, n in zip(measured_modes, counts):
                if mode in members:
                    index[members.index(mode) + 1] = n
            sliced.append(self.blocks[g][tuple(index)])
        total = None
        for part in sliced:
            part = part.reshape(len(self.coeffs), -1)
            total = part if total is None else np.einsum("ta,tb->tab", total, part).reshape(len(self.coeffs), -1)
        amps = self.coeffs @ total
        remaining = sum(len(m) for m in self.groups) - len(list(measured_modes))
        prob = _mass(amps) / self.norm_squared
        t = FockTensor(remaining, self.cutoff, amps, self.lost_mass, self.eps)
        return (t.normalized() if prob > 0 else t), prob


__all__ = [name for name in dir() if not name.startswith("_")]
