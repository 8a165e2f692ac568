"""Cross-check of the coherent engine against the number-basis oracle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .coherent import StateVector, inner_product
from .fock import (DEFAULT_EPS, FactoredFockState, apply_bps_fock, apply_displacement_fock,
                   apply_phase_fock, class_mask, coherent_vector, default_cutoff, encode,
                   fock_fidelity, suggest_cutoff)
from .errors import CutoffTooSmallError
from .measurement import OutcomeClass, herald_class, pattern_probabilities, project_counts
from .optics import apply_bps, apply_displacement, apply_phase
from .protocol import (MEASURED_MODES, BellVariant, CaseId, assemble_and_mix, classify_case)

TOLERANCE = 1e-8

# oracle blocks hold pre-mixing modes (A,1,4), (A',2,5), (B,3,6)
_GROUPS = ((0, 3, 6), (1, 4, 7), (2, 5, 8))
# detectors 7..12 are the first two axes of each block, in this order
_DETECTOR_MODES = (0, 3, 1, 4, 2, 5)


@dataclass
class OracleReport:
    alpha: float
    cutoff: int
    tolerance: float = TOLERANCE
    deviations: dict = field(default_factory=dict)
    lost_mass: float = 0.0
    checked: dict = field(default_factory=dict)

    @property
    def max_deviation(self):
        return max(self.deviations.values(), default=0.0)

    @property
    def passed(self):
        return self.max_deviation < self.tolerance


def _initial_state(alice, bob, spec, cutoff, eps):
    """Nine-mode input built straight from coefficients, one block per beam-splitter triple."""
    a = float(spec.alpha)
    # mixing concentrates two labels into one mode, so bound the tail at 2 a^2
    tail = float(stats.poisson.sf(cutoff, 2 * a * a))
    if tail > eps:
        raise CutoffTooSmallError(f"cutoff {cutoff} leaves tail mass {tail:.2e} > {eps:.0e}",
                                  suggested_cutoff=suggest_cutoff(2 * a * a, eps))
    plus, minus = coherent_vector(a, cutoff), coherent_vector(-a, cutoff)
    vec = {1: plus, -1: minus}
    alice_signs = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    coeffs, blocks = [], [[], [], []]
    for (ca, (sa, sa2)), (cb, sb) in itertools.product(zip(alice.coefficients, alice_signs),
                                                       zip(bob.coefficients, (1, -1))):
        for pair_signs in itertools.product((1, -1), repeat=3):
            coeffs.append(ca * cb)
            for g, (s_info, s_pair, variant) in enumerate(zip((sa, sa2, sb), pair_signs, spec.variants)):
                partner = s_pair if variant is BellVariant.PLUS else -s_pair
                block = np.einsum("i,j,k->ijk", vec[s_info], vec[s_pair], vec[partner])
                blocks[g].append(block)
    state = FactoredFockState(np.array(coeffs, dtype=complex), _GROUPS,
                              [np.array(b) for b in blocks], cutoff, tail, eps)
    return state.normalized()


def _class_grams(state):
    """Masked Gram matrices per block for every pair of detector classes (None = unmeasured)."""
    out = []
    options = list(OutcomeClass) + [None]
    for g in range(len(state.groups)):
        grams = {}
        for c1, c2 in itertools.product(options, repeat=2):
            masks = {}
            if c1 is not None:
                masks[0] = class_mask(c1, state.cutoff)
            if c2 is not None:
                masks[1] = class_mask(c2, state.cutoff)
            grams[(c1, c2)] = state.block_gram(g, masks)
        out.append(grams)
    return out


def _oracle_probability(coeff_outer, grams, pair_classes):
    total = coeff_outer
    for g, key in enumerate(pair_classes):
        total = total * grams[g][key]
    return float(np.sum(total).real)


def _gate_deviation(alpha, cutoff, eps):
    """Worst ``1 - F`` between the two engines over the three gate types."""
    a = float(alpha)
    cat = StateVector.from_terms([(0.6, (a, 0.5 * a)), (0.8j, (-a, 0.2))], 2)
    beta = 1j * math.pi / (2 * a)
    worst = 0.0
    cases = [
        (apply_bps(cat, 0, 1), lambda t: apply_bps_fock(t, 0, 1, strict=False)),
        (apply_phase(cat, 1, 0.7), lambda t: apply_phase_fock(t, 1, 0.7)),
        (apply_displacement(cat, 0, beta), lambda t: apply_displacement_fock(t, 0, beta, strict=False)),
    ]
    start = encode(cat, cutoff, eps, strict=False)
    for coherent_out, fock_gate in cases:
        worst = max(worst, abs(1 - fock_fidelity(encode(coherent_out, cutoff, eps, strict=False),
                                                 fock_gate(start))))
    return worst


def verify_protocol(alice, bob, spec, cutoff=None, eps=DEFAULT_EPS, tolerance=TOLERANCE) -> OracleReport:
    """Brute-force the whole protocol in the number basis and compare with the engine.

    Checks every three-pair class-pattern probability, every per-pair marginal,
    the exact-count probability and heralded state of all 64 table rows, and
    single-gate agreement.
    """
    cutoff = default_cutoff(spec.alpha) if cutoff is None else int(cutoff)
    state = _initial_state(alice, bob, spec, cutoff, eps)
    for x, y in ((0, 3), (1, 4), (2, 5)):
        state = state.apply_bps(x, y)
    report = OracleReport(float(spec.alpha), cutoff, tolerance, lost_mass=state.lost_mass)

    mixed = assemble_and_mix(alice, bob, spec)
    engine = pattern_probabilities(mixed, MEASURED_MODES)
    grams = _class_grams(state)
    outer = np.outer(np.conj(state.coeffs), state.coeffs)

    worst = 0.0
    for pattern, p in engine.items():
        pairs = [(pattern[2 * g], pattern[2 * g + 1]) for g in range(3)]
        worst = max(worst, abs(p - _oracle_probability(outer, grams, pairs)))
    report.deviations["pattern_probability"] = worst
    report.checked["pattern_probability"] = len(engine)

    worst = 0.0
    for g in range(3):
        for c1, c2 in itertools.product(OutcomeClass, repeat=2):
            p_engine = sum(p for pat, p in engine.items() if pat[2 * g] is c1 and pat[2 * g + 1] is c2)
            key = [(None, None)] * 3
            key[g] = (c1, c2)
            worst = max(worst, abs(p_engine - _oracle_probability(outer, grams, key)))
    report.deviations["pair_marginal"] = worst
    report.checked["pair_marginal"] = 27

    worst_p = worst_f = 0.0
    rows = 0
    for pattern, p in engine.items():
        if classify_case(pattern) is CaseId.AMBIGUOUS or p <= 1e-15:
            continue
        counts = [cls.representatives[0] for cls in pattern]
        heralded, _ = herald_class(mixed, pattern, MEASURED_MODES)
        oracle_state, oracle_p = state.herald(counts, _DETECTOR_MODES)
        projected = project_counts(mixed, counts, MEASURED_MODES)
        engine_p = inner_product(projected, projected).real
        worst_p = max(worst_p, abs(engine_p - oracle_p))
        reference = encode(heralded, cutoff, eps, strict=False)
        worst_f = max(worst_f, abs(1 - fock_fidelity(reference, oracle_state)))
        rows += 1
    report.deviations["count_probability"] = worst_p
    report.deviations["heralded_fidelity"] = worst_f
    report.checked["heralded_rows"] = rows

    report.deviations["gate_agreement"] = _gate_deviation(spec.alpha, cutoff, eps)
    return report


__all__ = ["OracleReport", "TOLERANCE", "verify_protocol"]
