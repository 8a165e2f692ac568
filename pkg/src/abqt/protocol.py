"""Asymmetric bidirectional teleportation over a three-pair entangled coherent channel.

Alice holds a two-mode four-component entangled coherent state on modes (A, A'),
Bob a one-mode cat state on mode B.  The channel is three Bell-type coherent
pairs on modes (1,4), (2,5), (3,6).  Alice mixes (A,1) and (A',2), Bob mixes
(B,3) on symmetric beam splitters; the six outputs 7..12 are counted and the
surviving modes 4, 5 (Bob) and 6 (Alice) are corrected by phase flips and
displacements chosen from the zero/parity pattern.

Mode registry (conventional label -> internal index):

    before mixing: A A' B 1 2 3 4 5 6  ->  0 1 2 3 4 5 6 7 8
    after mixing:  7 8 9 10 11 12 4 5 6 ->  0 1 2 3 4 5 6 7 8
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coherent import (StateVector, fidelity, inner_product, norm, normalize, permute_modes,
                       split_modes, tensor)
from .errors import FactorizationError, NoCorrectionError, PreconditionError
from .measurement import (OutcomeClass, check_grid, herald_class, pattern_probabilities,
                          project_counts)
from .optics import GateSpec, apply_bps, apply_gates, apply_phase

PRE_MIX_MODES = ("A", "A'", "B", "1", "2", "3", "4", "5", "6")
POST_MIX_MODES = ("7", "8", "9", "10", "11", "12", "4", "5", "6")
MEASURED_MODES = (0, 1, 2, 3, 4, 5)
OUTPUT_MODES = (6, 7, 8)
DETECTOR_PAIRS = ((0, 1), (2, 3), (4, 5))

FAITHFUL_TOL = 1e-10
DEFAULT_DISPLACEMENT_DIVISOR = 2.0


def mode_index(label: str, mixed: bool = True) -> int:
    """Internal index of a conventional mode label in the pre- or post-mixing layout."""
    registry = POST_MIX_MODES if mixed else PRE_MIX_MODES
    try:
        return registry.index(str(label))
    except ValueError:
        raise KeyError(f"no mode {label!r} in the {'post' if mixed else 'pre'}-mixing layout") from None


def _as_complex_tuple(values, n, what):
    values = tuple(complex(v) for v in values)
    if len(values) != n:
        raise ValueError(f"{what} needs {n} coefficients, got {len(values)}")
    if all(v == 0 for v in values):
        raise ValueError(f"{what} coefficients cannot all be zero")
    return values


@dataclass(frozen=True)
class AliceInfo:
    """Coefficients of A0|a,a> + A1|a,-a> + A2|-a,a> + A3|-a,-a> (normalized by Gram sum)."""

    coefficients: tuple
    theta: Optional[float] = None
    phi: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _as_complex_tuple(self.coefficients, 4, "AliceInfo"))

    @classmethod
    def from_angles(cls, theta, phi):
        return cls((math.cos(theta), math.sin(theta), math.cos(phi), math.sin(phi)), theta, phi)

    def unnormalized(self, alpha) -> StateVector:
        a = complex(alpha)
        labels = [(a, a), (a, -a), (-a, a), (-a, -a)]
        return StateVector.from_terms(zip(self.coefficients, labels), 2)

    def state(self, alpha) -> StateVector:
        return normalize(self.unnormalized(alpha))

    def norm_constant(self, alpha) -> float:
        return 1.0 / norm(self.unnormalized(alpha))


@dataclass(frozen=True)
class BobInfo:
    """Coefficients of the cat state B0|a> + B1|-a>."""

    coefficients: tuple
    theta1: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _as_complex_tuple(self.coefficients, 2, "BobInfo"))

    @classmethod
    def from_angle(cls, theta1):
        return cls((math.cos(theta1), math.sin(theta1)), theta1)

    def unnormalized(self, alpha) -> StateVector:
        a = complex(alpha)
        return StateVector.from_terms(zip(self.coefficients, [(a,), (-a,)]), 1)

    def state(self, alpha) -> StateVector:
        return normalize(self.unnormalized(alpha))

    def norm_constant(self, alpha) -> float:
        return 1.0 / norm(self.unnormalized(alpha))


class BellVariant(enum.Enum):
    PLUS = "PLUS"        # |a,a> + |-a,-a>
    SHIFTED = "SHIFTED"  # |a,-a> + |-a,a>


# the only per-pair assignment whose zero-first heralded state is the teleported
# product state itself (see tests/test_protocol.py::test_bell_variant_bootstrap)
DEFAULT_VARIANTS = (BellVariant.SHIFTED, BellVariant.SHIFTED, BellVariant.SHIFTED)


@dataclass(frozen=True)
class ChannelSpec:
    alpha: float
    variants: tuple = DEFAULT_VARIANTS

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be a positive finite number, got {self.alpha!r}")
        variants = tuple(BellVariant(v) for v in self.variants)
        if len(variants) != 3:
            raise ValueError("one Bell variant per channel pair is required")
        object.__setattr__(self, "variants", variants)


def _bell_unnormalized(alpha, variant):
    a = complex(alpha)
    if BellVariant(variant) is BellVariant.PLUS:
        labels = [(a, a), (-a, -a)]
    else:
        labels = [(a, -a), (-a, a)]
    return StateVector.from_terms([(1, labels[0]), (1, labels[1])], 2)


def build_bell(alpha, variant=BellVariant.PLUS) -> StateVector:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return normalize(_bell_unnormalized(alpha, variant))


def prepare_bell(alpha, variant=BellVariant.PLUS) -> StateVector:
    """Bell pair produced optically: beam-split a sqrt(2)-amplitude even cat with vacuum."""
    a = math.sqrt(2) * alpha
    cat = normalize(StateVector.from_terms([(1, (a,)), (1, (-a,))], 1))
    pair = apply_bps(tensor(cat, StateVector.from_terms([(1, (0,))], 1)), 0, 1)
    if BellVariant(variant) is BellVariant.SHIFTED:
        pair = apply_phase(pair, 1, math.pi)
    return pair


# channel tensor comes out as (1,4,2,5,3,6); this reorders to (1,2,3,4,5,6)
_CHANNEL_ORDER = (0, 2, 4, 1, 3, 5)


def _channel_unnormalized(spec):
    pairs = [_bell_unnormalized(spec.alpha, v) for v in spec.variants]
    return permute_modes(tensor(*pairs), _CHANNEL_ORDER)


def build_channel(spec: ChannelSpec) -> StateVector:
    return normalize(_channel_unnormalized(spec))


def channel_norm_constant(spec: ChannelSpec) -> float:
    """Normalization of the unnormalized product of the three pairs, from the Gram sum."""
    return 1.0 / norm(_channel_unnormalized(spec))


def printed_channel_norm_constant(alpha) -> float:
    """The closed form quoted for the channel normalization, kept for comparison only."""
    x = alpha ** 2
    return (8 * (1 + math.exp(-12 * x) + 3 * math.exp(-8 * x) + math.exp(-6 * x)
                 + 2 * math.exp(-4 * x))) ** -0.5


def global_state(alice: AliceInfo, bob: BobInfo, spec: ChannelSpec) -> StateVector:
    """Nine-mode input state in the pre-mixing layout."""
    return tensor(alice.state(spec.alpha), bob.state(spec.alpha), build_channel(spec))


def assemble_and_mix(alice: AliceInfo, bob: BobInfo, spec: ChannelSpec) -> StateVector:
    """Input state after the three beam splitters, in the post-mixing layout."""
    state = global_state(alice, bob, spec)
    for x, y in ((0, 3), (1, 4), (2, 5)):
        state = apply_bps(state, x, y)
    state = permute_modes(state, (0, 3, 1, 4, 2, 5, 6, 7, 8))
    check_grid(state, MEASURED_MODES)
    g = math.sqrt(2) * spec.alpha
    grid = state.labels[:, list(MEASURED_MODES)].ravel()
    off = np.min(np.abs(grid[:, None] - np.array([g, -g, 0])[None, :]), axis=1)
    if np.max(off) > 1e-12:
        raise PreconditionError("measured labels left the {+sqrt2 a, -sqrt2 a, 0} grid")
    return state


class Parity(enum.Enum):
    EVEN = "Even"
    ODD = "Odd"


class CaseId(enum.Enum):
    I = 1
    II = 2
    III = 3
    IV = 4
    V = 5
    VI = 6
    VII = 7
    VIII = 8
    AMBIGUOUS = 0


CASES = tuple(c for c in CaseId if c is not CaseId.AMBIGUOUS)

# True when the first detector of a pair (7, 9 or 11) is the silent one
CASE_ZERO_FIRST = {
    CaseId.I: (True, True, True),
    CaseId.II: (False, False, False),
    CaseId.III: (False, False, True),
    CaseId.IV: (False, True, False),
    CaseId.V: (False, True, True),
    CaseId.VI: (True, False, False),
    CaseId.VII: (True, False, True),
    CaseId.VIII: (True, True, False),
}
_CASE_BY_ZEROS = {v: k for k, v in CASE_ZERO_FIRST.items()}

_E, _O = Parity.EVEN, Parity.ODD
ROW_PARITIES = (
    (_O, _O, _O), (_O, _O, _E), (_O, _E, _O), (_E, _O, _O),
    (_E, _E, _E), (_E, _E, _O), (_E, _O, _E), (_O, _E, _E),
)
FAITHFUL_ROW = 5


def row_number(parities) -> int:
    return ROW_PARITIES.index(tuple(parities)) + 1


def classify_case(pattern) -> CaseId:
    pattern = tuple(pattern)
    if len(pattern) != 6:
        raise ValueError("a detection pattern has six entries")
    zeros = []
    for i, j in DETECTOR_PAIRS:
        first, second = pattern[i] is OutcomeClass.ZERO, pattern[j] is OutcomeClass.ZERO
        if first == second:
            return CaseId.AMBIGUOUS
        zeros.append(first)
    return _CASE_BY_ZEROS[tuple(zeros)]


def pattern_parities(pattern):
    """Parity of the firing detector of each pair, or None for an ambiguous pattern."""
    if classify_case(pattern) is CaseId.AMBIGUOUS:
        return None
    out = []
    for i, j in DETECTOR_PAIRS:
        fired = pattern[j] if pattern[i] is OutcomeClass.ZERO else pattern[i]
        out.append(Parity.ODD if fired is OutcomeClass.ODD else Parity.EVEN)
    return tuple(out)


def pattern_for(case: CaseId, parities) -> tuple:
    if case is CaseId.AMBIGUOUS:
        raise NoCorrectionError("ambiguous case has no canonical pattern")
    out = []
    for zero_first, par in zip(CASE_ZERO_FIRST[case], parities):
        fired = OutcomeClass.ODD if Parity(par) is Parity.ODD else OutcomeClass.EVEN_NONZERO
        out.extend([OutcomeClass.ZERO, fired] if zero_first else [fired, OutcomeClass.ZERO])
    return tuple(out)


@dataclass(frozen=True)
class CorrectionPlan:
    """Local unitaries for one table row.

    ``bob_ops`` act on Bob's two-mode output (index 0 = mode 4, 1 = mode 5),
    ``alice_ops`` on Alice's one-mode output (index 0 = mode 6).  Gates are
    applied in tuple order: phase flips first, then displacements.
    """

    case: CaseId
    parities: tuple
    alice_ops: tuple
    bob_ops: tuple

    def signature(self):
        """Order-free token sets, e.g. ``({'D6', 'P6'}, {'D4', 'P4'})``."""
        def tokens(ops, names):
            return frozenset(f"{'P' if g.kind.value == 'PHASE' else 'D'}{names[g.modes[0]]}"
                             for g in ops)
        return tokens(self.alice_ops, ("6",)), tokens(self.bob_ops, ("4", "5"))

    def describe_alice(self):
        alice, _ = self.signature()
        parts = [t[0] + "_6" for t in ("D6", "P6") if t in alice]
        return " ".join(parts) if parts else "I_6"

    def describe_bob(self):
        _, bob = self.signature()

        def block(kind):
            mods = [m for m in ("5", "4") if f"{kind}{m}" in bob]
            text = " ⊗ ".join(f"{kind}_{m}" for m in mods)
            return f"({text})" if len(mods) == 2 else text

        d, p = block("D"), block("P")
        if d and p:
            return f"{d}{p}" if d.startswith("(") or p.startswith("(") else f"{d} {p}"
        return (d or p).strip("()") or "I_5 ⊗ I_4"

    def displaces(self):
        """(Bob displaced?, Alice displaced?)."""
        alice, bob = self.signature()
        return any(t.startswith("D") for t in bob), any(t.startswith("D") for t in alice)


def displacement_amplitude(alpha, divisor=DEFAULT_DISPLACEMENT_DIVISOR) -> complex:
    """Correction amplitude ``i pi / (divisor * alpha)``; the protocol's choice is divisor 2."""
    return 1j * math.pi / (divisor * alpha)


def lookup_correction(case: CaseId, parities, alpha, divisor=DEFAULT_DISPLACEMENT_DIVISOR) -> CorrectionPlan:
    """Correction for a case and firing-detector parities.

    A pair whose second detector is silent leaves the output label sign-flipped,
    undone by a pi phase; an odd count leaves a relative minus sign, addressed by
    a displacement.
    """
    case = CaseId(case)
    if case is CaseId.AMBIGUOUS:
        raise NoCorrectionError("no correction is defined for an ambiguous detection pattern")
    parities = tuple(Parity(p) for p in parities)
    beta = displacement_amplitude(alpha, divisor)
    zero_first = CASE_ZERO_FIRST[case]
    bob = [GateSpec.phase_shift(k, math.pi) for k in (0, 1) if not zero_first[k]]
    bob += [GateSpec.displace(k, beta) for k in (0, 1) if parities[k] is Parity.ODD]
    alice = [GateSpec.phase_shift(0, math.pi)] if not zero_first[2] else []
    if parities[2] is Parity.ODD:
        alice.append(GateSpec.displace(0, beta))
    return CorrectionPlan(case, parities, tuple(alice), tuple(bob))


def factor_heralded(heralded: StateVector, tol=1e-9):
    """Split a three-mode heralded state into (modes 4,5) and (mode 6) factors.

    Distinct coherent product states are linearly independent, so the state is a
    product exactly when its coefficient matrix across the cut has rank one.
    """
    matrix, left, right = split_modes(heralded, [0, 1])
    sv = np.linalg.svd(matrix, compute_uv=False)
    if sv[0] == 0 or (len(sv) > 1 and sv[1] / sv[0] > tol):
        raise FactorizationError("heralded state is entangled across Bob | Alice")
    i = int(np.argmax(np.linalg.norm(matrix, axis=1)))
    j = int(np.argmax(np.linalg.norm(matrix, axis=0)))
    bob = StateVector(2, matrix[:, j], np.array(left))
    alice = StateVector(1, matrix[i, :], np.array(right))
    return normalize(bob), normalize(alice)


def apply_correction(heralded: StateVector, plan: CorrectionPlan):
    """Returns ``(corrected_bob, corrected_alice)``, both normalized."""
    bob, alice = factor_heralded(heralded)
    return normalize(apply_gates(bob, plan.bob_ops)), normalize(apply_gates(alice, plan.alice_ops))


@dataclass
class ProtocolOutcome:
    pattern: tuple
    case: CaseId
    probability: float
    heralded: StateVector
    parities: Optional[tuple] = None
    row: Optional[int] = None
    plan: Optional[CorrectionPlan] = None
    corrected_bob: Optional[StateVector] = None
    corrected_alice: Optional[StateVector] = None
    f_ab: Optional[float] = None
    f_ba: Optional[float] = None
    raw_f_ab: Optional[float] = None
    raw_f_ba: Optional[float] = None

    @property
    def class_ab(self):
        return None if self.f_ab is None else ("F" if self.f_ab >= 1 - FAITHFUL_TOL else "NF")

    @property
    def class_ba(self):
        return None if self.f_ba is None else ("F" if self.f_ba >= 1 - FAITHFUL_TOL else "NF")

    @property
    def tag(self):
        """Combined tag as ``B->A/A->B``; a single letter when both agree."""
        if self.case is CaseId.AMBIGUOUS:
            return "AMBIGUOUS"
        if self.class_ab == self.class_ba:
            return self.class_ab
        return f"{self.class_ba}/{self.class_ab}"


def outcome_fidelities(outcome: ProtocolOutcome, alice: AliceInfo, bob: BobInfo, alpha):
    """``(F_AB, F_BA)``: Bob's corrected pair vs Alice's input, Alice's mode vs Bob's input."""
    return (fidelity(alice.state(alpha), outcome.corrected_bob),
            fidelity(bob.state(alpha), outcome.corrected_alice))


def _resolve(alice, bob, outcome, alpha, divisor):
    outcome.plan = lookup_correction(outcome.case, outcome.parities, alpha, divisor)
    raw_bob, raw_alice = factor_heralded(outcome.heralded)
    outcome.raw_f_ab = fidelity(alice.state(alpha), raw_bob)
    outcome.raw_f_ba = fidelity(bob.state(alpha), raw_alice)
    outcome.corrected_bob, outcome.corrected_alice = apply_correction(outcome.heralded, outcome.plan)
    outcome.f_ab, outcome.f_ba = outcome_fidelities(outcome, alice, bob, alpha)
    return outcome


def row_outcome(alice, bob, spec, case, row, divisor=DEFAULT_DISPLACEMENT_DIVISOR, mixed=None):
    """The outcome of one table row without enumerating every pattern."""
    mixed = assemble_and_mix(alice, bob, spec) if mixed is None else mixed
    parities = ROW_PARITIES[row - 1]
    pattern = pattern_for(case, parities)
    heralded, prob = herald_class(mixed, pattern, MEASURED_MODES)
    outcome = ProtocolOutcome(pattern, CaseId(case), prob, heralded, parities, row)
    return _resolve(alice, bob, outcome, spec.alpha, divisor)


def typical_count(cls: OutcomeClass, alpha) -> int:
    """A count of class ``cls`` near the mean photon number 2 alpha^2 of a firing detector.

    Every count of one class heralds the same state up to scale, but small counts
    underflow at large alpha.
    """
    if cls is OutcomeClass.ZERO:
        return 0
    n = max(int(round(2 * alpha * alpha)), 1)
    want = 1 if cls is OutcomeClass.ODD else 0
    if n % 2 != want:
        n += 1
    return max(n, 2 if want == 0 else 1)


def row_fidelities(alice, bob, spec, case, row, divisor=DEFAULT_DISPLACEMENT_DIVISOR, mixed=None):
    """Corrected ``(F_AB, F_BA)`` of one row, skipping the probability and class checks.

    Meant for dense parameter sweeps; :func:`row_outcome` is the checked path.
    """
    mixed = assemble_and_mix(alice, bob, spec) if mixed is None else mixed
    parities = ROW_PARITIES[row - 1]
    counts = [typical_count(cls, spec.alpha) for cls in pattern_for(case, parities)]
    heralded = normalize(project_counts(mixed, counts, MEASURED_MODES, rescale=True))
    plan = lookup_correction(case, parities, spec.alpha, divisor)
    bob_out, alice_out = apply_correction(heralded, plan)
    return fidelity(alice.state(spec.alpha), bob_out), fidelity(bob.state(spec.alpha), alice_out)


def table_outcomes(alice, bob, spec, divisor=DEFAULT_DISPLACEMENT_DIVISOR):
    """The 64 table rows only, case-major; cheaper than a full enumeration."""
    mixed = assemble_and_mix(alice, bob, spec)
    return [row_outcome(alice, bob, spec, case, row, divisor, mixed=mixed)
            for case in CASES for row in range(1, 9)]


def enumerate_outcomes(alice, bob, spec, divisor=DEFAULT_DISPLACEMENT_DIVISOR, floor=1e-15):
    """Every detection-class pattern with probability above ``floor``.

    The 64 table rows come first (case-major, row-minor), followed by ambiguous
    patterns, which carry a heralded state but no correction.
    """
    mixed = assemble_and_mix(alice, bob, spec)
    probs = pattern_probabilities(mixed, MEASURED_MODES)
    rows, ambiguous = [], []
    for pattern, prob in probs.items():
        if prob <= floor:
            continue
        case = classify_case(pattern)
        heralded, _ = herald_class(mixed, pattern, MEASURED_MODES)
        outcome = ProtocolOutcome(pattern, case, prob, heralded)
        if case is CaseId.AMBIGUOUS:
            ambiguous.append(outcome)
            continue
        outcome.parities = pattern_parities(pattern)
        outcome.row = row_number(outcome.parities)
        rows.append(_resolve(alice, bob, outcome, spec.alpha, divisor))
    rows.sort(key=lambda o: (o.case.value, o.row))
    return rows + ambiguous


def table_rows(outcomes):
    return [o for o in outcomes if o.case is not CaseId.AMBIGUOUS]


@dataclass
class SuccessSummary:
    faithful_rows: dict = field(default_factory=dict)
    per_case: dict = field(default_factory=dict)
    faithful_total: float = 0.0
    table_total: float = 0.0
    ambiguous_mass: float = 0.0

    @property
    def total(self):
        return self.table_total + self.ambiguous_mass


def total_success_probability(alice, bob, spec, outcomes=None) -> SuccessSummary:
    """Faithful-row, per-case, all-row and ambiguous probability masses."""
    if outcomes is None:
        outcomes = enumerate_outcomes(alice, bob, spec)
    summary = SuccessSummary()
    for o in outcomes:
        if o.case is CaseId.AMBIGUOUS:
            summary.ambiguous_mass += o.probability
            continue
        summary.table_total += o.probability
        summary.per_case[o.case] = summary.per_case.get(o.case, 0.0) + o.probability
        if o.row == FAITHFUL_ROW:
            summary.faithful_rows[o.case] = o.probability
            summary.faithful_total += o.probability
    return summary


def average_fidelity(alice, bob, spec, divisor=DEFAULT_DISPLACEMENT_DIVISOR, outcomes=None):
    """Probability-weighted fidelities ``(F_av A->B, F_av B->A)`` over the 64 table rows."""
    if outcomes is None:
        outcomes = table_outcomes(alice, bob, spec, divisor)
    rows = table_rows(outcomes)
    return (sum(o.f_ab * o.probability for o in rows),
            sum(o.f_ba * o.probability for o in rows))


def expected_heralded(alice: AliceInfo, bob: BobInfo, alpha, case: CaseId, parities) -> StateVector:
    """Heralded state predicted by the per-case sign rule, built term by term.

    Output labels copy the input labels (sign-flipped where the pair's second
    detector is silent); a term picks up a minus sign for every odd-count pair
    whose input label is negative.
    """
    a = float(alpha)
    zero_first = CASE_ZERO_FIRST[CaseId(case)]
    odd = [Parity(p) is Parity.ODD for p in parities]
    terms = []
    for i, (sa, sa2) in enumerate([(1, 1), (1, -1), (-1, 1), (-1, -1)]):
        for j, sb in enumerate([1, -1]):
            signs = (sa, sa2, sb)
            coeff = alice.coefficients[i] * bob.coefficients[j]
            coeff *= np.prod([-1 if (o and s < 0) else 1 for o, s in zip(odd, signs)])
            labels = tuple(s * a * (1 if z else -1) for s, z in zip(signs, zero_first))
            terms.append((coeff, labels))
    return normalize(StateVector.from_terms(terms, 3))


def heralded_phase_relation(case: CaseId):
    """Output modes (0=4, 1=5, 2=6) that a pi phase must flip to map a case onto case I."""
    return tuple(k for k, z in enumerate(CASE_ZERO_FIRST[CaseId(case)]) if not z)


__all__ = [name for name in dir() if not name.startswith("_")]
