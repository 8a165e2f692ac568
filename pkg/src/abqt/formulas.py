"""Closed-form reference expressions for the near-faithful rows and their audit.

The expressions below are transcribed literally, including their normalization
constants, and are used only for cross-checking.  Where they disagree with the
exact engine the engine wins and the disagreement is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .protocol import (CASES, AliceInfo, BobInfo, CaseId, ChannelSpec,
                       DEFAULT_DISPLACEMENT_DIVISOR, assemble_and_mix, enumerate_outcomes,
                       lookup_correction, row_outcome, ROW_PARITIES, table_rows)

# (A->B formula id, B->A formula id) for each Case-I row, in the reference numbering
ROW_EQUATIONS = {1: (12, 13), 2: (14, 15), 3: (16, 17), 4: (18, 19),
                 5: (20, 21), 6: (22, 23), 7: (25, 24), 8: (27, 26)}

# formula ids whose reference values are already known to be doubtful
REGISTERED_MISMATCHES = frozenset({12, 16, 18})

FIDELITY_TOL = 1e-9
PROBABILITY_TOL = 1e-3
ASYMPTOTIC_ALPHA = 5.0


@dataclass(frozen=True)
class ClosedForm:
    row: int
    f_ab: float
    f_ba: float
    p_ab: float
    p_ba: float

    @property
    def equations(self):
        return ROW_EQUATIONS[self.row]


def _amplitudes(theta, phi, theta1):
    a = (math.cos(theta), math.sin(theta), math.cos(phi), math.sin(phi))
    b = (math.cos(theta1), math.sin(theta1))
    return a, b


def closed_form_reference(row, theta, phi, theta1, alpha, case=CaseId.I) -> ClosedForm:
    """Printed fidelities and probabilities for a row, in the angle parameterization.

    Every case shares the Case-I expressions (the equality groups say so), so
    ``case`` only has to be a valid, non-ambiguous case.
    """
    if CaseId(case) is CaseId.AMBIGUOUS:
        raise ValueError("ambiguous patterns have no closed form")
    if row not in ROW_EQUATIONS:
        raise ValueError(f"row must be in 1..8, got {row}")
    (a0, a1, a2, a3), (b0, b1) = _amplitudes(theta, phi, theta1)
    x = alpha ** 2
    s, q = math.exp(-2 * x), math.exp(-4 * x)
    sa = a0 ** 2 + a1 ** 2 + a2 ** 2 + a3 ** 2
    sb = b0 ** 2 + b1 ** 2
    cross = a0 * a3 + a1 * a2
    n_aa = (sa + 2 * s * (a0 * a2 + a1 * a3 + a0 * a1 + a2 * a3) + 2 * q * cross) ** -0.5
    n_b = (sb + 2 * s * b0 * b1) ** -0.5
    n_b_minus = (sb - 2 * s * b0 * b1) ** -0.5
    wide = math.exp(-math.pi ** 2 / (4 * x))
    narrow = math.exp(-math.pi ** 2 / (8 * x))
    tanh_ratio = (1 - s) / (1 + s)
    coth_ratio = (1 + q) / (1 - q)

    def f_ab_form(n_k, damp, bracket):
        return (n_k * n_aa) ** 2 * damp * bracket ** 2

    # B->A near-faithful rows share one printed expression
    f_ba_nf = (n_b_minus * n_b) ** 2 * narrow * (sb + 2 * s * b0 * b1) ** 2
    p_ba_nf = (n_b / (8 * n_b_minus)) ** 2

    n_1 = (sa - 2 * s * (a0 * a1 + a0 * a2 + a1 * a3 + a2 * a3) + 2 * q * cross) ** -0.5
    n_3 = (sa + 2 * s * (a0 * a1 + a2 * a3 - a0 * a2 - a1 * a3) - 2 * q * cross) ** -0.5
    n_4 = (sa - 2 * s * (a0 * a1 + a0 * a2 + a1 * a3 - a2 * a3) + 2 * q * cross) ** -0.5

    if row == 1:
        return ClosedForm(1, f_ab_form(n_1, wide, sa + 2 * q * (a1 * a2 - a0 * a3)), f_ba_nf,
                          (n_aa / (8 * n_1)) ** 2 * tanh_ratio ** 2, p_ba_nf)
    if row == 2:
        return ClosedForm(2, f_ab_form(n_1, wide, sa + 2 * s * (a1 * a2 - a0 * a3)), 1.0,
                          (n_aa / (8 * n_1)) ** 2 * tanh_ratio ** 2, 1 / 64)
    if row == 3:
        return ClosedForm(3, f_ab_form(n_3, narrow, sa + 2 * s * (a0 * a1 + a2 * a3)), f_ba_nf,
                          (n_aa / (8 * n_3)) ** 2 * coth_ratio ** 2, p_ba_nf)
    if row == 4:
        return ClosedForm(4, f_ab_form(n_4, narrow, sa + 2 * s * (a0 * a2 + a1 * a3)), f_ba_nf,
                          (n_aa / (8 * n_4)) ** 2 * coth_ratio, p_ba_nf)
    if row == 5:
        return ClosedForm(5, 1.0, 1.0, 1 / 64, 1 / 64)
    if row == 6:
        return ClosedForm(6, 1.0, f_ba_nf, 1 / 64, p_ba_nf)
    if row == 7:
        return ClosedForm(7, f_ab_form(n_4, narrow, sa + 2 * s * (a0 * a2 + a1 * a3)), 1.0,
                          (n_aa / (8 * n_4)) ** 2 * coth_ratio, 1 / 64)
    return ClosedForm(8, f_ab_form(n_3, narrow, sa + 2 * s * (a0 * a1 + a2 * a3)), 1.0,
                      (n_aa / (8 * n_3)) ** 2, 1 / 64)


@dataclass(frozen=True)
class AuditEntry:
    equation: int
    row: int
    direction: str          # "A->B" or "B->A"
    quantity: str           # "F" or "P"
    printed: float
    engine: float
    tolerance: float
    compared: bool          # False when only an asymptotic statement is checkable
    registered: bool

    @property
    def match(self):
        return abs(self.printed - self.engine) <= self.tolerance

    @property
    def unexpected(self):
        return self.compared and not self.match and not self.registered


@dataclass
class AuditReport:
    alpha: float
    angles: tuple
    entries: list = field(default_factory=list)

    @property
    def mismatches(self):
        return [e for e in self.entries if e.compared and not e.match]

    @property
    def unexpected(self):
        return [e for e in self.entries if e.unexpected]

    @property
    def passed(self):
        return not self.unexpected

    def mismatching_equations(self):
        return sorted({e.equation for e in self.mismatches})


def formula_audit(theta, phi, theta1, alpha, divisor=DEFAULT_DISPLACEMENT_DIVISOR) -> AuditReport:
    """Compare every printed row expression with the engine's Case-I values.

    Fidelities are compared at every ``alpha``.  Probabilities are compared only
    for ``alpha >= ASYMPTOTIC_ALPHA``; below that they are recorded but marked
    as not compared.
    """
    alice, bob = AliceInfo.from_angles(theta, phi), BobInfo.from_angle(theta1)
    spec = ChannelSpec(alpha)
    mixed = assemble_and_mix(alice, bob, spec)
    report = AuditReport(alpha, (theta, phi, theta1))
    for row, (eq_ab, eq_ba) in ROW_EQUATIONS.items():
        ref = closed_form_reference(row, theta, phi, theta1, alpha)
        out = row_outcome(alice, bob, spec, CaseId.I, row, divisor, mixed=mixed)
        for eq, direction, f_ref, p_ref, f_eng in ((eq_ab, "A->B", ref.f_ab, ref.p_ab, out.f_ab),
                                                   (eq_ba, "B->A", ref.f_ba, ref.p_ba, out.f_ba)):
            registered = eq in REGISTERED_MISMATCHES
            report.entries.append(AuditEntry(eq, row, direction, "F", f_ref, f_eng,
                                             FIDELITY_TOL, True, registered))
            report.entries.append(AuditEntry(eq, row, direction, "P", p_ref, out.probability,
                                             PROBABILITY_TOL, alpha >= ASYMPTOTIC_ALPHA, registered))
    report.entries.sort(key=lambda e: (e.equation, e.quantity))
    return report


AB_GROUPS = ((1, 2), (3, 8), (4, 7), (5, 6))
BA_GROUPS = ((1, 3, 4, 6), (2, 5, 7, 8))


@dataclass(frozen=True)
class EqualityGroup:
    direction: str
    rows: tuple
    values: tuple       # one per (case, row) in case-major order
    tolerance: float = FIDELITY_TOL

    @property
    def spread(self):
        return max(self.values) - min(self.values)

    @property
    def holds(self):
        return self.spread < self.tolerance

    @property
    def mean(self):
        return float(np.mean(self.values))


@dataclass
class EqualityReport:
    groups: list
    coincidences: list   # pairs of distinct groups in one direction that also agree

    @property
    def flagged(self):
        return [g for g in self.groups if not g.holds]


def fidelity_equality_report(theta, phi, theta1, alpha, divisor=DEFAULT_DISPLACEMENT_DIVISOR,
                             outcomes=None) -> EqualityReport:
    """Spread of engine fidelities within each equality group, across all eight cases."""
    alice, bob = AliceInfo.from_angles(theta, phi), BobInfo.from_angle(theta1)
    if outcomes is None:
        outcomes = enumerate_outcomes(alice, bob, ChannelSpec(alpha), divisor)
    by_key = {(o.case, o.row): o for o in table_rows(outcomes)}
    groups = []
    for direction, spec_groups, attr in (("A->B", AB_GROUPS, "f_ab"), ("B->A", BA_GROUPS, "f_ba")):
        for rows in spec_groups:
            values = tuple(getattr(by_key[(c, r)], attr) for c in CASES for r in rows)
            groups.append(EqualityGroup(direction, rows, values))
    coincidences = []
    for i, g in enumerate(groups):
        for h in groups[i + 1:]:
            if g.direction == h.direction and abs(g.mean - h.mean) < FIDELITY_TOL:
                coincidences.append((g.direction, g.rows, h.rows))
    return EqualityReport(groups, coincidences)


# printed local operations, "Alice|Bob", rows 1..8 of each case's table
PRINTED_TABLE_OPS = {
    CaseId.I: ("D6|D5 D4", "I|D5 D4", "D6|D4", "D6|D5", "I|I", "D6|I", "I|D5", "I|D4"),
    CaseId.II: ("D6 P6|D5 D4 P5 P4", "P6|D5 D4 P5 P4", "D6 P6|D4 P5 P4", "D6 P6|D5 P5 P4",
                "P6|P5 P4", "D6 P6|P5 P4", "P6|D5 P5 P4", "P6|D4 P5 P4"),
    CaseId.III: ("D6|D5 D4 P5 P4", "I|D5 D4 P5 P4", "D6|D4 P5 P4", "D6|D5 P5 P4",
                 "I|P5 P4", "D6|P5 P4", "I|D5 P5 P4", "I|D4 P5 P4"),
    CaseId.IV: ("D6 P6|D5 D4 P4", "P6|D5 D4 P4", "D6 P6|D4 P4", "D6 P6|D5 P4",
                "P6|P4", "D6 P6|P4", "P6|D5 P4", "P6|D4 P4"),
    CaseId.V: ("D6|D5 D4 P4", "I|D5 D4 P4", "D6|D4 P4", "D6|D5 P4",
               "I|P4", "D6|P4", "I|D5 P4", "I|D4 P4"),
    CaseId.VI: ("D6 P6|D5 D4 P5", "P6|D5 D4 P5", "D6 P6|D4 P5", "D6 P6|D5 P5",
                "P6|P5", "D6 P6|P5", "P6|D5 P5", "P6|D4 P5"),
    CaseId.VII: ("D6|D5 D4 P5", "I|D5 D4 P5", "D6|D4 P4", "D6|D5 P5",
                 "I|P5 P4", "D6|P4", "I|D5 P4", "I|D4 P4"),
    CaseId.VIII: ("D6 P6|D5 D4", "P6|D5 D4", "D6 P6|D4", "D6 P6|D5",
                  "P6|I", "D6 P6|I", "P6|D5", "P6|D4"),
}


def _token_order(token):
    return token[0] != "D", -int(token[1:])


def parse_printed_ops(text):
    def tokens(part):
        return frozenset(t for t in part.split() if t != "I")
    alice, bob = text.split("|")
    return tokens(alice), tokens(bob)


@dataclass(frozen=True)
class TableConflict:
    case: CaseId
    row: int
    printed: str
    derived: str


def printed_table_conflicts(alpha=1.0):
    """Rows whose printed local operations differ from the sign-rule plan."""
    out = []
    for case in CASES:
        for row, text in enumerate(PRINTED_TABLE_OPS[case], start=1):
            plan = lookup_correction(case, ROW_PARITIES[row - 1], alpha)
            if parse_printed_ops(text) != plan.signature():
                derived = "|".join(" ".join(sorted(part, key=_token_order)) or "I"
                                   for part in plan.signature())
                out.append(TableConflict(case, row, text, derived))
    return out


__all__ = [name for name in dir() if not name.startswith("_")]
