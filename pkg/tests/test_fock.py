import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from abqt.coherent import StateVector, coherent_state, inner_product, normalize
from abqt.errors import CutoffTooSmallError, GateWiringError, PreconditionError
from abqt.fock import (FactoredFockState, FockTensor, apply_bps_fock, apply_displacement_fock,
                       apply_phase_fock, bps_kernel, class_mask, coherent_vector, default_cutoff,
                       displacement_matrix, encode, fock_fidelity, herald_fock, pattern_probability,
                       suggest_cutoff)
from abqt.measurement import OutcomeClass, class_probability
from abqt.optics import apply_bps, apply_displacement, apply_phase

from conftest import fock_vector

small = st.floats(-1.2, 1.2, allow_nan=False)
amps = st.builds(complex, small, small)


def basis(cutoff, *counts):
    t = np.zeros((cutoff + 1,) * len(counts), dtype=complex)
    t[counts] = 1
    return FockTensor(len(counts), cutoff, t)


class TestEncode:
    def test_coherent_norm(self):
        t = encode(coherent_state(1.0), 24)
        assert t.norm_squared == pytest.approx(1, abs=1e-12)

    def test_vacuum(self):
        t = encode(coherent_state(0.0), 5)
        assert t.amplitudes[0] == 1 and np.all(t.amplitudes[1:] == 0)

    def test_even_cat_has_no_odd_components(self):
        cat = normalize(StateVector.from_terms([(1, (1.0,)), (1, (-1.0,))]))
        t = encode(cat, 24)
        assert np.max(np.abs(t.amplitudes[1::2])) < 1e-15

    def test_matches_independent_expansion(self):
        assert np.allclose(coherent_vector(0.7 - 0.3j, 30), fock_vector(0.7 - 0.3j, 30), atol=1e-15)

    @given(st.lists(st.tuples(amps, amps, amps), min_size=1, max_size=3))
    def test_norm_matches_gram_norm(self, terms):
        s = StateVector.from_terms([(c, (x, y)) for c, x, y in terms], 2)
        assert encode(s, 24).norm_squared == pytest.approx(inner_product(s, s).real, abs=1e-10)

    def test_cutoff_too_small(self):
        with pytest.raises(CutoffTooSmallError) as info:
            encode(coherent_state(1.0), 4)
        assert info.value.suggested_cutoff > 4
        assert encode(coherent_state(1.0), info.value.suggested_cutoff).reliable

    def test_cutoff_rules(self):
        assert default_cutoff(1.0) == 24 and default_cutoff(1.5) == 40
        n = suggest_cutoff(2.0, 1e-10)
        from scipy import stats
        assert stats.poisson.sf(n, 2.0) <= 1e-10 < stats.poisson.sf(n - 1, 2.0)

    def test_invalid_cutoff(self):
        with pytest.raises(PreconditionError):
            encode(coherent_state(1.0), 0)


class TestGates:
    def test_single_photon_splits(self):
        out = apply_bps_fock(basis(4, 1, 0), 0, 1)
        expected = np.zeros((5, 5))
        expected[1, 0] = expected[0, 1] = 1 / math.sqrt(2)
        assert np.allclose(out.amplitudes, expected)

    def test_second_input_picks_up_sign(self):
        out = apply_bps_fock(basis(4, 0, 1), 0, 1)
        assert out.amplitudes[1, 0] == pytest.approx(1 / math.sqrt(2))
        assert out.amplitudes[0, 1] == pytest.approx(-1 / math.sqrt(2))

    def test_vacuum_invariant(self):
        assert np.allclose(apply_bps_fock(basis(3, 0, 0), 0, 1).amplitudes, basis(3, 0, 0).amplitudes)

    def test_kernel_unitary_on_fixed_photon_blocks(self):
        cutoff = 10
        k = bps_kernel(cutoff)
        for total in range(cutoff + 1):
            idx = [(m, total - m) for m in range(total + 1)]
            block = np.array([[k[p, q, m, n] for (m, n) in idx] for (p, q) in idx])
            assert np.allclose(block.T @ block, np.eye(len(idx)), atol=1e-12)

    def test_hong_ou_mandel(self):
        out = apply_bps_fock(basis(4, 1, 1), 0, 1)
        assert abs(out.amplitudes[1, 1]) < 1e-15

    def test_bps_on_coherent_pair(self):
        t = encode(coherent_state(1.0, 1.0), 24)
        ref = encode(apply_bps(coherent_state(1.0, 1.0), 0, 1), 24)
        assert fock_fidelity(apply_bps_fock(t, 0, 1), ref) == pytest.approx(1, abs=1e-8)

    @settings(max_examples=25)
    @given(st.lists(st.tuples(amps, amps, amps), min_size=1, max_size=2))
    def test_bps_agrees_with_coherent_engine(self, terms):
        s = StateVector.from_terms([(c, (x, y)) for c, x, y in terms], 2)
        if inner_product(s, s).real < 1e-6:
            return
        t = encode(s, 20)
        ref = encode(apply_bps(s, 0, 1), 20, strict=False)
        assert fock_fidelity(apply_bps_fock(t, 0, 1, strict=False), ref) == pytest.approx(1, abs=1e-8)

    def test_phase_pi(self):
        out = apply_phase_fock(encode(coherent_state(1.0), 24), 0, math.pi)
        assert fock_fidelity(out, encode(coherent_state(-1.0), 24)) == pytest.approx(1, abs=1e-10)

    def test_displacement_of_vacuum(self):
        beta = 0.4 - 0.9j
        out = apply_displacement_fock(encode(coherent_state(0.0), 30), 0, beta)
        assert np.allclose(out.amplitudes, fock_vector(beta, 30), atol=1e-12)

    def test_displacement_matches_coherent_engine(self):
        s = coherent_state(1.0)
        beta = 1j * math.pi / 2
        out = apply_displacement_fock(encode(s, 32), 0, beta)
        ref = encode(apply_displacement(s, 0, beta), 32, strict=False)
        assert fock_fidelity(out, ref) == pytest.approx(1, abs=1e-8)
        # the relative phase must agree too, not only the fidelity
        assert np.allclose(out.amplitudes, ref.amplitudes, atol=1e-8)

    def test_displacement_matrix_is_unitary_in_the_bulk(self):
        d = displacement_matrix(0.5 + 0.2j, 60)
        prod = d.conj().T @ d
        assert np.allclose(prod[:30, :30], np.eye(30), atol=1e-10)

    def test_norm_drift_below_tail(self):
        t = encode(coherent_state(1.0, 0.5), 24)
        out = apply_phase_fock(apply_bps_fock(t, 0, 1), 1, 0.3)
        assert abs(out.norm_squared - t.norm_squared) < 1e-10

    def test_overflow_flagged(self):
        t = encode(coherent_state(1.5), 16, strict=False)
        with pytest.raises(CutoffTooSmallError):
            apply_displacement_fock(t, 0, 2.0)
        loose = apply_displacement_fock(t, 0, 2.0, strict=False)
        assert not loose.reliable

    def test_wiring(self):
        with pytest.raises(GateWiringError):
            apply_bps_fock(basis(2, 0, 0), 0, 0)


class TestMeasurement:
    def test_vacuum_probability(self):
        t = encode(coherent_state(1.0), 24)
        assert pattern_probability(t, (OutcomeClass.ZERO,), [0]) == pytest.approx(math.exp(-1), abs=1e-10)

    def test_class_masks(self):
        assert class_mask(OutcomeClass.EVEN_NONZERO, 5).tolist() == [0, 0, 1, 0, 1, 0]

    def test_matches_closed_form_class_probabilities(self):
        s = normalize(StateVector.from_terms([(1, (1.0, 0.3)), (0.5j, (-0.2, 1.0))]))
        t = encode(s, 30)
        for a in OutcomeClass:
            for b in OutcomeClass:
                assert pattern_probability(t, (a, b), [0, 1]) == pytest.approx(
                    class_probability(s, (a, b), [0, 1]), abs=1e-10)

    def test_herald_slices(self):
        s = normalize(StateVector.from_terms([(1, (1.0, 0.5)), (1, (-1.0, -0.5))]))
        out, p = herald_fock(encode(s, 30), [1], [0])
        expected = encode(normalize(StateVector.from_terms([(1, (0.5,)), (-1, (-0.5,))])), 30)
        assert fock_fidelity(out, expected) == pytest.approx(1, abs=1e-10)
        assert 0 < p < 1

    def test_truncation_monotone(self):
        s = coherent_state(1.3, -0.8)
        target = apply_bps(s, 0, 1)
        devs = []
        for cutoff in (6, 10, 16, 24):
            t = apply_bps_fock(encode(s, cutoff, strict=False), 0, 1, strict=False)
            devs.append(abs(1 - fock_fidelity(t, encode(target, cutoff, strict=False))) + abs(1 - t.norm_squared))
        assert all(b <= a + 1e-12 for a, b in zip(devs, devs[1:]))


class TestFactored:
    def make(self, cutoff=20):
        s = normalize(StateVector.from_terms([(1, (0.5, 1.0, -0.3, 0.2)), (0.7j, (-0.5, 0.1, 0.4, -1.0))]))
        groups = ((0, 2), (1, 3))
        blocks = []
        for members in groups:
            blocks.append(np.array([np.multiply.outer(coherent_vector(lab[members[0]], cutoff),
                                                      coherent_vector(lab[members[1]], cutoff))
                                    for lab in s.labels]))
        return s, FactoredFockState(np.array(s.coeffs), groups, blocks, cutoff)

    def test_norm(self):
        s, f = self.make()
        assert f.norm_squared == pytest.approx(1, abs=1e-10)

    def test_bps_and_probability_agree_with_dense(self):
        s, f = self.make()
        dense = apply_bps_fock(encode(s, 20), 0, 2)
        f = f.apply_bps(0, 2)
        pattern = (OutcomeClass.ODD, OutcomeClass.EVEN_NONZERO)
        assert f.pattern_probability(pattern, [0, 1]) == pytest.approx(
            pattern_probability(dense, pattern, [0, 1]), abs=1e-12)
        a, pa = f.herald([1, 2], [0, 1])
        b, pb = herald_fock(dense, [1, 2], [0, 1])
        # factored output keeps block order (2, 3); dense keeps mode order (2, 3)
        assert pa == pytest.approx(pb, abs=1e-12)
        assert fock_fidelity(a, b) == pytest.approx(1, abs=1e-10)

    def test_cross_block_gate_rejected(self):
        _, f = self.make()
        with pytest.raises(GateWiringError):
            f.apply_bps(0, 1)
