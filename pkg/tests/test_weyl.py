import itertools

import numpy as np
import pytest

from ncflo.errors import InvalidDimensionError, NormalizationError
from ncflo.rng import RngStream
from ncflo.weyl import (
    DECODER_D2,
    ENCODER_D2,
    bell_state,
    encode_decode_check_d2,
    teleport_update,
    weyl,
    weyl_matrix,
    weyl_transpose_relabel,
    zeta,
)


class TestWeylOperators:
    def test_qubit_shift_matrix(self):
        assert np.array_equal(weyl_matrix(2, 1, 0), np.array([[0, 1], [1, 0]]))

    def test_identity_labels(self):
        assert np.array_equal(weyl_matrix(4, 0, 0), np.eye(4))

    def test_qutrit_shift_matrix(self):
        want = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], dtype=complex)
        assert np.allclose(weyl_matrix(3, 1, 0), want)

    def test_commutation_phase(self):
        for d in (2, 3, 5):
            x = weyl_matrix(d, 1, 0)
            z = weyl_matrix(d, 0, 1)
            assert np.max(np.abs(z @ x - zeta(d) * x @ z)) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_unitarity_all_labels(self, d):
        for a in range(d):
            for b in range(d):
                m = weyl_matrix(d, a, b)
                assert np.max(np.abs(m.conj().T @ m - np.eye(d))) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_group_law_up_to_phase(self, d):
        for a1, b1, a2, b2 in itertools.product(range(d), repeat=4):
            prod = weyl_matrix(d, a1, b1) @ weyl_matrix(d, a2, b2)
            target = weyl_matrix(d, (a1 + a2) % d, (b1 + b2) % d)
            # ZX reordering: X^a Z^b X^c Z^e = zeta^{bc} X^{a+c} Z^{b+e}
            phase = zeta(d) ** (b1 * a2)
            assert np.max(np.abs(prod - phase * target)) < 1e-12

    def test_labels_reduced_mod_d(self):
        assert weyl(3, 4, -1).labels == (1, 2)

    def test_invalid_dimension(self):
        with pytest.raises(InvalidDimensionError):
            weyl(1, 0, 0)


class TestTransposeRelabel:
    def test_qubit_case(self):
        phase, a, b = weyl_transpose_relabel(2, 1, 1)
        assert phase == pytest.approx(-1)
        assert (a, b) == (1, 1)

    def test_phase_only_labels_are_symmetric(self):
        for d in (2, 3, 5):
            for b in range(d):
                phase, a2, b2 = weyl_transpose_relabel(d, 0, b)
                assert phase == pytest.approx(1)
                assert (a2, b2) == (0, b)

    def test_qutrit_case_against_matrix(self):
        phase, a, b = weyl_transpose_relabel(3, 1, 1)
        assert (a, b) == (2, 1)
        assert phase == pytest.approx(zeta(3) ** (-1))
        direct = weyl_matrix(3, 1, 1).T
        assert np.max(np.abs(direct - phase * weyl_matrix(3, 2, 1))) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_all_labels_matrix_level(self, d):
        for a in range(d):
            for b in range(d):
                phase, a2, b2 = weyl_transpose_relabel(d, a, b)
                lhs = weyl_matrix(d, a, b).T
                rhs = phase * weyl_matrix(d, a2, b2)
                assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestBellStates:
    def test_plus_state(self):
        want = np.array([1, 0, 0, 1]) / np.sqrt(2)
        assert np.allclose(bell_state(2, (0, 0)), want)

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_unit_norm(self, d):
        for a in range(d):
            for b in range(d):
                assert abs(np.linalg.norm(bell_state(d, (a, b))) - 1.0) < 1e-12

    @pytest.mark.parametrize("d", [2, 3, 5])
    def test_orthonormal_basis(self, d):
        basis = np.stack([bell_state(d, (a, b)) for a in range(d) for b in range(d)])
        gram = basis.conj() @ basis.T
        assert np.max(np.abs(gram - np.eye(d * d))) < 1e-12


class TestTeleportUpdate:
    def test_trivial_outcome_rescales(self):
        psi = np.array([0.6, 0.8j])
        out = teleport_update(psi, np.eye(2), (0, 0))
        assert np.allclose(out, psi / 2)

    def test_shift_outcome_moves_basis_state(self):
        out = teleport_update(np.array([1.0, 0.0]), np.eye(2), (1, 0))
        assert np.allclose(out, np.array([0.0, 0.5]))

    @pytest.mark.parametrize("d", [2, 3])
    def test_closed_form_matches_contraction(self, d):
        # teleport_update raises if the two routes disagree; also verify the
        # formula explicitly against its pieces
        rng = RngStream(31 + d)
        for _ in range(100):
            psi = rng.gen.standard_normal(d) + 1j * rng.gen.standard_normal(d)
            xi = rng.gen.standard_normal((d, d)) + 1j * rng.gen.standard_normal((d, d))
            beta = (int(rng.gen.integers(d)), int(rng.gen.integers(d)))
            out = teleport_update(psi, xi, beta)
            want = xi.T @ weyl_matrix(d, *beta).T @ psi / d
            assert np.max(np.abs(out - want)) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidDimensionError):
            teleport_update(np.array([1.0, 0.0]), np.eye(3), (0, 0))


class TestEncodeDecodeGadget:
    def test_codewords(self):
        report = encode_decode_check_d2(np.array([1.0, 0.0]))
        assert report.codewords_ok

    def test_payload_preserved_with_flag_one(self):
        report = encode_decode_check_d2(np.array([1.0, 0.0]))
        assert report.payload_preserved
        # payload (1, 0) decodes to |1> on the payload qubit
        assert np.allclose(report.decoded_payload, np.array([0.0, 1.0]))

    def test_collision_marker_flags_zero(self):
        report = encode_decode_check_d2(np.array([0.6, 0.8]))
        assert report.collision_flagged
        assert report.ok

    def test_unnormalized_payload_rejected(self):
        with pytest.raises(NormalizationError):
            encode_decode_check_d2(np.array([1.0, 1.0]))

    def test_gadget_matrices_are_unitary(self):
        for gate in (ENCODER_D2, DECODER_D2):
            assert np.allclose(gate.conj().T @ gate, np.eye(4))

    def test_superposition_payload(self):
        c = np.array([0.6, 0.8j])
        report = encode_decode_check_d2(c)
        assert report.ok
        assert np.allclose(report.decoded_payload, np.array([c[1], c[0]]))
