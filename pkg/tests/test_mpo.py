from math import comb

import numpy as np
import pytest

from ncflo.branch import branch_operator_pathcycle, commuting_control_instance, dress
from ncflo.errors import CapacityError, InvalidConfigError
from ncflo.mpo import (
    chi_profile,
    rank_witness,
    routing_tensor,
    theorem_bound_check,
)
from ncflo.perms import Permutation
from ncflo.rng import RngStream
from ncflo.weyl import weyl_matrix

from conftest import draw_sub, random_beta


class TestRoutingTensor:
    def test_two_step_entries_are_the_closed_terms(self, rng):
        d = 2
        _, _, _, sub, _ = draw_sub(2, d, seed=301)
        beta = random_beta(2, d, rng)
        b = dress(sub, beta)
        tensor = routing_tensor(sub, beta, boundary_l=0, boundary_r=0)
        straight = (b[1, 1] @ b[0, 0])[0, 0] / d**2
        swapped = (np.trace(b[1, 0]) * b[0, 1])[0, 0] / d**2
        assert abs(tensor.entries[(0, 1)] - straight) < 1e-12
        assert abs(tensor.entries[(1, 0)] - (-swapped)) < 1e-12

    @pytest.mark.parametrize("n,d", [(2, 2), (3, 2), (4, 2), (3, 3)])
    def test_entry_sum_is_the_amplitude(self, n, d):
        rng = RngStream(310 + n + d)
        _, _, _, sub, _ = draw_sub(n, d, seed=311 + n)
        beta = random_beta(n, d, rng)
        tensor = routing_tensor(sub, beta)
        op = branch_operator_pathcycle(sub, beta).matrix
        assert abs(tensor.amplitude() - op[0, 0]) < 1e-10

    def test_generic_support_is_full(self, rng):
        _, _, _, sub, _ = draw_sub(3, 2, seed=312)
        tensor = routing_tensor(sub, random_beta(3, 2, rng))
        assert len(tensor.entries) == 6
        assert all(abs(v) > 0 for v in tensor.entries.values())

    def test_dense_matches_compact_matricization(self, rng):
        n, d = 4, 2
        _, _, _, sub, _ = draw_sub(n, d, seed=313)
        tensor = routing_tensor(sub, random_beta(n, d, rng))
        dense = tensor.dense()
        for t in range(1, n):
            full = dense.reshape(n**t, n ** (n - t))
            sv_full = np.linalg.svd(full, compute_uv=False)
            sv_compact = np.linalg.svd(tensor.matricization(t), compute_uv=False)
            k = min(len(sv_compact), len(sv_full))
            assert np.allclose(sv_full[:k], sv_compact[:k], atol=1e-12)
            assert np.max(sv_full[k:], initial=0.0) < 1e-12

    def test_site_cap(self):
        blocks = np.zeros((9, 9, 2, 2), dtype=complex)
        with pytest.raises(CapacityError):
            routing_tensor(blocks, np.zeros((9, 2), dtype=int))

    def test_open_boundaries_hold_path_matrices(self, rng):
        _, _, _, sub, _ = draw_sub(2, 2, seed=314)
        beta = random_beta(2, 2, rng)
        b = dress(sub, beta)
        tensor = routing_tensor(sub, beta, boundaries="open")
        want = b[1, 1] @ b[0, 0] / 4.0
        assert np.max(np.abs(tensor.entries[(0, 1)] - want)) < 1e-12


class TestChiProfile:
    def test_two_step_generic_rank(self, rng):
        _, _, _, sub, _ = draw_sub(2, 2, seed=320)
        tensor = routing_tensor(sub, random_beta(2, 2, rng))
        prof = chi_profile(tensor, 1e-3)
        assert prof.chis == (2,)
        assert prof.chi_max == 2

    def test_three_step_generic_rank(self, rng):
        # brute-force oracle: numerical rank of the dense 3 x 9 matricization
        _, _, _, sub, _ = draw_sub(3, 2, seed=321)
        tensor = routing_tensor(sub, random_beta(3, 2, rng))
        dense = tensor.dense().reshape(3, 9)
        oracle = np.linalg.matrix_rank(dense)
        prof = chi_profile(tensor, 1e-3)
        assert prof.chis[0] == oracle == 3

    def test_unit_relative_threshold_clamps_to_one(self, rng):
        _, _, _, sub, _ = draw_sub(3, 2, seed=322)
        tensor = routing_tensor(sub, random_beta(3, 2, rng))
        prof = chi_profile(tensor, 1.0)
        assert all(c == 1 for c in prof.chis)

    def test_monotone_in_tolerance(self):
        rng = RngStream(323)
        for trial in range(20):
            _, _, _, sub, _ = draw_sub(4, 2, seed=3230 + trial)
            tensor = routing_tensor(sub, random_beta(4, 2, rng))
            previous = None
            for eps in (1e-1, 1e-2, 1e-3, 1e-6, 0.0):
                prof = chi_profile(tensor, eps)
                if previous is not None:
                    assert all(a <= b for a, b in zip(previous, prof.chis))
                previous = prof.chis

    def test_exact_rank_ceiling(self, rng):
        n = 5
        _, _, _, sub, _ = draw_sub(n, 2, seed=324)
        tensor = routing_tensor(sub, random_beta(n, 2, rng))
        prof = chi_profile(tensor, 0.0)
        for t, chi in zip(range(1, n), prof.chis):
            assert chi <= min(n**t, n ** (n - t))

    def test_open_rank_at_least_contracted(self, rng):
        _, _, _, sub, _ = draw_sub(4, 2, seed=325)
        beta = random_beta(4, 2, rng)
        closed = chi_profile(routing_tensor(sub, beta), 1e-3)
        opened = chi_profile(routing_tensor(sub, beta, boundaries="open"), 1e-3)
        assert all(o >= c for o, c in zip(opened.chis, closed.chis))

    def test_negative_eps_rejected(self, rng):
        _, _, _, sub, _ = draw_sub(2, 2, seed=326)
        tensor = routing_tensor(sub, random_beta(2, 2, rng))
        with pytest.raises(InvalidConfigError):
            chi_profile(tensor, -1e-3)


class TestRankWitness:
    @pytest.mark.parametrize("n,t,d,expected", [(4, 2, 2, 6), (4, 2, 3, 6), (5, 2, 2, 10)])
    def test_rank_and_diagonality(self, n, t, d, expected):
        wit = rank_witness(n, t, d)
        assert wit.rank == expected == wit.expected_rank
        assert wit.max_offdiag < 1e-12

    def test_diagonal_entries_are_powers_of_d(self):
        # surviving wirings evaluate to d^{1 + #loops} / d^n in modulus
        n, t, d = 5, 2, 2
        wit = rank_witness(n, t, d)
        scaled = np.abs(np.diag(wit.matrix)) * float(d) ** (n + 1)
        exponents = np.log(scaled) / np.log(d)
        assert np.allclose(exponents, np.round(exponents), atol=1e-9)
        assert np.all(np.round(exponents) >= 2)

    def test_capacity_cap(self):
        with pytest.raises(CapacityError):
            rank_witness(12, 6, 2, size_cap=256)

    def test_invalid_cut(self):
        with pytest.raises(InvalidConfigError):
            rank_witness(4, 0, 2)


class TestBoundCheck:
    def test_small_cut_is_within_bound(self, rng):
        _, _, _, sub, _ = draw_sub(2, 2, seed=330)
        tensor = routing_tensor(sub, random_beta(2, 2, rng))
        report = theorem_bound_check(chi_profile(tensor, 0.0), 2)
        assert report.bounds == (2 * 4,)
        assert report.ok

    def test_four_step_generic_within_bound(self, rng):
        _, _, _, sub, _ = draw_sub(4, 2, seed=331)
        tensor = routing_tensor(sub, random_beta(4, 2, rng))
        report = theorem_bound_check(chi_profile(tensor, 0.0), 2)
        assert report.bounds == (16, 24, 16)
        assert report.ok

    def test_control_ratios_below_monitored(self):
        rng = RngStream(332)
        n, d = 4, 2
        monitored, control = [], []
        for trial in range(20):
            _, _, _, sub, _ = draw_sub(n, d, seed=3330 + trial)
            tensor = routing_tensor(sub, random_beta(n, d, rng))
            monitored.append(max(theorem_bound_check(chi_profile(tensor, 1e-3), d).ratios))
            csub, cbeta = commuting_control_instance(n, d, rng.child(trial))
            ctensor = routing_tensor(csub, cbeta)
            control.append(max(theorem_bound_check(chi_profile(ctensor, 1e-3), d).ratios))
        assert np.median(control) < np.median(monitored)
