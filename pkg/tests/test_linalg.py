import numpy as np
import pytest

from ncflo.errors import InvalidDimensionError, InvalidToleranceError
from ncflo.linalg import eps_rank, ginibre, haar_unitary
from ncflo.rng import RngStream


class TestHaarUnitary:
    def test_dim_one_is_unit_modulus(self, rng):
        u = haar_unitary(1, rng)
        assert u.shape == (1, 1)
        assert abs(abs(u[0, 0]) - 1.0) < 1e-14

    @pytest.mark.parametrize("dim", [2, 3, 7, 16])
    def test_unitarity(self, dim, rng):
        u = haar_unitary(dim, rng)
        defect = np.linalg.norm(u.conj().T @ u - np.eye(dim))
        assert defect < 1e-12

    def test_invalid_dimension(self, rng):
        with pytest.raises(InvalidDimensionError):
            haar_unitary(0, rng)

    def test_first_moment_matches_haar(self):
        # E|U_00|^2 = 1/dim; |U_00|^2 is Beta(1, dim-1)
        rng = RngStream(5150)
        dim, draws = 4, 10_000
        vals = np.array([abs(haar_unitary(dim, rng)[0, 0]) ** 2 for _ in range(draws)])
        sigma = vals.std(ddof=1) / np.sqrt(draws)
        assert abs(vals.mean() - 1.0 / dim) < 3 * sigma + 1e-12

    def test_column_phases_uniform(self):
        # the naive QR factor biases diagonal phases; the fix must not
        rng = RngStream(99)
        phases = np.array([np.angle(haar_unitary(3, rng)[0, 0]) for _ in range(4000)])
        # mean of exp(i phase) vanishes for a uniform phase
        resultant = abs(np.exp(1j * phases).mean())
        assert resultant < 3.0 / np.sqrt(4000)


class TestGinibre:
    def test_shape(self, rng):
        assert ginibre(3, rng).shape == (3, 3)

    def test_entry_moments(self):
        rng = RngStream(77)
        samples = np.stack([ginibre(2, rng) for _ in range(100_000)])
        mean = samples.mean()
        assert abs(mean) < 3.0 / np.sqrt(2 * 4 * 100_000)  # both quadratures
        fro2 = np.sum(np.abs(samples) ** 2, axis=(1, 2))
        sigma = fro2.std(ddof=1) / np.sqrt(len(fro2))
        assert abs(fro2.mean() - 4.0) < 3 * sigma

    def test_invalid_dimension(self, rng):
        with pytest.raises(InvalidDimensionError):
            ginibre(0, rng)


class TestEpsRank:
    def test_identity(self):
        assert eps_rank(np.eye(3), 1e-3) == 3

    def test_rank_one_outer_product(self, rng):
        u = rng.gen.standard_normal(5) + 1j * rng.gen.standard_normal(5)
        v = rng.gen.standard_normal(5) + 1j * rng.gen.standard_normal(5)
        assert eps_rank(np.outer(u, v), 1e-3) == 1

    def test_threshold_by_construction(self):
        m = np.diag([1.0, 1e-2, 1e-8])
        assert eps_rank(m, 1e-3, "relative") == 2
        assert eps_rank(m, 1e-9, "absolute") == 3
        assert eps_rank(m, 1e-1, "absolute") == 1

    def test_negative_tolerance(self):
        with pytest.raises(InvalidToleranceError):
            eps_rank(np.eye(2), -1.0)

    def test_empty_matrix(self):
        with pytest.raises(InvalidDimensionError):
            eps_rank(np.zeros((0, 0)), 1e-3)
