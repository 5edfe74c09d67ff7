import numpy as np
import pytest

from wmt.discrete_ot import brute_force_ot, solve_kantorovich, wasserstein_distance
from wmt.errors import BadParameter, DimensionMismatch, TooLarge
from wmt.measures import DiscreteMeasure

from conftest import random_discrete
from oracles import lipschitz_over, monotone_1d_cost, pushforward, random_pw_affine


def delta(*point):
    return DiscreteMeasure(np.array([point], dtype=float), [1.0])


class TestSolver:
    def test_single_atoms(self):
        _, cost = solve_kantorovich(delta(0.0, 0.0), delta(3.0, 4.0), 2.0)
        assert cost.value == 25.0
        assert cost.distance == 5.0

    def test_forced_split(self):
        mu = DiscreteMeasure(np.array([[0.0], [1.0]]), [0.5, 0.5])
        nu = delta(0.5)
        coupling, cost = solve_kantorovich(mu, nu, 2.0)
        assert cost.value == pytest.approx(0.25, abs=1e-15)
        assert cost.distance == pytest.approx(0.5, abs=1e-15)
        assert np.allclose(coupling.entries, [[0.5], [0.5]])

    def test_four_atom_permutation_oracle(self, rng):
        for _ in range(20):
            mu = random_discrete(rng, m=4, d=2, uniform=True)
            nu = random_discrete(rng, m=4, d=2, uniform=True)
            got = solve_kantorovich(mu, nu, 2.0)[1].value
            expected = brute_force_ot(mu, nu, 2.0).value
            assert got == pytest.approx(expected, abs=1e-9)

    def test_feasibility_residuals(self, rng):
        for _ in range(50):
            mu = random_discrete(rng)
            nu = random_discrete(rng, d=mu.dim)
            coupling, _ = solve_kantorovich(mu, nu, 2.0)
            assert np.abs(coupling.row_sums() - mu.weights).max() <= 1e-8
            assert np.abs(coupling.col_sums() - nu.weights).max() <= 1e-8
            assert np.all(coupling.entries >= 0.0)

    def test_support_pruning(self, rng):
        for _ in range(30):
            mu = random_discrete(rng, d=2)
            nu = random_discrete(rng, d=2)
            coupling, _ = solve_kantorovich(mu, nu, 2.0)
            live = coupling.entries[coupling.entries != 0.0]
            assert live.size == 0 or live.min() >= 1e-12

    def test_determinism_bit_identical(self, rng):
        mu = random_discrete(rng, m=5, d=2)
        nu = random_discrete(rng, m=5, d=2)
        a, _ = solve_kantorovich(mu, nu, 2.0)
        b, _ = solve_kantorovich(mu, nu, 2.0)
        assert np.array_equal(a.entries, b.entries)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            solve_kantorovich(random_discrete(rng, d=1), random_discrete(rng, d=2))

    def test_bad_exponent(self, rng):
        with pytest.raises(BadParameter):
            solve_kantorovich(random_discrete(rng, d=1), random_discrete(rng, d=1), 0.5)


class TestBruteForce:
    def test_identical_measures(self, rng):
        mu = random_discrete(rng, m=3, d=2)
        assert brute_force_ot(mu, mu, 2.0).value == 0.0

    def test_monotone_matching(self):
        mu = DiscreteMeasure(np.array([[0.0], [1.0]]), [0.5, 0.5])
        nu = DiscreteMeasure(np.array([[2.0], [3.0]]), [0.5, 0.5])
        # monotone pairing gives (4+4)/2 = 4, the crossing one (9+1)/2 = 5
        assert brute_force_ot(mu, nu, 2.0).value == pytest.approx(4.0)

    def test_single_pair(self):
        assert brute_force_ot(delta(0.0), delta(2.0), 3.0).value == pytest.approx(8.0)

    def test_too_large(self, rng):
        big = random_discrete(rng, m=7, d=1)
        small = random_discrete(rng, m=2, d=1)
        with pytest.raises(TooLarge):
            brute_force_ot(big, small)

    def test_vertex_enumeration_path(self, rng):
        # non-uniform weights force the spanning-tree search
        for _ in range(20):
            mu = random_discrete(rng, m=int(rng.integers(2, 5)), d=2, uniform=False)
            nu = random_discrete(rng, m=int(rng.integers(2, 4)), d=2, uniform=False)
            got = solve_kantorovich(mu, nu, 2.0)[1].value
            assert brute_force_ot(mu, nu, 2.0).value == pytest.approx(got, abs=1e-9)


class TestMetric:
    def test_self_distance_zero(self, rng):
        mu = random_discrete(rng, m=4, d=3)
        assert wasserstein_distance(mu, mu, 2.0) == 0.0

    def test_symmetry(self, rng):
        for _ in range(20):
            mu = random_discrete(rng, d=2)
            nu = random_discrete(rng, d=2)
            assert wasserstein_distance(mu, nu) == pytest.approx(
                wasserstein_distance(nu, mu), abs=1e-9
            )

    def test_triangle_inequality(self, rng):
        for _ in range(20):
            d = int(rng.integers(1, 3))
            mu, nu, rho = (random_discrete(rng, d=d) for _ in range(3))
            for p in (1.0, 2.0):
                ab = wasserstein_distance(mu, nu, p)
                bc = wasserstein_distance(nu, rho, p)
                ac = wasserstein_distance(mu, rho, p)
                assert ac <= ab + bc + 1e-9

    def test_one_dimensional_monotone_oracle(self, rng):
        for _ in range(40):
            mu = random_discrete(rng, d=1)
            nu = random_discrete(rng, d=1)
            for p in (1.0, 2.0, 3.0):
                got = solve_kantorovich(mu, nu, p)[1].value
                assert got == pytest.approx(monotone_1d_cost(mu, nu, p), abs=1e-9)


class TestLipschitzPushforward:
    def test_appendix_inequality(self, rng):
        # W_p(f#mu, f#nu) <= Lip(f) W_p(mu, nu) with Lip over the atoms
        for _ in range(40):
            d = int(rng.integers(1, 4))
            mu = random_discrete(rng, d=d)
            nu = random_discrete(rng, d=d)
            f = random_pw_affine(rng, d)
            lip = lipschitz_over(f, np.vstack([mu.atoms, nu.atoms]))
            for p in (1.0, 2.0):
                lhs = wasserstein_distance(pushforward(mu, f), pushforward(nu, f), p)
                rhs = lip * wasserstein_distance(mu, nu, p)
                assert lhs <= rhs + 1e-9
