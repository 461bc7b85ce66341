import math

import numpy as np
import pytest

from qwitness.hilbert import (FockSpace, TruncationError, annihilation,
                              coherent_state, creation, density_matrix,
                              fock_state, generalized_dissipator, husimi_q,
                              number_operator, standard_dissipator)


def outer(space, i, j):
    return np.outer(fock_state(space, i), fock_state(space, j).conj())


class TestLadderOperators:
    def test_annihilation_dim3(self):
        a = annihilation(FockSpace(3))
        expected = np.array([[0, 1, 0], [0, 0, math.sqrt(2)], [0, 0, 0]],
                            dtype=complex)
        np.testing.assert_allclose(a, expected)

    def test_vacuum_annihilated(self, space):
        a = annihilation(space)
        np.testing.assert_allclose(a @ fock_state(space, 0), 0.0, atol=1e-15)

    def test_number_operator_eigenvalues(self, space):
        n_op = creation(space) @ annihilation(space)
        for n in range(space.dim):
            v = fock_state(space, n)
            np.testing.assert_allclose(n_op @ v, n * v, atol=1e-12)

    def test_commutator_truncated(self, space):
        # exact except the corner element, which truncation must distort
        a = annihilation(space)
        comm = a @ creation(space) - creation(space) @ a
        eye = np.eye(space.dim)
        np.testing.assert_allclose(comm[:-1, :-1], eye[:-1, :-1], atol=1e-12)
        assert comm[-1, -1] != 1.0

    def test_dim_validation(self):
        with pytest.raises(ValueError):
            FockSpace(1)


class TestCoherentState:
    def test_vacuum(self, space):
        np.testing.assert_array_equal(coherent_state(space, 0.0),
                                      fock_state(space, 0))

    def test_ground_overlap_alpha_one(self, space):
        # closed form: c_0 = e^{-1/2} before renormalization; tail ~ 1e-19
        v = coherent_state(space, 1.0)
        assert abs(v[0] - math.exp(-0.5)) < 1e-12

    def test_unit_norm(self, space):
        for alpha in (0.3, 1.0, -0.7 + 1.2j, 2.0 + 2.0j):
            v = coherent_state(space, alpha, on_tail="warn")
            assert abs(np.linalg.norm(v) - 1.0) < 1e-12

    def test_annihilation_eigenstate(self, space):
        alpha = 0.8 - 0.4j
        v = coherent_state(space, alpha)
        w = annihilation(space) @ v
        np.testing.assert_allclose(w[:-1], alpha * v[:-1], atol=1e-10)

    def test_tail_rejection(self, space):
        with pytest.raises(TruncationError):
            coherent_state(space, 4.0)
        coherent_state(space, 4.0, on_tail="warn")   # allowed when asked

    def test_bad_mode(self, space):
        with pytest.raises(ValueError):
            coherent_state(space, 1.0, on_tail="ignore")


class TestDissipators:
    def test_lowering_on_two_quanta(self, space):
        # 2 a|2><2|a' - a'a|2><2| - |2><2|a'a = 4|1><1| - 4|2><2|
        a = annihilation(space)
        rho = outer(space, 2, 2)
        got = standard_dissipator(a, rho)
        want = 4.0 * outer(space, 1, 1) - 4.0 * outer(space, 2, 2)
        np.testing.assert_allclose(got, want, atol=1e-13)

    def test_vacuum_fixed_point(self, space):
        a = annihilation(space)
        got = standard_dissipator(a, outer(space, 0, 0))
        np.testing.assert_allclose(got, 0.0, atol=1e-15)

    def test_generalized_on_two_quanta(self, space):
        # 2 sqrt(6)|1><3| - sqrt(2)|0><2| - 2 sqrt(3)|2><4|
        a = annihilation(space)
        got = generalized_dissipator(a, outer(space, 2, 2))
        want = (2.0 * math.sqrt(6) * outer(space, 1, 3)
                - math.sqrt(2) * outer(space, 0, 2)
                - 2.0 * math.sqrt(3) * outer(space, 2, 4))
        np.testing.assert_allclose(got, want, atol=1e-13)

    def test_trace_annihilating_random(self, space, rng):
        a = annihilation(space)
        for _ in range(100):
            x = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
            rho = 0.5 * (x + x.conj().T)
            assert abs(np.trace(standard_dissipator(a, rho))) < 1e-12
            assert abs(np.trace(generalized_dissipator(a, rho))) < 1e-12

    def test_diagonal_preservation(self, space, rng):
        a = annihilation(space)
        rho = np.diag(rng.uniform(size=20)).astype(complex)
        out = standard_dissipator(a, rho)
        off = out - np.diag(np.diag(out))
        np.testing.assert_allclose(off, 0.0, atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2])
    def test_generalized_diagonal_to_offdiagonal(self, space, rng, n):
        # D'_{a^n} maps diagonal matrices onto the +-2n off-diagonals only
        an = np.linalg.matrix_power(annihilation(space), n)
        rho = np.diag(rng.uniform(size=20)).astype(complex)
        out = generalized_dissipator(an, rho)
        mask = np.zeros((20, 20), dtype=bool)
        idx = np.arange(20 - 2 * n)
        mask[idx, idx + 2 * n] = True
        mask[idx + 2 * n, idx] = True
        np.testing.assert_allclose(out[~mask], 0.0, atol=1e-14)

    def test_generalized_diagonal_bruteforce_small(self):
        space = FockSpace(6)
        a = annihilation(space)
        for k in range(6):
            out = generalized_dissipator(a, outer(space, k, k))
            assert np.max(np.abs(np.diag(out))) < 1e-14

    def test_hermiticity_preservation(self, space, rng):
        a = annihilation(space)
        x = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
        rho = 0.5 * (x + x.conj().T)
        out = standard_dissipator(a, rho)
        np.testing.assert_allclose(out, out.conj().T, atol=1e-12)
        pair = (generalized_dissipator(a, rho)
                + generalized_dissipator(creation(space), rho))
        np.testing.assert_allclose(pair, pair.conj().T, atol=1e-12)

    def test_dimension_mismatch(self, space):
        with pytest.raises(ValueError):
            standard_dissipator(annihilation(space), np.eye(5))


class TestHusimi:
    def test_vacuum_peak(self, space):
        rho = density_matrix(fock_state(space, 0))
        assert abs(husimi_q(rho, 0.0) - 1.0 / math.pi) < 1e-14

    def test_vacuum_displaced(self, space):
        rho = density_matrix(fock_state(space, 0))
        assert abs(husimi_q(rho, 1.0) - math.exp(-1.0) / math.pi) < 1e-12

    def test_riemann_sum_normalization(self, space):
        # independent oracle: Riemann sum of Q over a wide grid ~ 1
        rho = density_matrix(fock_state(space, 0))
        h = 0.1
        xs = np.arange(-4.0, 4.0 + h / 2, h)
        total = math.fsum(husimi_q(rho, complex(x, y)) for x in xs for y in xs)
        assert abs(total * h * h - 1.0) < 1e-3

    def test_nonnegative_on_grid(self, space, rng):
        x = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
        rho = x @ x.conj().T
        rho /= np.trace(rho)
        for alpha in (0.0, 0.5 + 0.5j, -1.0, 2.0j):
            assert husimi_q(rho, alpha) >= -1e-14


class TestStateValidation:
    def test_density_matrix_norm_check(self, space):
        with pytest.raises(ValueError):
            density_matrix(2.0 * fock_state(space, 1))

    def test_number_operator_diag(self, space):
        np.testing.assert_array_equal(np.diag(number_operator(space)).real,
                                      np.arange(20))
