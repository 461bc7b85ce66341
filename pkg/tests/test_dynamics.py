import math

import numpy as np
import pytest

from qwitness.bath import BathSpec
from qwitness.dynamics import (Propagator, evolve, evolve_batch,
                               evolve_trajectory, liouvillian_apply,
                               trajectory_to_csv)
from qwitness.hilbert import (annihilation, coherent_state, density_matrix,
                              fock_state, generalized_dissipator,
                              standard_dissipator)
from qwitness.rates import MarkovianRates, markovian_rates

CYCLE = 2.0 * math.pi


class _ConstRates:
    def __init__(self, heating, cooling, squeezing):
        self.triple = np.array([heating, cooling, squeezing])

    def rates_at(self, t):
        return self.triple


def outer(space, i, j):
    return np.outer(fock_state(space, i), fock_state(space, j).conj())


class TestLiouvillian:
    def test_number_state_free_evolution_is_stationary(self, space):
        prop = Propagator(space, 1, MarkovianRates(0.0, 0.0, 0.0))
        out = liouvillian_apply(prop, outer(space, 1, 1), 0.0)
        np.testing.assert_allclose(out, 0.0, atol=1e-15)

    def test_cooling_only_single_quantum(self, space):
        prop = Propagator(space, 1, MarkovianRates(0.0, 1.0, 0.0))
        out = liouvillian_apply(prop, outer(space, 1, 1), 0.0)
        want = 2.0 * outer(space, 0, 0) - 2.0 * outer(space, 1, 1)
        np.testing.assert_allclose(out, want, atol=1e-14)

    def test_traceless_random(self, space, rng):
        prop = Propagator(space, 1, _ConstRates(0.3, 0.7, -0.2))
        for _ in range(10):
            x = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
            rho = 0.5 * (x + x.conj().T)
            assert abs(np.trace(liouvillian_apply(prop, rho, 0.0))) < 1e-12

    @pytest.mark.parametrize("n", [1, 2])
    def test_matches_dissipator_formula(self, space, rng, n):
        # dual route: sparse superoperator vs the textbook operator algebra
        h, c, s = 0.173, 0.591, -0.234
        prop = Propagator(space, n, _ConstRates(h, c, s))
        a_n = np.linalg.matrix_power(annihilation(space), n)
        ad_n = a_n.conj().T
        H = np.diag(np.arange(20, dtype=complex))
        x = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
        rho = 0.5 * (x + x.conj().T)
        want = (-1j * (H @ rho - rho @ H)
                + h * standard_dissipator(ad_n, rho)
                + c * standard_dissipator(a_n, rho)
                + s * (generalized_dissipator(a_n, rho)
                       + generalized_dissipator(ad_n, rho)))
        got = liouvillian_apply(prop, rho, 0.0)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_shape_mismatch(self, space):
        prop = Propagator(space, 1, MarkovianRates(0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            liouvillian_apply(prop, np.eye(5), 0.0)

    def test_table_n_mismatch(self, space, squeezed_table):
        with pytest.raises(ValueError):
            Propagator(space, 2, squeezed_table)

    def test_tolerance_contract(self, space):
        with pytest.raises(ValueError):
            Propagator(space, 1, MarkovianRates(0, 0, 0), rtol=1e-6)
        with pytest.raises(ValueError):
            Propagator(space, 1, MarkovianRates(0, 0, 0), atol=1e-8)


class TestEvolve:
    def test_free_evolution_full_revolution(self, space):
        # tolerances tightened within the contract to resolve the phase
        prop = Propagator(space, 1, MarkovianRates(0.0, 0.0, 0.0),
                          rtol=1e-10, atol=1e-12)
        rho0 = density_matrix(coherent_state(space, 1.0))
        rho1 = evolve(prop, rho0, 0.0, CYCLE)
        fidelity = float(np.real(np.trace(rho0 @ rho1)))
        assert fidelity > 1.0 - 1e-9

    def test_thermal_markovian_steady_occupation(self, space, default_J):
        beta = 2.0
        bath = BathSpec(kind="thermal", m=1, beta=beta)
        prop = Propagator(space, 1, markovian_rates(1, 1, bath, default_J))
        rho = evolve(prop, density_matrix(fock_state(space, 0)), 0.0, 80.0)
        nbar = 1.0 / math.expm1(beta)
        got = float(np.real(np.trace(np.diag(np.arange(20.0)) @ rho)))
        assert abs(got - nbar) / nbar < 0.02

    def test_euler_oracle_short_segment(self, space, squeezed_table):
        # explicit Euler at dt = 1e-5 cycles; segment short enough that the
        # oracle's own first-order error stays under the tolerance
        prop = Propagator(space, 1, squeezed_table)
        rho0 = density_matrix(fock_state(space, 0))
        dt = 1e-5 * CYCLE
        T = 0.001 * CYCLE
        rho = rho0.astype(complex)
        t = 0.0
        for _ in range(round(T / dt)):
            rho = rho + dt * liouvillian_apply(prop, rho, t)
            t += dt
        adaptive = evolve(prop, rho0, 0.0, T)
        assert np.max(np.abs(adaptive - rho)) < 1e-7

    def test_trace_and_hermiticity_drift(self, space, squeezed_table):
        prop = Propagator(space, 1, squeezed_table)
        rho0 = density_matrix(fock_state(space, 5))
        ts = np.linspace(0.0, 1.0 * CYCLE, 30)
        _, stats = evolve_trajectory(prop, rho0, ts)
        assert stats.trace < 1e-8
        assert stats.hermiticity < 1e-9

    def test_diagonal_invariance_thermal(self, space, thermal_table):
        # no squeezing rate: Fock populations evolve without coherences
        prop = Propagator(space, 1, thermal_table)
        rho0 = density_matrix(fock_state(space, 4))
        states, _ = evolve_trajectory(prop, rho0,
                                      np.linspace(0.0, 1.0 * CYCLE, 20))
        off = states - np.einsum("tij,ij->tij", states, np.eye(20))
        assert np.max(np.abs(off)) < 1e-9

    def test_linearity(self, space, squeezed_table, rng):
        prop = Propagator(space, 1, squeezed_table)
        rho_a = density_matrix(fock_state(space, 2))
        rho_b = density_matrix(coherent_state(space, 0.7))
        for c in (0.25, 0.6):
            mix = evolve(prop, c * rho_a + (1 - c) * rho_b, 0.0, 2.0)
            parts = (c * evolve(prop, rho_a, 0.0, 2.0)
                     + (1 - c) * evolve(prop, rho_b, 0.0, 2.0))
            np.testing.assert_allclose(mix, parts, atol=1e-8)

    def test_zero_length_interval_returns_copy(self, space, squeezed_table):
        prop = Propagator(space, 1, squeezed_table)
        rho0 = density_matrix(fock_state(space, 1))
        out = evolve(prop, rho0, 0.5, 0.5)
        np.testing.assert_array_equal(out, rho0)
        out[1, 1] = 0.0
        assert rho0[1, 1] == 1.0 + 0.0j

    def test_extrapolation_refused(self, space, squeezed_table):
        prop = Propagator(space, 1, squeezed_table)
        rho0 = density_matrix(fock_state(space, 1))
        with pytest.raises(ValueError):
            evolve(prop, rho0, 0.0, squeezed_table.t_max * 2.0)

    def test_time_ordering_validated(self, space, squeezed_table):
        prop = Propagator(space, 1, squeezed_table)
        with pytest.raises(ValueError):
            evolve(prop, density_matrix(fock_state(space, 1)), 1.0, 0.5)

    def test_invalid_initial_state_rejected(self, space, squeezed_table):
        prop = Propagator(space, 1, squeezed_table)
        with pytest.raises(ValueError):
            evolve(prop, 0.5 * np.eye(20, dtype=complex), 0.0, 1.0)

    def test_batch_matches_individual(self, space, squeezed_table):
        prop = Propagator(space, 1, squeezed_table)
        mats = np.array([density_matrix(fock_state(space, k)) for k in (0, 3, 6)])
        batch, _ = evolve_batch(prop, mats, 0.2, 1.7)
        for k, rho in zip((0, 3, 6), batch):
            single = evolve(prop, density_matrix(fock_state(space, k)), 0.2, 1.7)
            # shared error control couples the columns at the tolerance level
            np.testing.assert_allclose(rho, single, atol=1e-8)


class TestPositivityDiagnostics:
    def test_transient_violation_is_flagged(self, space, caplog):
        import logging
        # an undamped squeezing drive is not completely positive; the evolve
        # path must report the negative eigenvalue instead of hiding it
        prop = Propagator(space, 1, _ConstRates(0.0, 0.0, 0.05))
        rho0 = density_matrix(fock_state(space, 0))
        with caplog.at_level(logging.WARNING, logger="qwitness.dynamics"):
            logging.getLogger("qwitness.dynamics").setLevel(logging.WARNING)
            _, stats = evolve_batch(prop, rho0, 0.0, 2.0)
        assert stats.min_eigenvalue < -1e-6
        assert any("positivity" in rec.message for rec in caplog.records)


class TestTrajectoryDump:
    def test_csv_layout(self, tmp_path, space, thermal_table):
        prop = Propagator(space, 1, thermal_table)
        rho0 = density_matrix(fock_state(space, 1))
        path = tmp_path / "traj.csv"
        trajectory_to_csv(prop, rho0, np.linspace(0.0, 1.0, 5), path)
        lines = path.read_text().splitlines()
        n_pairs = 20 * 21 // 2
        assert lines[0].split(",")[:2] == ["t", "re_rho_0_0"]
        assert len(lines[0].split(",")) == 1 + n_pairs
        assert len(lines) == 6
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        # row-major upper triangle: entry for (1,1) sits at offset d - 0 + 1
        assert abs(float(first[1 + 20]) - 1.0) < 1e-12
