import numpy as np
import pytest

import gwpdec as gd
from gwpdec.errors import ContractError, DomainError

from conftest import coherent_width


def packet_at(q, p=0.0, alpha=1.0, hbar=1.0):
    return gd.normalized([q], [p], [[0.5j * alpha]], hbar)


class TestPureState:
    def test_single_packet_weight_matrix(self):
        ens = gd.pure_state([packet_at(0.0)], [1.0], [0.0])
        np.testing.assert_allclose(ens.weights, [[1.0]], atol=1e-14)

    def test_two_identical_packets_renormalized(self):
        g = packet_at(0.0)
        ens = gd.pure_state([g, g], [2**-0.5, 2**-0.5], [0.0, 0.0])
        # all-ones Gram: trace renormalization divides the outer product by 2
        np.testing.assert_allclose(ens.weights, 0.25 * np.ones((2, 2)), atol=1e-12)
        assert gd.validate(ens).trace_residual < 1e-8

    def test_two_separated_packets(self):
        ens = gd.pure_state(
            [packet_at(-8.0), packet_at(8.0)], [2**-0.5, 2**-0.5], [0.0, 0.0]
        )
        np.testing.assert_allclose(ens.weights, 0.5 * np.ones((2, 2)), atol=1e-10)
        assert gd.validate(ens).trace_residual < 1e-8

    def test_negative_amplitude_rejected(self):
        with pytest.raises(DomainError):
            gd.pure_state([packet_at(0.0)], [-1.0], [0.0])

    def test_matches_single_member_mixture(self):
        g = packet_at(0.3, 0.2)
        a = gd.pure_state([g], [0.7], [0.4])
        b = gd.diagonal_mixture([g], [0.2])
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-14)


class TestDiagonalMixture:
    def test_single_packet(self):
        ens = gd.diagonal_mixture([packet_at(0.0)], [2.0])
        np.testing.assert_allclose(ens.weights, [[1.0]], atol=1e-14)

    def test_two_orthogonal_packets(self):
        ens = gd.diagonal_mixture([packet_at(-9.0), packet_at(9.0)], [0.5, 0.5])
        np.testing.assert_allclose(ens.weights, np.diag([0.5, 0.5]), atol=1e-12)

    def test_overlapping_packets_trace_corrected(self):
        ens = gd.diagonal_mixture([packet_at(0.0), packet_at(0.4)], [0.5, 0.5])
        assert gd.validate(ens).trace_residual < 1e-10

    def test_probabilities_property(self):
        ens = gd.diagonal_mixture([packet_at(-9.0), packet_at(9.0)], [0.25, 0.75])
        np.testing.assert_allclose(ens.probabilities(), [0.25, 0.75], atol=1e-12)


class TestThermalHarmonic:
    def test_sample_mean_energy(self):
        temperature, n = 5.0, 100
        ens = gd.thermal_harmonic([1.0], temperature, n, seed=42)
        qs = np.array([g.q[0] for g in ens.packets])
        ps = np.array([g.p[0] for g in ens.packets])
        energies = 0.5 * ps**2 + 0.5 * qs**2
        sem = energies.std(ddof=1) / np.sqrt(n)
        assert abs(energies.mean() - temperature) < 3.0 * sem

    def test_seed_reproducibility(self):
        a = gd.thermal_harmonic([1.0, 2.0], 3.0, 8, seed=123)
        b = gd.thermal_harmonic([1.0, 2.0], 3.0, 8, seed=123)
        for ga, gb in zip(a.packets, b.packets):
            np.testing.assert_array_equal(ga.q, gb.q)
            np.testing.assert_array_equal(ga.p, gb.p)
        np.testing.assert_array_equal(a.weights, b.weights)

    def test_coherent_widths(self):
        ens = gd.thermal_harmonic([2.0], 1.0, 3, seed=0, mass=1.5)
        for g in ens.packets:
            np.testing.assert_allclose(g.A, coherent_width(2.0, 1.5), atol=1e-15)

    def test_low_temperature_draws_near_origin(self):
        ens = gd.thermal_harmonic([1.0], 1e-12, 5, seed=3)
        for g in ens.packets:
            assert abs(g.q[0]) < 1e-4 and abs(g.p[0]) < 1e-4

    def test_nonpositive_temperature_rejected(self):
        with pytest.raises(DomainError, match="ground-state"):
            gd.thermal_harmonic([1.0], 0.0, 4, seed=1)

    def test_bad_mode_frequency_rejected(self):
        with pytest.raises(DomainError):
            gd.thermal_harmonic([-1.0], 1.0, 4, seed=1)


class TestValidate:
    def test_constructors_pass(self):
        ensembles = [
            gd.pure_state([packet_at(-3.0), packet_at(3.0)], [0.8, 0.6], [0.0, 1.0]),
            gd.diagonal_mixture([packet_at(0.0), packet_at(1.0)], [0.3, 0.7]),
            gd.thermal_harmonic([1.0], 2.0, 12, seed=7),
        ]
        for ens in ensembles:
            rep = gd.validate(ens)
            assert rep.hermiticity_residual < 1e-8
            assert rep.trace_residual < 1e-8
            assert rep.min_eigenvalue > -1e-9
            assert rep.ok()

    def test_non_hermitian_weights_flagged_at_construction(self):
        g = [packet_at(-3.0), packet_at(3.0)]
        with pytest.raises(ContractError, match="Hermitian"):
            gd.BathEnsemble(packets=g, weights=np.array([[0.5, 0.2], [0.4, 0.5]]))

    def test_positive_semidefinite_spectrum_for_thermal(self):
        rep = gd.validate(gd.thermal_harmonic([1.0], 4.0, 16, seed=11))
        assert rep.min_eigenvalue > -1e-9
