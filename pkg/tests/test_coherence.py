import numpy as np
import pytest

import gwpdec as gd
from gwpdec.coherence import EvolvedBranch, bath_overlaps, branch_at, weighted_mu
from gwpdec.errors import ContractError, DomainError
from gwpdec.propagator import classical_trajectory

from conftest import two_arm_scenario


def synthetic_branch(phis, ensemble, packet=None, bath_packet=None):
    """Branch with prescribed phases, identical undisplaced packets."""
    g = packet or gd.normalized([0.0], [0.0], [[0.5j]], 1.0)
    gb = bath_packet or gd.normalized([0.0], [0.0], [[0.5j]], 1.0)
    m = len(phis)
    return EvolvedBranch(
        t=0.0,
        g_left=g,
        G_left=(gb,) * m,
        g_right=(g,) * m,
        G_right=(gb,) * m,
        phis=np.asarray(phis, dtype=float),
        g_right_base=g,
    )


class TestEvolve:
    def test_uncoupled_limit(self):
        scenario, ensemble = two_arm_scenario(0.0, bath_kind="thermal", n_thermal=3)
        branch = gd.evolve(scenario, ensemble)
        assert np.all(branch.phis == 0.0)
        for i in range(branch.size):
            assert gd.overlap(branch.G_left[i], branch.G_right[i]) == pytest.approx(
                1.0, abs=1e-12
            )
            assert gd.overlap(branch.g_right[0], branch.g_right[i]) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_small_coupling_matches_direct_integration(self):
        errs = {}
        for lam in (0.06, 0.03):
            scenario, ensemble = two_arm_scenario(lam)
            branch = gd.evolve(scenario, ensemble)
            joint = scenario.joint
            q0 = np.concatenate([scenario.g0_right.q, ensemble.packets[0].q])
            p0 = np.concatenate([scenario.g0_right.p, ensemble.packets[0].p])
            _, qx, px, _ = classical_trajectory(
                q0, p0, joint.full(), joint.masses, scenario.t_final, scenario.dt
            )
            got = np.concatenate(
                [branch.g_right[0].q, branch.G_right[0].q,
                 branch.g_right[0].p, branch.G_right[0].p]
            )
            want = np.concatenate([qx[-1], px[-1]])
            errs[lam] = np.abs(got - want).max()
        assert 3.4 < errs[0.06] / errs[0.03] < 4.6

    def test_system_only_coupling_leaves_bath_untouched(self):
        # coupling independent of the bath coordinate: pure phase on the arm
        coup = gd.builtin_model("gaussian_bump", {"height": 1.0, "width": 0.8}).embedded(
            2, [0]
        )
        scenario, ensemble = two_arm_scenario(
            0.3, coupling=coup, bath_kind="thermal", n_thermal=3
        )
        branch = gd.evolve(scenario, ensemble)
        o = bath_overlaps(branch)
        np.testing.assert_allclose(np.diag(o), np.ones(3), atol=1e-12)
        assert np.ptp(branch.phis) < 1e-12  # same phase for every member
        assert abs(branch.phis[0]) > 1e-4

    def test_dimension_mismatch_rejected(self):
        scenario, _ = two_arm_scenario(0.1)
        bad = gd.single_packet(
            gd.normalized([0.0, 0.0], [0.0, 0.0], np.diag([0.5j, 0.5j]), 1.0)
        )
        with pytest.raises(ContractError):
            gd.evolve(scenario, bad)


class TestEffectiveWavefunction:
    def test_no_interaction_norm_half(self):
        scenario, ensemble = two_arm_scenario(0.0, bath_kind="thermal", n_thermal=4)
        branch = gd.evolve(scenario, ensemble)
        psi = gd.effective_wavefunction(branch, ensemble)
        assert psi.norm() == pytest.approx(0.5, abs=1e-8)

    def test_single_bath_state_norm(self):
        scenario, ensemble = two_arm_scenario(0.4)
        branch = gd.evolve(scenario, ensemble)
        psi = gd.effective_wavefunction(branch, ensemble)
        o11 = bath_overlaps(branch)[0, 0]
        assert psi.norm() == pytest.approx(0.5 * abs(o11) ** 2, abs=1e-9)

    def test_two_state_phase_cancellation(self):
        gb = gd.normalized([0.0], [0.0], [[0.5j]], 1.0)
        ensemble = gd.pure_state([gb, gb], [2**-0.5, 2**-0.5], [0.0, 0.0])
        branch = synthetic_branch([0.0, np.pi], ensemble, bath_packet=gb)
        psi = gd.effective_wavefunction(branch, ensemble)
        assert psi.norm() == pytest.approx(0.0, abs=1e-12)


class TestMCoh:
    def test_no_interaction_maximum(self):
        scenario, ensemble = two_arm_scenario(0.0, bath_kind="thermal", n_thermal=3)
        branch = gd.evolve(scenario, ensemble)
        assert gd.m_coh(branch, ensemble) == pytest.approx(0.5, abs=1e-8)

    def test_fully_dephased_pair(self):
        gb = gd.normalized([0.0], [0.0], [[0.5j]], 1.0)
        ensemble = gd.pure_state([gb, gb], [2**-0.5, 2**-0.5], [0.0, 0.0])
        branch = synthetic_branch([0.0, np.pi], ensemble, bath_packet=gb)
        assert gd.m_coh(branch, ensemble) == pytest.approx(0.0, abs=1e-12)

    def test_single_state_identity_strong_displacement(self):
        bath = gd.single_packet(
            gd.normalized([1.2], [0.0], [[np.sqrt(2) / 2 * 1j]], 1.0)
        )
        scenario, ensemble = two_arm_scenario(0.8, bath_packets=bath)
        branch = gd.evolve(scenario, ensemble)
        o11 = bath_overlaps(branch)[0, 0]
        assert branch.series.dev_dq[0, -1, 0] != 0.0
        assert gd.m_coh(branch, ensemble) == pytest.approx(
            0.5 * abs(o11) ** 2, abs=1e-9
        )

    def test_bounds_on_random_scenarios(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            lam = rng.uniform(0.0, 0.4)
            scenario, ensemble = two_arm_scenario(
                lam, bath_kind="thermal", n_thermal=3,
                seed=int(rng.integers(1, 10000)), t_final=1.5, dt=0.003,
            )
            branch = gd.evolve(scenario, ensemble)
            val = gd.m_coh(branch, ensemble)
            assert -1e-12 <= val <= 0.5 + 1e-8

    def test_four_index_sum_hermitian(self):
        # summation-order swap is a relabeling; the sum must be real
        scenario, ensemble = two_arm_scenario(0.3, bath_kind="thermal", n_thermal=3)
        branch = gd.evolve(scenario, ensemble)
        o = bath_overlaps(branch)
        w = ensemble.weights
        gs = np.array(
            [[gd.overlap(a, b) for b in branch.g_right] for a in branch.g_right]
        )
        ph = np.exp(1j * branch.phis)
        four = 0.5 * np.einsum(
            "ab,ca,bd,ca,db,b,a->", gs, w, w, np.conj(o), o, ph, np.conj(ph)
        )
        assert abs(four.imag) < 1e-12
        swapped = 0.5 * np.einsum(
            "ba,ac,db,ac,bd,a,b->", gs.T, w.T, w.T, np.conj(o).T, o.T,
            np.conj(ph), ph,
        )
        assert abs(four - np.conj(swapped)) < 1e-13

    def test_central_identity_randomized_mixed_baths(self):
        # the four-index sum is checked against <Psi|Psi> inside m_coh; this
        # drives it over random couplings, sizes and mixed ensembles
        rng = np.random.default_rng(99)
        couplings = [
            gd.builtin_model("bilinear", {"c": 1.0}),
            gd.builtin_model("gaussian_window", {"c": 1.0, "width": 1.2}),
            gd.builtin_model("linear", {"slope": 0.8}).embedded(2, [1]),
        ]
        for k in range(8):
            lam = rng.uniform(0.0, 0.3)
            kind = ("thermal", "pure", "mixture")[k % 3]
            if kind == "thermal":
                scenario, ensemble = two_arm_scenario(
                    lam, coupling=couplings[k % 3], bath_kind="thermal",
                    n_thermal=int(rng.integers(1, 4)),
                    seed=int(rng.integers(1, 10**6)), t_final=1.2, dt=0.003,
                )
            else:
                m = int(rng.integers(1, 4))
                packets = [
                    gd.normalized(
                        rng.normal(0, 1, 1), rng.normal(0, 1, 1),
                        [[0.5j * rng.uniform(0.5, 2.0)]], 1.0,
                    )
                    for _ in range(m)
                ]
                if kind == "pure":
                    ensemble = gd.pure_state(
                        packets, rng.uniform(0.2, 1.0, m), rng.uniform(0, 2 * np.pi, m)
                    )
                else:
                    ensemble = gd.diagonal_mixture(packets, rng.uniform(0.2, 1.0, m))
                scenario, _ = two_arm_scenario(
                    lam, coupling=couplings[k % 3], t_final=1.2, dt=0.003
                )
            branch = gd.evolve(scenario, ensemble)
            val = gd.m_coh(branch, ensemble)  # raises on identity violation
            assert np.isfinite(val)


class TestTotalPurity:
    def test_no_interaction_pure(self):
        scenario, ensemble = two_arm_scenario(0.0, bath_kind="thermal", n_thermal=3)
        branch = gd.evolve(scenario, ensemble)
        rep = gd.total_purity(branch, ensemble)
        assert rep.purity_total == pytest.approx(1.0, abs=1e-6)
        assert rep.trace == pytest.approx(1.0, abs=1e-8)

    def test_zeroed_off_diagonal_blocks(self):
        scenario, ensemble = two_arm_scenario(0.0, bath_kind="thermal", n_thermal=3)
        branch = gd.evolve(scenario, ensemble)
        rep = gd.total_purity(branch, ensemble, zero_off_diagonal=True)
        assert rep.purity_total == pytest.approx(0.5, abs=1e-10)
        assert rep.block_rl_lr == 0.0

    def test_block_identity(self):
        scenario, ensemble = two_arm_scenario(0.25, bath_kind="thermal", n_thermal=3)
        branch = gd.evolve(scenario, ensemble)
        rep = gd.total_purity(branch, ensemble)
        assert abs(rep.block_rl_lr - rep.m_coh) < 1e-10
        assert 0.0 < rep.purity_total <= 1.0 + 1e-8

    def test_diagnostics_signs(self):
        scenario, ensemble = two_arm_scenario(0.3, bath_kind="thermal", n_thermal=4)
        branch = gd.evolve(scenario, ensemble)
        rep = gd.total_purity(branch, ensemble)
        assert rep.phase_spread >= 0.0
        assert 0.0 <= rep.mean_bath_overlap <= 1.0 + 1e-9
        assert rep.mean_system_displacement >= 0.0


class TestEstimators:
    def test_nondynamical_all_aligned(self):
        mu, val = gd.nondynamical_estimate([0.25, 0.25, 0.5], [0.0, 0.0, 0.0])
        assert mu == pytest.approx(1.0)
        assert val == pytest.approx(0.5)

    def test_nondynamical_opposite_phases(self):
        mu, val = gd.nondynamical_estimate([0.5, 0.5], [0.0, np.pi])
        assert abs(mu) < 1e-15 and val < 1e-15

    def test_nondynamical_uniform_phase_ring(self):
        n = 10**4
        phases = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        mu, _ = gd.nondynamical_estimate(np.full(n, 1.0 / n), phases)
        assert abs(mu) < 1e-3

    def test_nondynamical_unnormalized_rejected(self):
        with pytest.raises(DomainError):
            gd.nondynamical_estimate([0.5, 0.6], [0.0, 0.0])

    def test_diagonal_mu_reductions(self):
        w = [0.3, 0.7]
        ph = [0.4, -1.1]
        full, _ = gd.nondynamical_estimate(w, ph)
        assert gd.diagonal_mu(w, ph, [1.0, 1.0]) == pytest.approx(full)
        assert gd.diagonal_mu([1.0], [0.7], [0.6]) == pytest.approx(
            0.6 * np.exp(0.7j)
        )

    def test_diagonal_mu_matches_pure_mu_for_separated_packets(self):
        packets = [
            gd.normalized([-9.0], [0.0], [[0.5j]], 1.0),
            gd.normalized([9.0], [0.0], [[0.5j]], 1.0),
        ]
        ensemble = gd.pure_state(packets, [np.sqrt(0.6), np.sqrt(0.4)], [0.0, 0.0])
        branch = synthetic_branch([0.3, -0.9], ensemble)
        branch = EvolvedBranch(
            t=0.0, g_left=branch.g_left, G_left=tuple(packets),
            g_right=branch.g_right, G_right=tuple(packets),
            phis=branch.phis, g_right_base=branch.g_right_base,
        )
        o = bath_overlaps(branch)
        got = gd.diagonal_mu(
            np.abs(ensemble.pure_amplitudes) ** 2, branch.phis, np.diag(o)
        )
        assert gd.pure_bath_mu(branch, ensemble) == pytest.approx(got, abs=1e-10)

    def test_pure_bath_mu_no_interaction(self):
        scenario, _ = two_arm_scenario(0.0)
        gb = gd.normalized([0.0], [0.0], [[np.sqrt(2) / 2 * 1j]], 1.0)
        ensemble = gd.pure_state([gb], [1.0], [0.0])
        branch = gd.evolve(scenario, ensemble)
        assert gd.pure_bath_mu(branch, ensemble) == pytest.approx(1.0, abs=1e-10)

    def test_pure_bath_mu_single_state(self):
        scenario, _ = two_arm_scenario(0.5)
        gb = gd.normalized([0.0], [0.0], [[np.sqrt(2) / 2 * 1j]], 1.0)
        ensemble = gd.pure_state([gb], [1.0], [0.0])
        branch = gd.evolve(scenario, ensemble)
        o11 = bath_overlaps(branch)[0, 0]
        want = o11 * np.exp(1j * branch.phis[0])
        assert gd.pure_bath_mu(branch, ensemble) == pytest.approx(want, abs=1e-12)

    def test_pure_bath_mu_requires_pure_ensemble(self):
        scenario, ensemble = two_arm_scenario(0.1, bath_kind="thermal", n_thermal=2)
        branch = gd.evolve(scenario, ensemble)
        with pytest.raises(ContractError):
            gd.pure_bath_mu(branch, ensemble)

    def test_ipr_bound_values(self):
        n = 7
        assert gd.ipr_bound(np.full(n, n**-0.5)) == pytest.approx(1.0 / n, rel=1e-12)
        assert gd.ipr_bound([1.0]) == pytest.approx(1.0)
        assert gd.ipr_bound([np.sqrt(0.8), np.sqrt(0.2)]) == pytest.approx(0.68)

    def test_ipr_bound_unnormalized_rejected(self):
        with pytest.raises(DomainError):
            gd.ipr_bound([1.0, 1.0])


class TestPhaseDistribution:
    def test_single_phase_single_bin(self):
        gb = gd.normalized([0.0], [0.0], [[0.5j]], 1.0)
        ensemble = gd.pure_state([gb, gb], [2**-0.5, 2**-0.5], [0.0, 0.0])
        branch = synthetic_branch([0.7, 0.7], ensemble, bath_packet=gb)
        dist = gd.phase_distribution(branch, ensemble, 16)
        assert np.count_nonzero(dist.bin_weights) == 1
        assert abs(dist.mean_phase_factor) == pytest.approx(1.0, abs=1e-12)

    def test_two_opposite_phases(self):
        gb = gd.normalized([0.0], [0.0], [[0.5j]], 1.0)
        ensemble = gd.pure_state([gb, gb], [2**-0.5, 2**-0.5], [0.0, 0.0])
        branch = synthetic_branch([0.0, np.pi - 1e-9], ensemble, bath_packet=gb)
        dist = gd.phase_distribution(branch, ensemble, 8)
        assert np.count_nonzero(dist.bin_weights) == 2
        assert abs(dist.direct_phase_factor) < 1e-8

    def test_histogram_converges_to_direct_sum(self):
        rng = np.random.default_rng(5)
        phis = rng.normal(0.4, 0.8, 64)
        gb = gd.normalized([0.0], [0.0], [[0.5j]], 1.0)
        ensemble = gd.diagonal_mixture([gb] * 64, np.full(64, 1 / 64))
        branch = synthetic_branch(phis, ensemble, bath_packet=gb)
        errs = []
        for n_bins in (16, 64, 256):
            dist = gd.phase_distribution(branch, ensemble, n_bins)
            errs.append(abs(dist.mean_phase_factor - dist.direct_phase_factor))
        assert errs[2] < errs[0]
        assert errs[2] < 1e-3

    def test_bin_count_contract(self):
        scenario, ensemble = two_arm_scenario(0.1)
        branch = gd.evolve(scenario, ensemble)
        with pytest.raises(ContractError):
            gd.phase_distribution(branch, ensemble, 0)


class TestBranchSeries:
    def test_time_resolved_m_coh_starts_at_half(self):
        scenario, ensemble = two_arm_scenario(0.2, bath_kind="thermal", n_thermal=2)
        branch = gd.evolve(scenario, ensemble)
        series = branch.series
        first = branch_at(series, 0)
        assert gd.m_coh(first, ensemble) == pytest.approx(0.5, abs=1e-10)
        mid = branch_at(series, series.n_samples // 2)
        assert 0.0 <= gd.m_coh(mid, ensemble) <= 0.5 + 1e-9

    def test_weighted_mu_reduces_to_pure(self):
        scenario, _ = two_arm_scenario(0.3)
        gb = gd.normalized([0.2], [0.0], [[np.sqrt(2) / 2 * 1j]], 1.0)
        ensemble = gd.pure_state([gb], [1.0], [0.0])
        branch = gd.evolve(scenario, ensemble)
        assert weighted_mu(branch, ensemble) == pytest.approx(
            gd.pure_bath_mu(branch, ensemble), abs=1e-12
        )
