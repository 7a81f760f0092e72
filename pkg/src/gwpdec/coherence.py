"""Two-arm decoherence: evolved branches, effective wavefunction, measures.

A system packet split into a left and a right arm interacts with the bath
in the right arm only.  For each initial bath packet |G_i0> the joint
right-arm state evolves into a displaced product |g^r_it>|G^r_it> e^{i phi_i};
the left arm stays uncoupled.  Everything observable about inter-arm
coherence is then a function of system overlaps, bath overlaps
O^{0r}_{ij} = <G^0_it|G^r_jt>, weights w(j,i) and phases phi_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bath import BathEnsemble
from .errors import ConsistencyError, ContractError, DomainError, GwpdecError
from .perturbation import forced_deviation, perturbed_phase
from .potentials import JointHamiltonian, PotentialModel
from .propagator import Trajectory, propagate, stability
from .wavecore import GaussianWavepacket, displace, overlap, product_packet

_SQRT_HALF = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class TwoArmScenario:
    """Split-packet interferometer with a right-arm system-bath coupling."""

    system_left: PotentialModel
    system_right: PotentialModel
    g0_left: GaussianWavepacket
    g0_right: GaussianWavepacket
    joint: JointHamiltonian
    t_final: float
    dt: float

    def __post_init__(self):
        ns = self.joint.system.dim
        if self.g0_left.dim != ns or self.g0_right.dim != ns:
            raise ContractError("arm packets must live on the system space")
        if self.system_left.dim != ns or self.system_right.dim != ns:
            raise ContractError("arm potentials must live on the system space")
        if not np.array_equal(self.joint.system.codes, self.system_right.codes):
            raise ContractError(
                "joint.system must be the right-arm potential (coupling acts "
                "through the right arm only)"
            )
        for name, g in (("g0_left", self.g0_left), ("g0_right", self.g0_right)):
            n = overlap(g, g)
            if abs(n - 1.0) > 1e-8:
                raise ContractError(f"{name} is not unit norm (<g|g> = {n:.12g})")

    @property
    def n_system(self) -> int:
        return self.joint.system.dim

    @property
    def n_bath(self) -> int:
        return self.joint.bath.dim


@dataclass(frozen=True)
class BranchSeries:
    """Raw per-sample data behind an EvolvedBranch (one entry per bath member)."""

    left_traj: Trajectory
    right_traj: Trajectory
    bath_trajs: tuple
    dev_dp: np.ndarray   # (members, samples, joint dim)
    dev_dq: np.ndarray
    phases: np.ndarray   # (members, samples)
    n_system: int

    @property
    def n_samples(self) -> int:
        return self.left_traj.n_samples


@dataclass(frozen=True)
class EvolvedBranch:
    """Both arm branches at one instant, resolved per initial bath packet."""

    t: float
    g_left: GaussianWavepacket
    G_left: tuple
    g_right: tuple
    G_right: tuple
    phis: np.ndarray
    g_right_base: GaussianWavepacket
    series: BranchSeries = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return len(self.g_right)


def branch_at(series: BranchSeries, k: int) -> EvolvedBranch:
    """Assemble the evolved branch at sample index k."""
    ns = series.n_system
    g_left = series.left_traj.packet(k)
    base_r = series.right_traj.packet(k)
    g_l_bath = tuple(tr.packet(k) for tr in series.bath_trajs)
    g_right = []
    g_right_bath = []
    for i in range(series.dev_dq.shape[0]):
        dq = series.dev_dq[i, k]
        dp = series.dev_dp[i, k]
        g_right.append(displace(base_r, dq[:ns], dp[:ns], 0.0))
        g_right_bath.append(displace(g_l_bath[i], dq[ns:], dp[ns:], 0.0))
    return EvolvedBranch(
        t=float(series.left_traj.times[k]),
        g_left=g_left,
        G_left=g_l_bath,
        g_right=tuple(g_right),
        G_right=tuple(g_right_bath),
        phis=series.phases[:, k].copy(),
        g_right_base=base_r,
        series=series,
    )


def evolve(scenario: TwoArmScenario, ensemble: BathEnsemble) -> EvolvedBranch:
    """Run both arms to t_final; phases and displacements are first order
    in the coupling strength, taken along unperturbed joint trajectories."""
    if ensemble.dim != scenario.n_bath:
        raise ContractError(
            f"bath packets have dim {ensemble.dim}, scenario bath dim {scenario.n_bath}"
        )
    if ensemble.hbar != scenario.g0_left.hbar:
        raise ContractError("ensemble and system packets must share hbar")
    joint = scenario.joint
    ns = scenario.n_system
    m_sys = joint.masses[:ns]
    m_bath = joint.masses[ns:]
    t_final, dt = scenario.t_final, scenario.dt

    left_traj = propagate(scenario.g0_left, scenario.system_left, m_sys, t_final, dt)
    right_traj = propagate(scenario.g0_right, scenario.system_right, m_sys, t_final, dt)

    h0 = joint.h0()
    bath_trajs = []
    dev_dp = []
    dev_dq = []
    phases = []
    for i, g_b in enumerate(ensemble.packets):
        try:
            bath_trajs.append(propagate(g_b, joint.bath, m_bath, t_final, dt))
            joint_traj = propagate(
                product_packet(scenario.g0_right, g_b), h0, joint.masses, t_final, dt
            )
            stabs = stability(joint_traj, h0)
            devs = forced_deviation(joint_traj, stabs, joint.coupling, joint.lam)
            evo = perturbed_phase(joint_traj, devs, joint.coupling, joint.lam)
        except GwpdecError as exc:
            raise type(exc)(f"bath member {i}: {exc}") from exc
        dev_dp.append(np.stack([d.dp for d in devs]))
        dev_dq.append(np.stack([d.dq for d in devs]))
        phases.append(evo.phases)

    series = BranchSeries(
        left_traj=left_traj,
        right_traj=right_traj,
        bath_trajs=tuple(bath_trajs),
        dev_dp=np.stack(dev_dp),
        dev_dq=np.stack(dev_dq),
        phases=np.stack(phases),
        n_system=ns,
    )
    return branch_at(series, series.n_samples - 1)


# -- overlap tables ---------------------------------------------------------


def bath_overlaps(branch: EvolvedBranch) -> np.ndarray:
    """O[i, j] = <G^0_it | G^r_jt>."""
    m = branch.size
    o = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            o[i, j] = overlap(branch.G_left[i], branch.G_right[j])
    return o


def _system_gram(packets) -> np.ndarray:
    m = len(packets)
    g = np.empty((m, m), dtype=complex)
    for a in range(m):
        g[a, a] = overlap(packets[a], packets[a])
        for b in range(a + 1, m):
            g[a, b] = overlap(packets[a], packets[b])
            g[b, a] = np.conj(g[a, b])
    return g


# -- effective wavefunction and coherence measures ---------------------------


@dataclass(frozen=True)
class EffectiveWavefunction:
    """|Psi> = sum_j c_j |g^r_jt> with c_j = 1/sqrt(2) sum_i w(j,i) O_ij e^{i phi_j}."""

    coefficients: np.ndarray
    packets: tuple

    @property
    def terms(self) -> list:
        return list(zip(self.coefficients, self.packets))

    def norm(self) -> float:
        g = _system_gram(self.packets)
        val = complex(np.conj(self.coefficients) @ g @ self.coefficients)
        if abs(val.imag) > 1e-10:
            raise ConsistencyError(
                f"effective wavefunction norm has imaginary residual {val.imag:.3g}"
            )
        return float(val.real)


def effective_wavefunction(
    branch: EvolvedBranch, ensemble: BathEnsemble
) -> EffectiveWavefunction:
    if ensemble.size != branch.size:
        raise ContractError(
            f"ensemble has {ensemble.size} members, branch has {branch.size}"
        )
    o = bath_overlaps(branch)
    w = ensemble.weights
    phase = np.exp(1j * branch.phis)
    coeff = _SQRT_HALF * np.einsum("ji,ij->j", w, o) * phase
    return EffectiveWavefunction(coefficients=coeff, packets=branch.g_right)


def m_coh(branch: EvolvedBranch, ensemble: BathEnsemble) -> float:
    """Inter-arm coherence, the rl+lr part of Tr[rho_red^2].

    Evaluated both as the explicit four-index sum over bath members and as
    the self-overlap of the effective system wavefunction; the two routes
    must agree to 1e-9 or a consistency error is raised.
    """
    psi = effective_wavefunction(branch, ensemble)
    norm = psi.norm()

    o = bath_overlaps(branch)
    w = ensemble.weights
    gs = _system_gram(branch.g_right)
    ph = np.exp(1j * branch.phis)
    # 1/2 sum_{i j i' j'} <g_j'|g_j> w(i',j') w(j,i) conj(O_{i'j'}) O_{ij}
    #                     e^{i phi_j} e^{-i phi_j'}
    four = 0.5 * np.einsum(
        "ab,ca,bd,ca,db,b,a->",
        gs,
        w,
        w,
        np.conj(o),
        o,
        ph,
        np.conj(ph),
    )
    if abs(four - norm) > 1e-9:
        raise ConsistencyError(
            f"four-index coherence sum {four:.15g} disagrees with effective-"
            f"wavefunction norm {norm:.15g}"
        )
    return norm


@dataclass(frozen=True)
class CoherenceReport:
    """Coherence measure, purity and its block decomposition, diagnostics."""

    m_coh: float
    purity_total: float
    block_ll: float
    block_rr: float
    block_rl_lr: float
    block_cross_other: float
    trace: float
    phase_spread: float
    mean_bath_overlap: float
    mean_system_displacement: float


def _mahalanobis(g: GaussianWavepacket, base: GaussianWavepacket) -> float:
    dq = g.q - base.q
    dp = g.p - base.p
    cq = base.position_covariance()
    cp = base.momentum_covariance()
    return float(
        np.sqrt(dq @ np.linalg.solve(cq, dq) + dp @ np.linalg.solve(cp, dp))
    )


def total_purity(
    branch: EvolvedBranch,
    ensemble: BathEnsemble,
    zero_off_diagonal: bool = False,
) -> CoherenceReport:
    """Tr[rho_red^2] from all four reduced blocks in the packet frame.

    All traces use the full Gram matrix of the (non-orthogonal) system
    packets.  ``zero_off_diagonal`` drops the rl and lr blocks, the fully
    inter-arm-decohered diagnostic limit.
    """
    if ensemble.size != branch.size:
        raise ContractError(
            f"ensemble has {ensemble.size} members, branch has {branch.size}"
        )
    m = branch.size
    w = ensemble.weights
    o = bath_overlaps(branch)
    b0 = _system_gram(branch.G_left)   # <G^0_a|G^0_b>
    br = _system_gram(branch.G_right)  # <G^r_a|G^r_b>
    ph = np.exp(1j * branch.phis)

    frame = [branch.g_left, *branch.g_right]
    s = _system_gram(frame)

    r_ll = np.zeros((m + 1, m + 1), dtype=complex)
    r_ll[0, 0] = 0.5 * np.trace(w @ b0)
    r_rr = np.zeros_like(r_ll)
    r_rr[1:, 1:] = 0.5 * w * np.outer(ph, np.conj(ph)) * br.T
    r_rl = np.zeros_like(r_ll)
    r_rl[1:, 0] = 0.5 * (w * o.T).sum(axis=1) * ph  # sum_j w(i,j) O_{ji} e^{i phi_i}
    r_lr = np.zeros_like(r_ll)
    r_lr[0, 1:] = np.conj(r_rl[1:, 0])

    blocks = (
        (r_ll, r_rr, r_rl, r_lr)
        if not zero_off_diagonal
        else (r_ll, r_rr, np.zeros_like(r_ll), np.zeros_like(r_ll))
    )
    r_total = sum(blocks)

    def pair_trace(x, y):
        return complex(np.trace(x @ s @ y @ s))

    purity = pair_trace(r_total, r_total)
    if abs(purity.imag) > 1e-10:
        raise ConsistencyError(f"purity has imaginary residual {purity.imag:.3g}")
    purity = purity.real
    block_ll = pair_trace(r_ll, r_ll).real
    block_rr = pair_trace(r_rr, r_rr).real
    block_rl_lr = (pair_trace(blocks[2], blocks[3]) + pair_trace(blocks[3], blocks[2])).real
    cross_other = purity - block_ll - block_rr - block_rl_lr
    trace = np.trace(r_total @ s).real

    probs = ensemble.probabilities()
    phase_spread = float(1.0 - abs(probs @ ph))
    mean_bath = float(probs @ np.abs(np.diag(o)))
    mean_disp = float(
        probs @ np.array([_mahalanobis(g, branch.g_right_base) for g in branch.g_right])
    )

    value = m_coh(branch, ensemble)
    if not zero_off_diagonal and abs(block_rl_lr - value) > 1e-10:
        raise ConsistencyError(
            f"rl+lr purity contribution {block_rl_lr:.15g} != m_coh {value:.15g}"
        )
    if not (0.0 < purity <= 1.0 + 1e-8):
        raise ConsistencyError(f"purity {purity:.15g} outside (0, 1]")

    return CoherenceReport(
        m_coh=value,
        purity_total=purity,
        block_ll=block_ll,
        block_rr=block_rr,
        block_rl_lr=block_rl_lr,
        block_cross_other=cross_other,
        trace=trace,
        phase_spread=phase_spread,
        mean_bath_overlap=mean_bath,
        mean_system_displacement=mean_disp,
    )


# -- special-case estimators --------------------------------------------------


def nondynamical_estimate(weights, phases):
    """mu = sum_i |w_i|^2 e^{i phi_i} and M_coh = |mu|^2 / 2 (frozen bath)."""
    weights = np.asarray(weights, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if weights.shape != phases.shape:
        raise ContractError("weights and phases must have equal length")
    if abs(weights.sum() - 1.0) > 1e-8:
        raise DomainError(f"weights must sum to 1, got {weights.sum():.12g}")
    mu = complex(weights @ np.exp(1j * phases))
    return mu, 0.5 * abs(mu) ** 2


def diagonal_mu(weights, phases, diag_overlaps) -> complex:
    """mu ~= sum_i |w_i|^2 e^{i phi_i} O_ii, the single-run average."""
    weights = np.asarray(weights, dtype=float)
    phases = np.asarray(phases, dtype=float)
    diag_overlaps = np.asarray(diag_overlaps, dtype=complex)
    return complex(np.sum(weights * np.exp(1j * phases) * diag_overlaps))


def pure_bath_mu(branch: EvolvedBranch, ensemble: BathEnsemble) -> complex:
    """mu = sum_ij c_i* O_ij e^{i phi_j} c_j, the left/right bath overlap."""
    if ensemble.pure_amplitudes is None:
        raise ContractError("pure_bath_mu requires an ensemble built by pure_state")
    if ensemble.size != branch.size:
        raise ContractError(
            f"ensemble has {ensemble.size} members, branch has {branch.size}"
        )
    c = ensemble.pure_amplitudes
    o = bath_overlaps(branch)
    return complex(np.conj(c) @ (o * np.exp(1j * branch.phis)[None, :]) @ c)


def weighted_mu(branch: EvolvedBranch, ensemble: BathEnsemble) -> complex:
    """mu = sum_ij w(j,i) O_ij e^{i phi_j} for a general Hermitian weight."""
    o = bath_overlaps(branch)
    return complex(
        np.einsum("ji,ij,j->", ensemble.weights, o, np.exp(1j * branch.phis))
    )


def ipr_bound(weights) -> float:
    """sum_i |w_i|^4, the inverse participation ratio bounding 2*M_coh."""
    weights = np.asarray(weights, dtype=float)
    total = np.sum(weights**2)
    if abs(total - 1.0) > 1e-8:
        raise DomainError(f"amplitudes must satisfy sum |w_i|^2 = 1, got {total:.12g}")
    return float(np.sum(weights**4))


@dataclass(frozen=True)
class PhaseDistribution:
    """Weighted histogram of branch phases on [-pi, pi)."""

    bin_centers: np.ndarray
    bin_weights: np.ndarray
    mean_phase_factor: complex    # histogram estimate of <e^{i phi}>
    direct_phase_factor: complex  # sum_i p_i e^{i phi_i}


def phase_distribution(
    branch: EvolvedBranch, ensemble: BathEnsemble, n_bins: int
) -> PhaseDistribution:
    if n_bins < 1:
        raise ContractError("n_bins must be >= 1")
    probs = ensemble.probabilities()
    wrapped = np.mod(branch.phis + np.pi, 2.0 * np.pi) - np.pi
    hist, edges = np.histogram(
        wrapped, bins=n_bins, range=(-np.pi, np.pi), weights=probs
    )
    centers = 0.5 * (edges[:-1] + edges[1:])
    mean_hist = complex(hist @ np.exp(1j * centers))
    direct = complex(probs @ np.exp(1j * branch.phis))
    return PhaseDistribution(
        bin_centers=centers,
        bin_weights=hist,
        mean_phase_factor=mean_hist,
        direct_phase_factor=direct,
    )
