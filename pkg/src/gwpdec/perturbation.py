"""First-order classical perturbation theory along an unperturbed trajectory.

A weak extra potential lam*V1 shows up in two ways: a forced linear
deviation of the guiding trajectory,

.. math::
    \\delta z(t) = M(t) \\int_0^t M(t')^{-1} (f(t'), 0)^T dt',
    \\quad f = -\\nabla V_1(q_0(t)),

and a phase shift  phi = lam p_t . dq_t / hbar - (lam/hbar) int V1(q_0) dt.
Deviations returned here already include the factor lam.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, PropagationError
from .potentials import PotentialModel
from .propagator import StabilityMatrix, Trajectory, symplectic_form
from .wavecore import GaussianWavepacket, displace


@dataclass(frozen=True)
class Deviation:
    """Trajectory deviation at time t; dq, dp carry the coupling factor lam."""

    t: float
    dq: np.ndarray
    dp: np.ndarray


@dataclass(frozen=True)
class PerturbedEvolution:
    """Deviations plus accumulated phase for one perturbed trajectory."""

    base: Trajectory
    deviations: list[Deviation]
    phase: float
    action_integral: float  # int V1(q_0(t')) dt', without the factor lam
    boundary_term: float    # p_t . dq_t at the final time (dq includes lam)
    lam: float
    phases: np.ndarray = field(repr=False, default=None)  # per-sample history


def _stack_ms(stabs: list[StabilityMatrix], n_samples: int) -> np.ndarray:
    if len(stabs) != n_samples:
        raise ContractError(
            f"{len(stabs)} stability matrices for {n_samples} trajectory samples"
        )
    return np.stack([s.M for s in stabs])


def forced_deviation(
    base: Trajectory,
    stabs: list[StabilityMatrix],
    coupling: PotentialModel,
    lam: float,
) -> list[Deviation]:
    """Deviations (dp, dq) at every sample of the base trajectory.

    M(t')^{-1} comes from symplecticity, M^{-1} = -J M^T J; the forcing
    integral is accumulated with the trapezoidal rule on the sample grid.
    The result is exactly linear in lam by construction.
    """
    if lam < 0:
        raise ContractError("lam must be >= 0")
    if coupling.dim != base.dim:
        raise ContractError(
            f"coupling dim {coupling.dim} != trajectory dim {base.dim}"
        )
    n = base.dim
    ms = _stack_ms(stabs, base.n_samples)
    if not np.all(np.isfinite(ms)):
        raise PropagationError("non-finite stability matrix")

    forces = -coupling.gradient(base.qs)  # (k, n)
    vec = np.concatenate([forces, np.zeros_like(forces)], axis=1)  # (f, 0)
    J = symplectic_form(n)
    minv = -np.einsum("ij,kmj,mn->kin", J, ms, J)  # -J M^T J per sample
    integrand = np.einsum("kij,kj->ki", minv, vec)

    dt = base.dt
    cum = np.zeros_like(integrand)
    cum[1:] = np.cumsum(0.5 * dt * (integrand[1:] + integrand[:-1]), axis=0)
    delta = lam * np.einsum("kij,kj->ki", ms, cum)

    return [
        Deviation(t=float(base.times[k]), dp=delta[k, :n], dq=delta[k, n:])
        for k in range(base.n_samples)
    ]


def perturbed_phase(
    base: Trajectory,
    devs: list[Deviation],
    coupling: PotentialModel,
    lam: float,
) -> PerturbedEvolution:
    """Accumulated first-order phase; boundary and action parts kept separate."""
    if len(devs) != base.n_samples:
        raise ContractError(
            f"{len(devs)} deviations for {base.n_samples} trajectory samples"
        )
    if coupling.dim != base.dim:
        raise ContractError(
            f"coupling dim {coupling.dim} != trajectory dim {base.dim}"
        )
    v1 = coupling.value(base.qs)
    dt = base.dt
    action = np.zeros(base.n_samples)
    action[1:] = np.cumsum(0.5 * dt * (v1[1:] + v1[:-1]))

    dq = np.stack([d.dq for d in devs])
    boundary = np.einsum("ki,ki->k", base.ps, dq)
    phases = (boundary - lam * action) / base.hbar

    return PerturbedEvolution(
        base=base,
        deviations=devs,
        phase=float(phases[-1]),
        action_integral=float(action[-1]),
        boundary_term=float(boundary[-1]),
        lam=lam,
        phases=phases,
    )


def apply(base_packet: GaussianWavepacket, evo: PerturbedEvolution) -> GaussianWavepacket:
    """Displace the unperturbed packet by the final deviation and add the phase."""
    last = evo.deviations[-1]
    if base_packet.dim != last.dq.shape[0]:
        raise ContractError(
            f"packet dim {base_packet.dim} != deviation dim {last.dq.shape[0]}"
        )
    return displace(base_packet, last.dq, last.dp, evo.phase)
