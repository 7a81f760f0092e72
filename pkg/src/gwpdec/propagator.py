"""Thawed-Gaussian propagation and classical stability matrices.

The packet center follows the exact classical trajectory; the width
matrix is driven by the local quadratic expansion of the potential via
the auxiliary linear system (P_Z, Z) with A = (1/2) P_Z Z^{-1}.  The
complex phase accumulates the classical action plus the smooth
(i hbar / 2) Tr ln Z term, whose branch is tracked continuously.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import ContractError, ModelError, PropagationError
from .potentials import PotentialModel
from .wavecore import GaussianWavepacket

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class PropagationState:
    """One integrator sample: center, auxiliary matrices, action, phase data."""

    t: float
    q: np.ndarray
    p: np.ndarray
    PZ: np.ndarray
    Z: np.ndarray
    S: float
    logdetZ: complex
    s0: complex = 0.0


@dataclass(frozen=True)
class StabilityMatrix:
    """Classical monodromy matrix at time t, (dp, dq) block ordering."""

    M: np.ndarray
    t: float


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled propagation history of a single packet."""

    times: np.ndarray
    qs: np.ndarray
    ps: np.ndarray
    PZs: np.ndarray
    Zs: np.ndarray
    Ss: np.ndarray
    logdets: np.ndarray
    hbar: float
    masses: np.ndarray
    s0: complex
    Ms: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.qs.shape[1]

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def state(self, k: int) -> PropagationState:
        return PropagationState(
            t=float(self.times[k]),
            q=self.qs[k],
            p=self.ps[k],
            PZ=self.PZs[k],
            Z=self.Zs[k],
            S=float(self.Ss[k]),
            logdetZ=complex(self.logdets[k]),
            s0=self.s0,
        )

    @property
    def samples(self) -> list:
        return [self.state(k) for k in range(self.n_samples)]

    def packet(self, k: int = -1) -> GaussianWavepacket:
        k = int(np.arange(self.n_samples)[k])
        return assemble(self.state(k), self.hbar)


def symplectic_form(n: int) -> np.ndarray:
    """J in (dp, dq) ordering; satisfies J^2 = -1 and M^T J M = J."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def initial_pz_z(A0: np.ndarray):
    """Auxiliary initial data: Z(0) = 1, P_Z(0) = 2 A(0)."""
    n = A0.shape[0]
    return 2.0 * np.asarray(A0, dtype=complex), np.eye(n, dtype=complex)


def _steps_for(t_final: float, dt: float) -> int:
    if dt <= 0:
        raise ContractError(f"dt must be positive, got {dt}")
    if t_final < dt:
        raise ContractError(f"t_final ({t_final}) must be at least dt ({dt})")
    n = int(round(t_final / dt))
    if abs(n * dt - t_final) > 1e-9 * max(1.0, abs(t_final)):
        raise ContractError(f"dt={dt} does not divide t_final={t_final}")
    return n


def default_dt(model: PotentialModel, masses, t_final: float, resolution: int = 200):
    """1/resolution of the fastest harmonic period, or of t_final."""
    masses = np.asarray(masses, dtype=float)
    periods = []
    for code, par, crd in zip(model.codes, model.params, model.coords):
        if code == 1 and par[0] > 0:  # harmonic term: k = m omega^2
            omega = np.sqrt(par[0] / masses[crd[0]])
            periods.append(2.0 * np.pi / omega)
    base = min(periods) if periods else t_final
    n = max(1, int(np.ceil(t_final / (base / resolution))))
    return t_final / n


def _run_kernel(g0_q, g0_p, pz0, z0, model, masses, t_final, dt, t0=0.0):
    n_steps = _steps_for(t_final, dt)
    status, fail_step, qs, ps, pzs, zs, ss, logdets, ms = K.propagate_tga(
        np.asarray(g0_q, dtype=float),
        np.asarray(g0_p, dtype=float),
        np.asarray(pz0, dtype=complex),
        np.asarray(z0, dtype=complex),
        model.codes,
        model.params,
        model.coords,
        np.asarray(masses, dtype=float),
        float(dt),
        n_steps,
        float(t0),
    )
    if status == K.MODEL_NAN:
        raise ModelError(
            f"potential evaluation returned non-finite values near t={fail_step * dt:.6g}"
        )
    if status == K.SINGULAR:
        raise PropagationError(
            f"propagation failed (singular Z or non-finite state) at t={fail_step * dt:.6g}"
        )
    return qs, ps, pzs, zs, ss, logdets, ms, n_steps


def propagate(
    g0: GaussianWavepacket,
    model: PotentialModel,
    masses,
    t_final: float,
    dt: float,
) -> Trajectory:
    """Propagate a packet from t=0 to t_final in uniform steps of dt."""
    masses = np.asarray(masses, dtype=float)
    if model.dim != g0.dim:
        raise ContractError(f"model dim {model.dim} != packet dim {g0.dim}")
    if masses.shape[0] != g0.dim:
        raise ContractError(f"{masses.shape[0]} masses for a dim-{g0.dim} packet")
    pz0, z0 = initial_pz_z(g0.A)
    qs, ps, pzs, zs, ss, logdets, ms, n_steps = _run_kernel(
        g0.q, g0.p, pz0, z0, model, masses, t_final, dt
    )
    times = np.arange(n_steps + 1) * dt

    # post-hoc health checks on every stored sample
    conds = np.linalg.cond(zs)
    if np.any(~np.isfinite(conds)) or np.any(conds > _COND_LIMIT):
        k = int(np.argmax(~np.isfinite(conds) | (conds > _COND_LIMIT)))
        raise PropagationError(
            f"Z condition number {conds[k]:.3g} exceeds {_COND_LIMIT:.0e} at t={times[k]:.6g}"
        )
    dets = np.linalg.det(zs)
    rel = np.abs(np.exp(logdets) - dets) / np.abs(dets)
    if np.any(rel > 1e-8):
        k = int(np.argmax(rel))
        raise PropagationError(
            f"log-det branch tracking inconsistent at t={times[k]:.6g} (rel {rel[k]:.3g})"
        )

    return Trajectory(
        times=times,
        qs=qs,
        ps=ps,
        PZs=pzs,
        Zs=zs,
        Ss=ss,
        logdets=logdets,
        hbar=g0.hbar,
        masses=masses,
        s0=g0.s,
        Ms=ms,
    )


def stability(traj: Trajectory, model: PotentialModel) -> list[StabilityMatrix]:
    """Monodromy matrices at every trajectory sample, M(0) = identity.

    The matrices are co-integrated with the trajectory by the same RK4
    stepper; for a trajectory built by hand they are recomputed here from
    the trajectory's initial conditions.
    """
    if model.dim != traj.dim:
        raise ContractError(f"model dim {model.dim} != trajectory dim {traj.dim}")
    ms = traj.Ms
    if ms is None:
        pz0, z0 = traj.PZs[0], traj.Zs[0]
        t_final = float(traj.times[-1] - traj.times[0])
        *_, ms, _ = _run_kernel(
            traj.qs[0], traj.ps[0], pz0, z0, model, traj.masses, t_final,
            traj.dt, t0=float(traj.times[0]),
        )
    if ms.shape[0] != traj.n_samples:
        raise ContractError("stability samples misaligned with trajectory")
    return [StabilityMatrix(M=ms[k], t=float(traj.times[k])) for k in range(ms.shape[0])]


def assemble(state: PropagationState, hbar: float) -> GaussianWavepacket:
    """Packet at a sample: A = (PZ Z^{-1})/2, s = s0 + S + (i hbar/2) Tr ln Z."""
    try:
        A = 0.5 * state.PZ @ np.linalg.inv(state.Z)
    except np.linalg.LinAlgError as exc:
        raise PropagationError(f"Z singular at t={state.t:.6g}: {exc}") from exc
    A = 0.5 * (A + A.T)
    s = state.s0 + state.S + 0.5j * hbar * state.logdetZ
    return GaussianWavepacket(q=state.q, p=state.p, A=A, s=s, hbar=hbar)


def classical_trajectory(q0, p0, model: PotentialModel, masses, t_final, dt, t0=0.0):
    """Center trajectory and action only: (times, qs, ps, Ss)."""
    n_steps = _steps_for(t_final, dt)
    status, fail_step, qs, ps, ss = K.propagate_classical(
        np.asarray(q0, dtype=float),
        np.asarray(p0, dtype=float),
        model.codes,
        model.params,
        model.coords,
        np.asarray(masses, dtype=float),
        float(dt),
        n_steps,
        float(t0),
    )
    if status == K.MODEL_NAN:
        raise ModelError(
            f"potential evaluation returned non-finite values near t={fail_step * dt:.6g}"
        )
    if status == K.SINGULAR:
        raise PropagationError(f"non-finite state at t={fail_step * dt:.6g}")
    return t0 + np.arange(n_steps + 1) * dt, qs, ps, ss
