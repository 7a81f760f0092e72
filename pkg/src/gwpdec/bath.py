"""Bath ensembles: Gaussian packets with a Hermitian weight matrix.

rho_bath = sum_ij w(i,j) |G_i0><G_j0| with Tr[rho_bath] = 1.  Packets are
generally non-orthogonal, so the unit-trace normalization always goes
through the Gram matrix of mutual overlaps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError
from .wavecore import GaussianWavepacket, normalized, overlap


def gram_matrix(packets) -> np.ndarray:
    """S[i, j] = <G_i | G_j>."""
    m = len(packets)
    s = np.eye(m, dtype=complex)
    for i in range(m):
        for j in range(i + 1, m):
            s[i, j] = overlap(packets[i], packets[j])
            s[j, i] = np.conj(s[i, j])
        s[i, i] = overlap(packets[i], packets[i])
    return s


def _bath_trace(weights: np.ndarray, s: np.ndarray) -> complex:
    # Tr[rho] = sum_ij w(i,j) <G_j|G_i>
    return complex(np.trace(weights @ s))


@dataclass(frozen=True)
class BathEnsemble:
    """Initial bath packets |G_i0> and Hermitian weight matrix w(i,j)."""

    packets: tuple
    weights: np.ndarray
    pure_amplitudes: np.ndarray | None = None

    def __post_init__(self):
        packets = tuple(self.packets)
        if not packets:
            raise ContractError("ensemble needs at least one packet")
        dim = packets[0].dim
        hbar = packets[0].hbar
        for g in packets:
            if g.dim != dim or g.hbar != hbar:
                raise ContractError("ensemble packets must share dim and hbar")
        w = np.asarray(self.weights, dtype=complex).copy()
        if w.shape != (len(packets), len(packets)):
            raise ContractError(
                f"weight matrix shape {w.shape} does not match {len(packets)} packets"
            )
        if np.max(np.abs(w - w.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(w))):
            raise ContractError("weight matrix must be Hermitian")
        w = 0.5 * (w + w.conj().T)
        w.setflags(write=False)
        object.__setattr__(self, "packets", packets)
        object.__setattr__(self, "weights", w)
        if self.pure_amplitudes is not None:
            c = np.asarray(self.pure_amplitudes, dtype=complex).copy()
            c.setflags(write=False)
            object.__setattr__(self, "pure_amplitudes", c)

    @property
    def size(self) -> int:
        return len(self.packets)

    @property
    def dim(self) -> int:
        return self.packets[0].dim

    @property
    def hbar(self) -> float:
        return self.packets[0].hbar

    def probabilities(self) -> np.ndarray:
        """Real diagonal of w, renormalized; per-member sampling weights."""
        p = np.real(np.diag(self.weights)).copy()
        p[p < 0] = 0.0
        return p / p.sum()

    def gram(self) -> np.ndarray:
        return gram_matrix(self.packets)


def pure_state(packets, amplitudes, phases) -> BathEnsemble:
    """Pure bath sum_i c_i |G_i0> with c_i = w_i exp(i xi_i), w_i >= 0."""
    amplitudes = np.asarray(amplitudes, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if not (len(packets) == amplitudes.shape[0] == phases.shape[0]):
        raise ContractError("packets, amplitudes, phases must have equal length")
    if np.any(amplitudes < 0):
        raise DomainError("pure-state amplitudes must be non-negative")
    if not np.any(amplitudes > 0):
        raise DomainError("at least one amplitude must be positive")
    c = amplitudes * np.exp(1j * phases)
    s = gram_matrix(packets)
    norm = np.real(np.conj(c) @ s @ c)  # <chi|chi>
    c = c / np.sqrt(norm)
    w = np.outer(c, np.conj(c))
    return BathEnsemble(packets=tuple(packets), weights=w, pure_amplitudes=c)


def diagonal_mixture(packets, probabilities) -> BathEnsemble:
    """Statistical mixture of the packets with the given probabilities."""
    probabilities = np.asarray(probabilities, dtype=float)
    if len(packets) != probabilities.shape[0]:
        raise ContractError("packets and probabilities must have equal length")
    if np.any(probabilities < 0):
        raise DomainError("probabilities must be non-negative")
    if not np.any(probabilities > 0):
        raise DomainError("at least one probability must be positive")
    w = np.diag(probabilities).astype(complex)
    s = gram_matrix(packets)
    w = w / np.real(_bath_trace(w, s))
    return BathEnsemble(packets=tuple(packets), weights=w)


def thermal_harmonic(
    omega,
    temperature: float,
    n_samples: int,
    seed: int,
    mass=1.0,
    hbar: float = 1.0,
) -> BathEnsemble:
    """Equal-weight mixture of coherent states with thermal classical centers.

    Centers are drawn from the classical Boltzmann distribution of each
    mode (variance k_B T per quadratic degree of freedom, k_B = 1); the
    widths are the coherent-state widths A = i m omega / 2.  Reproducible
    for a fixed seed.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omega <= 0):
        raise DomainError("mode frequencies must be positive")
    if temperature <= 0:
        raise DomainError(
            "temperature must be positive; use diagonal_mixture with a single "
            "ground-state packet for the T=0 bath"
        )
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    mass = np.broadcast_to(np.asarray(mass, dtype=float), omega.shape)
    rng = np.random.default_rng(seed)
    sigma_q = np.sqrt(temperature / (mass * omega**2))
    sigma_p = np.sqrt(mass * temperature)
    a_mat = np.diag(0.5j * mass * omega)
    packets = []
    for _ in range(n_samples):
        q = rng.normal(0.0, sigma_q)
        p = rng.normal(0.0, sigma_p)
        packets.append(normalized(q, p, a_mat, hbar))
    return diagonal_mixture(packets, np.full(n_samples, 1.0 / n_samples))


@dataclass(frozen=True)
class ValidationReport:
    hermiticity_residual: float
    trace_residual: float
    min_eigenvalue: float

    def ok(self, tol: float = 1e-8) -> bool:
        return (
            self.hermiticity_residual < tol
            and self.trace_residual < tol
            and self.min_eigenvalue > -tol
        )


def validate(ensemble: BathEnsemble) -> ValidationReport:
    """Density-matrix health: Hermiticity, unit trace, positive semidefiniteness.

    Positivity is checked on S^{1/2} w S^{1/2}, whose spectrum matches the
    density operator's in the non-orthogonal packet frame.
    """
    w = ensemble.weights
    s = ensemble.gram()
    herm = float(np.max(np.abs(w - w.conj().T)))
    trace = abs(_bath_trace(w, s) - 1.0)
    evals, vecs = np.linalg.eigh(s)
    evals = np.clip(evals, 0.0, None)
    s_half = (vecs * np.sqrt(evals)) @ vecs.conj().T
    spectrum = np.linalg.eigvalsh(s_half @ w @ s_half)
    return ValidationReport(
        hermiticity_residual=herm,
        trace_residual=float(trace),
        min_eigenvalue=float(spectrum.min()),
    )


def single_packet(packet: GaussianWavepacket) -> BathEnsemble:
    """Convenience M=1 ensemble (e.g. a T=0 single-coherent-state bath)."""
    return diagonal_mixture([packet], [1.0])
