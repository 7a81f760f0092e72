"""Gaussian wavepackets and their analytic overlap algebra.

A packet is parametrized as

.. math::
    \\psi(q) = \\exp\\{(i/\\hbar)[(q-q_c)^T A (q-q_c) + p_c\\cdot(q-q_c) + s]\\}

with complex symmetric width matrix ``A`` (``Im A`` positive definite) and
complex phase/normalization constant ``s``.  There is no explicit prefactor;
unit norm is encoded in ``Im(s)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError

_COND_LIMIT = 1e12


def _as_vector(x, dim=None, name="vector"):
    v = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    if v.ndim != 1:
        raise ContractError(f"{name} must be one-dimensional, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ContractError(f"{name} has length {v.shape[0]}, expected {dim}")
    return v


def _as_width_matrix(A):
    M = np.atleast_2d(np.asarray(A, dtype=complex)).copy()
    if M.shape[0] != M.shape[1]:
        raise ContractError(f"width matrix must be square, got shape {M.shape}")
    scale = np.max(np.abs(M))
    if scale == 0.0:
        raise DomainError("width matrix is zero")
    if np.max(np.abs(M - M.T)) > 1e-12 * scale:
        raise ContractError("width matrix A is not symmetric")
    # store the exactly symmetric representative
    M = 0.5 * (M + M.T)
    im_eigs = np.linalg.eigvalsh(M.imag)
    if im_eigs[0] <= 0.0:
        raise DomainError(
            f"Im(A) must be positive definite; smallest eigenvalue {im_eigs[0]:.6g}"
        )
    if im_eigs[-1] / im_eigs[0] > _COND_LIMIT:
        raise DomainError(
            f"Im(A) condition number {im_eigs[-1] / im_eigs[0]:.3g} exceeds {_COND_LIMIT:.0e}"
        )
    return M


@dataclass(frozen=True)
class GaussianWavepacket:
    """Immutable multidimensional Gaussian wavepacket."""

    q: np.ndarray
    p: np.ndarray
    A: np.ndarray
    s: complex
    hbar: float

    def __post_init__(self):
        A = _as_width_matrix(self.A)
        q = _as_vector(self.q, A.shape[0], "q")
        p = _as_vector(self.p, A.shape[0], "p")
        if not self.hbar > 0:
            raise DomainError(f"hbar must be positive, got {self.hbar}")
        for name, arr in (("q", q), ("p", p), ("A", A)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "s", complex(self.s))

    @property
    def dim(self) -> int:
        return self.q.shape[0]

    def position_covariance(self) -> np.ndarray:
        """Covariance of |psi|^2 in position: (hbar/4) Im(A)^{-1}."""
        return 0.25 * self.hbar * np.linalg.inv(self.A.imag)

    def momentum_covariance(self) -> np.ndarray:
        """Covariance of |psi|^2 in momentum: hbar (ImA + ReA ImA^{-1} ReA)."""
        im_inv = np.linalg.inv(self.A.imag)
        return self.hbar * (self.A.imag + self.A.real @ im_inv @ self.A.real)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate psi at an (npts, dim) array of coordinates."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ContractError(
                f"points have dimension {pts.shape[1]}, packet has {self.dim}"
            )
        d = pts - self.q[None, :]
        quad = np.einsum("ni,ij,nj->n", d, self.A, d)
        lin = d @ self.p
        return np.exp(1j / self.hbar * (quad + lin + self.s))


def normalized(q, p, A, hbar: float = 1.0) -> GaussianWavepacket:
    """Build a unit-norm packet; Re(s) = 0 and Im(s) fixes normalization.

    The norm integral of the prefactor-free form gives
    ``Im(s) = (hbar/4) [N ln(pi hbar / 2) - ln det Im(A)]``.
    """
    A = _as_width_matrix(A)
    n = A.shape[0]
    if not hbar > 0:
        raise DomainError(f"hbar must be positive, got {hbar}")
    sign, logdet = np.linalg.slogdet(A.imag)
    im_s = 0.25 * hbar * (n * np.log(np.pi * hbar / 2.0) - logdet)
    return GaussianWavepacket(q=q, p=p, A=A, s=1j * im_s, hbar=hbar)


def _check_pair(g1: GaussianWavepacket, g2: GaussianWavepacket):
    if g1.dim != g2.dim:
        raise ContractError(f"dimension mismatch: {g1.dim} vs {g2.dim}")
    if g1.hbar != g2.hbar:
        raise ContractError(f"hbar mismatch: {g1.hbar} vs {g2.hbar}")


def overlap(g1: GaussianWavepacket, g2: GaussianWavepacket) -> complex:
    """Analytic <g1|g2>, the N-dimensional complex Gaussian integral.

    The square root of the exponent-matrix determinant is taken on the
    branch continuous with the self-overlap case: all eigenvalues of
    ``-i(A2 - conj(A1))/hbar`` lie in the right half-plane, so summing
    principal logs of the eigenvalues never crosses a branch cut.
    """
    _check_pair(g1, g2)
    hbar = g1.hbar
    n = g1.dim
    A1c = np.conj(g1.A)
    C = g2.A - A1c
    # work relative to the midpoint: the integral is translation invariant,
    # and centered coordinates avoid cancellation for far-out packets
    r = 0.5 * (g1.q + g2.q)
    q1 = g1.q - r
    q2 = g2.q - r
    u = (g2.p - g1.p) - 2.0 * (g2.A @ q2 - A1c @ q1)
    c0 = (
        q2 @ g2.A @ q2
        - q1 @ A1c @ q1
        + g1.p @ q1
        - g2.p @ q2
        + g2.s
        - np.conj(g1.s)
    )
    B = -1j * C / hbar
    logdet_b = np.sum(np.log(np.linalg.eigvals(B)))
    x = np.linalg.solve(C, u)
    exponent = (
        0.5 * n * np.log(np.pi) - 0.5 * logdet_b + 1j / hbar * c0 - 0.25j / hbar * (u @ x)
    )
    return complex(np.exp(exponent))


def displace(
    g: GaussianWavepacket, dq, dp, dphase: float = 0.0
) -> GaussianWavepacket:
    """Shift the packet center by (dq, dp) and multiply by exp(i*dphase).

    The width matrix is left untouched: a first-order trajectory
    perturbation moves the center and phase only.
    """
    dq = _as_vector(dq, g.dim, "dq")
    dp = _as_vector(dp, g.dim, "dp")
    return GaussianWavepacket(
        q=g.q + dq, p=g.p + dp, A=g.A, s=g.s + g.hbar * float(dphase), hbar=g.hbar
    )


def product_packet(
    ga: GaussianWavepacket, gb: GaussianWavepacket
) -> GaussianWavepacket:
    """Tensor product of two packets as one packet on the joint space."""
    if ga.hbar != gb.hbar:
        raise ContractError(f"hbar mismatch: {ga.hbar} vs {gb.hbar}")
    na, nb = ga.dim, gb.dim
    A = np.zeros((na + nb, na + nb), dtype=complex)
    A[:na, :na] = ga.A
    A[na:, na:] = gb.A
    return GaussianWavepacket(
        q=np.concatenate([ga.q, gb.q]),
        p=np.concatenate([ga.p, gb.p]),
        A=A,
        s=ga.s + gb.s,
        hbar=ga.hbar,
    )
