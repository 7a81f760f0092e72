"""Potential models for system, bath, and coupling terms.

A model is a sum of primitive terms, each acting on one or two coordinates
of the model's space.  The term table (integer codes + parameter rows +
coordinate indices) is shared verbatim with the compiled propagation
kernels, so a model built here is directly consumable by both the numpy
and the numba backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError

# term codes; params columns are (a, b, c) with meaning per code
T_FREE = 0      # V = 0
T_HARMONIC = 1  # V = a/2 * (x - b)^2           a = m * omega^2
T_QUARTIC = 2   # V = a * (x - b)^4
T_GAUSS = 3     # V = a * exp(-(x - b)^2 / (2 c^2))
T_LINEAR = 4    # V = a * x
T_BILINEAR = 5  # V = a * x * y
T_GAUSSWIN = 6  # V = a * exp(-(x - b)^2 / (2 c^2)) * y

_NPAR = 3


@dataclass(frozen=True)
class PotentialModel:
    """Sum of primitive potential terms on a ``dim``-dimensional space."""

    dim: int
    codes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    params: np.ndarray = field(default_factory=lambda: np.zeros((0, _NPAR)))
    coords: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=np.int64))

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64).reshape(-1).copy()
        params = np.asarray(self.params, dtype=float).reshape(-1, _NPAR).copy()
        coords = np.asarray(self.coords, dtype=np.int64).reshape(-1, 2).copy()
        if not (len(codes) == params.shape[0] == coords.shape[0]):
            raise ContractError("term table rows are inconsistent")
        if coords.size and coords.max() >= self.dim:
            raise ContractError(
                f"term coordinate index {coords.max()} out of range for dim {self.dim}"
            )
        for arr in (codes, params, coords):
            arr.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "coords", coords)

    # -- batched reference evaluators -------------------------------------

    def value(self, q, t: float = 0.0):
        """Potential at one point (1d input) or a batch ((n, dim) input)."""
        Q, single = self._coerce(q)
        v = np.zeros(Q.shape[0])
        for code, par, crd in zip(self.codes, self.params, self.coords):
            a, b, c = par
            if code == T_FREE:
                continue
            x = Q[:, crd[0]]
            if code == T_HARMONIC:
                v += 0.5 * a * (x - b) ** 2
            elif code == T_QUARTIC:
                v += a * (x - b) ** 4
            elif code == T_GAUSS:
                v += a * np.exp(-((x - b) ** 2) / (2.0 * c * c))
            elif code == T_LINEAR:
                v += a * x
            elif code == T_BILINEAR:
                v += a * x * Q[:, crd[1]]
            elif code == T_GAUSSWIN:
                v += a * np.exp(-((x - b) ** 2) / (2.0 * c * c)) * Q[:, crd[1]]
            else:
                raise ConfigError(f"unknown term code {code}")
        return float(v[0]) if single else v

    def gradient(self, q, t: float = 0.0):
        Q, single = self._coerce(q)
        g = np.zeros((Q.shape[0], self.dim))
        for code, par, crd in zip(self.codes, self.params, self.coords):
            a, b, c = par
            if code == T_FREE:
                continue
            i = crd[0]
            x = Q[:, i]
            if code == T_HARMONIC:
                g[:, i] += a * (x - b)
            elif code == T_QUARTIC:
                g[:, i] += 4.0 * a * (x - b) ** 3
            elif code == T_GAUSS:
                w2 = c * c
                g[:, i] += -a * (x - b) / w2 * np.exp(-((x - b) ** 2) / (2.0 * w2))
            elif code == T_LINEAR:
                g[:, i] += a
            elif code == T_BILINEAR:
                j = crd[1]
                g[:, i] += a * Q[:, j]
                g[:, j] += a * x
            elif code == T_GAUSSWIN:
                j = crd[1]
                w2 = c * c
                env = np.exp(-((x - b) ** 2) / (2.0 * w2))
                g[:, i] += -a * (x - b) / w2 * env * Q[:, j]
                g[:, j] += a * env
        return g[0] if single else g

    def hessian(self, q, t: float = 0.0):
        Q, single = self._coerce(q)
        h = np.zeros((Q.shape[0], self.dim, self.dim))
        for code, par, crd in zip(self.codes, self.params, self.coords):
            a, b, c = par
            i = crd[0]
            if code in (T_FREE, T_LINEAR):
                continue
            x = Q[:, i]
            if code == T_HARMONIC:
                h[:, i, i] += a
            elif code == T_QUARTIC:
                h[:, i, i] += 12.0 * a * (x - b) ** 2
            elif code == T_GAUSS:
                w2 = c * c
                env = np.exp(-((x - b) ** 2) / (2.0 * w2))
                h[:, i, i] += a * env * ((x - b) ** 2 / w2 - 1.0) / w2
            elif code == T_BILINEAR:
                j = crd[1]
                h[:, i, j] += a
                h[:, j, i] += a
            elif code == T_GAUSSWIN:
                j = crd[1]
                w2 = c * c
                env = np.exp(-((x - b) ** 2) / (2.0 * w2))
                h[:, i, i] += a * env * ((x - b) ** 2 / w2 - 1.0) / w2 * Q[:, j]
                d_env = -a * (x - b) / w2 * env
                h[:, i, j] += d_env
                h[:, j, i] += d_env
        return h[0] if single else h

    def _coerce(self, q):
        Q = np.asarray(q, dtype=float)
        single = Q.ndim == 1
        Q = np.atleast_2d(Q)
        if Q.shape[1] != self.dim:
            raise ContractError(
                f"coordinates have dimension {Q.shape[1]}, model has {self.dim}"
            )
        return Q, single

    # -- composition -------------------------------------------------------

    def __add__(self, other: "PotentialModel") -> "PotentialModel":
        if self.dim != other.dim:
            raise ContractError(f"cannot add models of dim {self.dim} and {other.dim}")
        return PotentialModel(
            dim=self.dim,
            codes=np.concatenate([self.codes, other.codes]),
            params=np.concatenate([self.params, other.params]),
            coords=np.concatenate([self.coords, other.coords]),
        )

    def scaled(self, factor: float) -> "PotentialModel":
        """Model with every term's linear coefficient multiplied by ``factor``."""
        params = self.params.copy()
        params[:, 0] *= factor
        return PotentialModel(self.dim, self.codes, params, self.coords)

    def embedded(self, dim: int, coord_map) -> "PotentialModel":
        """Same terms acting on selected coordinates of a ``dim``-space."""
        coord_map = np.asarray(coord_map, dtype=np.int64)
        if coord_map.shape[0] != self.dim:
            raise ContractError("coord_map must list one target index per coordinate")
        if coord_map.size and coord_map.max() >= dim:
            raise ContractError("coord_map index out of range")
        coords = self.coords.copy()
        used = coords >= 0
        coords[used] = coord_map[coords[used]]
        return PotentialModel(dim, self.codes, self.params, coords)


def _term(dim, code, params, coords) -> PotentialModel:
    par = np.zeros((1, _NPAR))
    par[0, : len(params)] = params
    crd = np.full((1, 2), -1, dtype=np.int64)
    crd[0, : len(coords)] = coords
    return PotentialModel(dim, np.array([code], dtype=np.int64), par, crd)


_REGISTRY = {
    "free": ((), ()),
    "harmonic": (("omega",), (("mass", 1.0), ("center", 0.0))),
    "quartic_oscillator": (("omega", "quartic"), (("mass", 1.0), ("center", 0.0))),
    "gaussian_bump": (("height", "width"), (("center", 0.0),)),
    "linear": (("slope",), ()),
    "bilinear": (("c",), ()),
    "gaussian_window": (("c", "width"), (("center", 0.0),)),
}


def builtin_model(name: str, params: dict | None = None) -> PotentialModel:
    """Construct a named primitive model.

    One-coordinate models (``free``, ``harmonic``, ``quartic_oscillator``,
    ``gaussian_bump``, ``linear``) have dim 1; the couplings ``bilinear``
    (c*x*y) and ``gaussian_window`` (c*exp(-(x-x0)^2/2w^2)*y) have dim 2.
    Compose and place models with ``+``, ``scaled`` and ``embedded``.
    """
    params = dict(params or {})
    if name not in _REGISTRY:
        raise ConfigError(
            f"unknown potential model '{name}'; valid names: {sorted(_REGISTRY)}"
        )
    required, optional = _REGISTRY[name]
    for key in required:
        if key not in params:
            raise ConfigError(
                f"model '{name}' is missing parameter '{key}' "
                f"(required: {list(required)}, optional: {[k for k, _ in optional]})"
            )
    known = set(required) | {k for k, _ in optional}
    for key in params:
        if key not in known:
            raise ConfigError(
                f"model '{name}' got unknown parameter '{key}'; accepts {sorted(known)}"
            )
    full = {**dict(optional), **params}

    if name == "free":
        return _term(1, T_FREE, (), ())
    if name == "harmonic":
        k = full["mass"] * full["omega"] ** 2
        return _term(1, T_HARMONIC, (k, full["center"]), (0,))
    if name == "quartic_oscillator":
        k = full["mass"] * full["omega"] ** 2
        return _term(1, T_HARMONIC, (k, full["center"]), (0,)) + _term(
            1, T_QUARTIC, (full["quartic"], full["center"]), (0,)
        )
    if name == "gaussian_bump":
        if full["width"] <= 0:
            raise ConfigError("gaussian_bump width must be positive")
        return _term(1, T_GAUSS, (full["height"], full["center"], full["width"]), (0,))
    if name == "linear":
        return _term(1, T_LINEAR, (full["slope"],), (0,))
    if name == "bilinear":
        return _term(2, T_BILINEAR, (full["c"],), (0, 1))
    if name == "gaussian_window":
        if full["width"] <= 0:
            raise ConfigError("gaussian_window width must be positive")
        return _term(
            2, T_GAUSSWIN, (full["c"], full["center"], full["width"]), (0, 1)
        )
    raise ConfigError(f"unhandled model '{name}'")  # pragma: no cover


@dataclass(frozen=True)
class JointHamiltonian:
    """H = H_system + H_bath + lam * V_coupling on the joint space."""

    system: PotentialModel
    bath: PotentialModel
    coupling: PotentialModel
    lam: float
    masses: np.ndarray

    def __post_init__(self):
        masses = np.asarray(self.masses, dtype=float).reshape(-1).copy()
        n = self.system.dim + self.bath.dim
        if self.coupling.dim != n:
            raise ContractError(
                f"coupling acts on dim {self.coupling.dim}, joint space has {n}"
            )
        if masses.shape[0] != n:
            raise ContractError(f"{masses.shape[0]} masses for a dim-{n} joint space")
        if np.any(masses <= 0):
            raise ContractError("masses must be positive")
        if self.lam < 0:
            raise ContractError("coupling strength lambda must be >= 0")
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)

    @property
    def dim(self) -> int:
        return self.system.dim + self.bath.dim

    def h0(self) -> PotentialModel:
        """Uncoupled joint potential (system plus bath, no interaction)."""
        ns = self.system.dim
        sys_emb = self.system.embedded(self.dim, np.arange(ns))
        bath_emb = self.bath.embedded(self.dim, ns + np.arange(self.bath.dim))
        return sys_emb + bath_emb

    def full(self) -> PotentialModel:
        """Joint potential including lam * coupling."""
        return self.h0() + self.coupling.scaled(self.lam)
