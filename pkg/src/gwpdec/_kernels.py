"""Hot numerical kernels: RK4 thawed-Gaussian and classical propagation.

Every function here is written in the numba-compatible numpy subset and
compiled with ``@njit`` when the numba backend is active.  Selecting
``GWPDEC_BACKEND=numpy`` (or running without numba installed) leaves the
exact same functions uncompiled, so both backends share one source of
truth.  ``benchmarks/compare_backends.py`` reloads this module under each
setting to time them against each other.
"""

import cmath
import math
import os

import numpy as np

_BACKEND_ENV = os.environ.get("GWPDEC_BACKEND", "auto").strip().lower()
if _BACKEND_ENV not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"GWPDEC_BACKEND must be 'auto', 'numba' or 'numpy', got '{_BACKEND_ENV}'"
    )

if _BACKEND_ENV == "numpy":
    JIT_ENABLED = False
elif _BACKEND_ENV == "numba":
    import numba  # noqa: F401  (hard requirement when forced)

    JIT_ENABLED = True
else:
    try:
        import numba  # noqa: F401

        JIT_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        JIT_ENABLED = False

if JIT_ENABLED:
    from numba import njit as _njit

    def _jit(f):
        return _njit(cache=True)(f)

else:

    def _jit(f):
        return f


def backend_name() -> str:
    return "numba" if JIT_ENABLED else "numpy"


# status codes returned by the propagation kernels
OK = 0
MODEL_NAN = 1
SINGULAR = 2


@_jit
def term_value(codes, params, coords, q, t):
    v = 0.0
    for k in range(codes.shape[0]):
        code = codes[k]
        if code == 0:
            continue
        a = params[k, 0]
        b = params[k, 1]
        c = params[k, 2]
        x = q[coords[k, 0]]
        if code == 1:
            v += 0.5 * a * (x - b) ** 2
        elif code == 2:
            v += a * (x - b) ** 4
        elif code == 3:
            v += a * math.exp(-((x - b) ** 2) / (2.0 * c * c))
        elif code == 4:
            v += a * x
        elif code == 5:
            v += a * x * q[coords[k, 1]]
        elif code == 6:
            v += a * math.exp(-((x - b) ** 2) / (2.0 * c * c)) * q[coords[k, 1]]
    return v


@_jit
def term_gradient(codes, params, coords, q, t, out):
    out[:] = 0.0
    for k in range(codes.shape[0]):
        code = codes[k]
        if code == 0:
            continue
        a = params[k, 0]
        b = params[k, 1]
        c = params[k, 2]
        i = coords[k, 0]
        x = q[i]
        if code == 1:
            out[i] += a * (x - b)
        elif code == 2:
            out[i] += 4.0 * a * (x - b) ** 3
        elif code == 3:
            w2 = c * c
            out[i] += -a * (x - b) / w2 * math.exp(-((x - b) ** 2) / (2.0 * w2))
        elif code == 4:
            out[i] += a
        elif code == 5:
            j = coords[k, 1]
            out[i] += a * q[j]
            out[j] += a * x
        elif code == 6:
            j = coords[k, 1]
            w2 = c * c
            env = math.exp(-((x - b) ** 2) / (2.0 * w2))
            out[i] += -a * (x - b) / w2 * env * q[j]
            out[j] += a * env


@_jit
def term_hessian(codes, params, coords, q, t, out):
    out[:] = 0.0
    for k in range(codes.shape[0]):
        code = codes[k]
        if code == 0 or code == 4:
            continue
        a = params[k, 0]
        b = params[k, 1]
        c = params[k, 2]
        i = coords[k, 0]
        x = q[i]
        if code == 1:
            out[i, i] += a
        elif code == 2:
            out[i, i] += 12.0 * a * (x - b) ** 2
        elif code == 3:
            w2 = c * c
            env = math.exp(-((x - b) ** 2) / (2.0 * w2))
            out[i, i] += a * env * ((x - b) ** 2 / w2 - 1.0) / w2
        elif code == 5:
            j = coords[k, 1]
            out[i, j] += a
            out[j, i] += a
        elif code == 6:
            j = coords[k, 1]
            w2 = c * c
            env = math.exp(-((x - b) ** 2) / (2.0 * w2))
            out[i, i] += a * env * ((x - b) ** 2 / w2 - 1.0) / w2 * q[j]
            d_env = -a * (x - b) / w2 * env
            out[i, j] += d_env
            out[j, i] += d_env


@_jit
def _potential_ok(v, g, hess):
    if not math.isfinite(v):
        return False
    for i in range(g.shape[0]):
        if not math.isfinite(g[i]):
            return False
        for j in range(g.shape[0]):
            if not math.isfinite(hess[i, j]):
                return False
    return True


@_jit
def _tga_deriv(q, p, pz, z, mm, codes, params, coords, minv, t):
    n = q.shape[0]
    g = np.zeros(n)
    term_gradient(codes, params, coords, q, t, g)
    hess = np.zeros((n, n))
    term_hessian(codes, params, coords, q, t, hess)
    v = term_value(codes, params, coords, q, t)
    ok = _potential_ok(v, g, hess)

    dq = p * minv
    dp = -g
    dz = minv.reshape(n, 1) * pz
    dpz = -(hess.astype(np.complex128) @ z)
    ds = 0.5 * np.sum(p * p * minv) - v
    dmm = np.empty((2 * n, 2 * n))
    dmm[:n] = -(hess @ mm[n:])
    dmm[n:] = minv.reshape(n, 1) * mm[:n]
    return ok, dq, dp, dpz, dz, ds, dmm


@_jit
def propagate_tga(q0, p0, pz0, z0, codes, params, coords, masses, dt, n_steps, t0):
    """RK4 on (q, p, P_Z, Z, S, M) with per-step log-det-Z branch tracking.

    M is the classical stability matrix in (dp, dq) block order, started at
    the identity and driven by the same local Hessian as (P_Z, Z).
    Returns (status, fail_step, qs, ps, pzs, zs, ss, logdets, ms).
    """
    n = q0.shape[0]
    minv = 1.0 / masses
    qs = np.zeros((n_steps + 1, n))
    ps = np.zeros((n_steps + 1, n))
    pzs = np.zeros((n_steps + 1, n, n), dtype=np.complex128)
    zs = np.zeros((n_steps + 1, n, n), dtype=np.complex128)
    ss = np.zeros(n_steps + 1)
    logdets = np.zeros(n_steps + 1, dtype=np.complex128)
    ms = np.zeros((n_steps + 1, 2 * n, 2 * n))

    q = q0.copy()
    p = p0.copy()
    pz = pz0.copy()
    z = z0.copy()
    s = 0.0
    mm = np.eye(2 * n)
    logdet = cmath.log(np.linalg.det(z0))

    qs[0] = q
    ps[0] = p
    pzs[0] = pz
    zs[0] = z
    logdets[0] = logdet
    ms[0] = mm

    status = OK
    fail_step = -1
    half = 0.5 * dt
    sixth = dt / 6.0

    for step in range(n_steps):
        t = t0 + step * dt
        ok1, k1q, k1p, k1pz, k1z, k1s, k1m = _tga_deriv(
            q, p, pz, z, mm, codes, params, coords, minv, t
        )
        ok2, k2q, k2p, k2pz, k2z, k2s, k2m = _tga_deriv(
            q + half * k1q,
            p + half * k1p,
            pz + half * k1pz,
            z + half * k1z,
            mm + half * k1m,
            codes,
            params,
            coords,
            minv,
            t + half,
        )
        ok3, k3q, k3p, k3pz, k3z, k3s, k3m = _tga_deriv(
            q + half * k2q,
            p + half * k2p,
            pz + half * k2pz,
            z + half * k2z,
            mm + half * k2m,
            codes,
            params,
            coords,
            minv,
            t + half,
        )
        ok4, k4q, k4p, k4pz, k4z, k4s, k4m = _tga_deriv(
            q + dt * k3q,
            p + dt * k3p,
            pz + dt * k3pz,
            z + dt * k3z,
            mm + dt * k3m,
            codes,
            params,
            coords,
            minv,
            t + dt,
        )
        if not (ok1 and ok2 and ok3 and ok4):
            status = MODEL_NAN
            fail_step = step + 1
            break
        z_prev = z.copy()
        q = q + sixth * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        p = p + sixth * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        pz = pz + sixth * (k1pz + 2.0 * k2pz + 2.0 * k3pz + k4pz)
        z = z + sixth * (k1z + 2.0 * k2z + 2.0 * k3z + k4z)
        s = s + sixth * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        mm = mm + sixth * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)

        ok = math.isfinite(s)
        for i in range(n):
            if not (math.isfinite(q[i]) and math.isfinite(p[i])):
                ok = False
        if not ok:
            status = SINGULAR
            fail_step = step + 1
            break

        # principal log of the per-step determinant ratio; the ratio stays
        # near 1 at stable dt, so no branch jumps accumulate
        ratio = np.linalg.det(z @ np.linalg.inv(z_prev))
        if not (math.isfinite(ratio.real) and math.isfinite(ratio.imag)) or abs(
            ratio
        ) == 0.0:
            status = SINGULAR
            fail_step = step + 1
            break
        logdet = logdet + cmath.log(ratio)

        qs[step + 1] = q
        ps[step + 1] = p
        pzs[step + 1] = pz
        zs[step + 1] = z
        ss[step + 1] = s
        logdets[step + 1] = logdet
        ms[step + 1] = mm

    return status, fail_step, qs, ps, pzs, zs, ss, logdets, ms


@_jit
def _classical_deriv(q, p, codes, params, coords, minv, t):
    n = q.shape[0]
    g = np.zeros(n)
    term_gradient(codes, params, coords, q, t, g)
    v = term_value(codes, params, coords, q, t)
    ok = math.isfinite(v)
    for i in range(n):
        if not math.isfinite(g[i]):
            ok = False
    dq = p * minv
    dp = -g
    ds = 0.5 * np.sum(p * p * minv) - v
    return ok, dq, dp, ds


@_jit
def propagate_classical(q0, p0, codes, params, coords, masses, dt, n_steps, t0):
    """RK4 for the center trajectory and classical action only."""
    n = q0.shape[0]
    minv = 1.0 / masses
    qs = np.zeros((n_steps + 1, n))
    ps = np.zeros((n_steps + 1, n))
    ss = np.zeros(n_steps + 1)
    q = q0.copy()
    p = p0.copy()
    s = 0.0
    qs[0] = q
    ps[0] = p

    status = OK
    fail_step = -1
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(n_steps):
        t = t0 + step * dt
        ok1, k1q, k1p, k1s = _classical_deriv(q, p, codes, params, coords, minv, t)
        ok2, k2q, k2p, k2s = _classical_deriv(
            q + half * k1q, p + half * k1p, codes, params, coords, minv, t + half
        )
        ok3, k3q, k3p, k3s = _classical_deriv(
            q + half * k2q, p + half * k2p, codes, params, coords, minv, t + half
        )
        ok4, k4q, k4p, k4s = _classical_deriv(
            q + dt * k3q, p + dt * k3p, codes, params, coords, minv, t + dt
        )
        if not (ok1 and ok2 and ok3 and ok4):
            status = MODEL_NAN
            fail_step = step + 1
            break
        q = q + sixth * (k1q + 2.0 * k2q + 2.0 * k3q + k4q)
        p = p + sixth * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        s = s + sixth * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)

        ok = math.isfinite(s)
        for i in range(n):
            if not (math.isfinite(q[i]) and math.isfinite(p[i])):
                ok = False
        if not ok:
            status = SINGULAR
            fail_step = step + 1
            break
        qs[step + 1] = q
        ps[step + 1] = p
        ss[step + 1] = s
    return status, fail_step, qs, ps, ss
