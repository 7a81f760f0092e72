#!/usr/bin/env python3
"""Time the compiled (numba) propagation kernels against the numpy twins.

The kernels live in one module and are compiled or left plain depending on
GWPDEC_BACKEND, so each backend is obtained by reloading the module under
the corresponding setting.  Compilation happens once up front and is
excluded from the timings.

    python benchmarks/compare_backends.py [--steps 4000] [--repeats 5]
"""

import argparse
import importlib
import os
import time

import numpy as np


def load_kernels(backend):
    os.environ["GWPDEC_BACKEND"] = backend
    import gwpdec._kernels as K

    return importlib.reload(K)


def workloads():
    import gwpdec as gd

    harm = gd.builtin_model("harmonic", {"omega": 1.0})
    joint = (
        gd.builtin_model("harmonic", {"omega": 1.0}).embedded(2, [0])
        + gd.builtin_model("harmonic", {"omega": 1.3}).embedded(2, [1])
        + gd.builtin_model("bilinear", {"c": 0.2})
    )
    return {
        "1-dof harmonic": (
            np.array([1.0]), np.array([0.5]),
            np.array([[1.0j]]), np.eye(1, dtype=complex),
            harm.codes, harm.params, harm.coords, np.array([1.0]),
        ),
        "2-dof coupled": (
            np.array([0.4, -0.2]), np.array([1.0, 0.3]),
            np.diag([1.0j, 1.3j]), np.eye(2, dtype=complex),
            joint.codes, joint.params, joint.coords, np.array([1.0, 1.0]),
        ),
    }


def time_kernel(mod, args, steps, dt, repeats):
    full = (*args, dt, steps, 0.0)
    mod.propagate_tga(*full)  # warm-up / compile
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        status, *_ = mod.propagate_tga(*full)
        best = min(best, time.perf_counter() - t0)
        assert status == 0
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=4000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    previous = os.environ.get("GWPDEC_BACKEND")
    results = {}
    try:
        for backend in ("numpy", "numba"):
            try:
                mod = load_kernels(backend)
            except RuntimeError as exc:
                print(f"{backend}: unavailable ({exc})")
                continue
            if mod.backend_name() != backend:
                print(f"{backend}: unavailable, skipped")
                continue
            for name, wl in workloads().items():
                results[(backend, name)] = time_kernel(
                    mod, wl, args.steps, 0.001, args.repeats
                )
    finally:
        if previous is None:
            os.environ.pop("GWPDEC_BACKEND", None)
        else:
            os.environ["GWPDEC_BACKEND"] = previous
        load_kernels(previous or "auto")

    print(f"\nbest of {args.repeats}, {args.steps} RK4 steps (trajectory + "
          f"stability + width matrices):\n")
    print(f"{'workload':<16} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name in workloads():
        t_np = results.get(("numpy", name))
        t_nb = results.get(("numba", name))
        row = f"{name:<16}"
        row += f" {t_np * 1e3:>8.2f}ms" if t_np else f" {'-':>10}"
        row += f" {t_nb * 1e3:>8.2f}ms" if t_nb else f" {'-':>10}"
        if t_np and t_nb:
            row += f" {t_np / t_nb:>8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
