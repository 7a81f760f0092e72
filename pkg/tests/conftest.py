import os

os.environ.setdefault("GWPDEC_BACKEND", "auto")

import numpy as np
import pytest

import gwpdec as gd


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger JIT compilation (or cache load) before any timed test body."""
    from gwpdec.propagator import classical_trajectory

    model = gd.builtin_model("harmonic", {"omega": 1.0})
    g = gd.normalized([0.0], [0.0], [[0.5j]], 1.0)
    gd.propagate(g, model, [1.0], 0.1, 0.01)
    classical_trajectory(np.zeros(1), np.zeros(1), model, [1.0], 0.1, 0.01)


def quad_overlap_1d(g1, g2, half_width=20.0, n=8001):
    """Trapezoidal quadrature of <g1|g2> on a dense 1D grid.

    Trapezoid is spectrally accurate for decaying analytic integrands, so
    the error is set by tail truncation, not the step.
    """
    x = np.linspace(-half_width, half_width, n)
    f = np.conj(g1.evaluate(x[:, None])) * g2.evaluate(x[:, None])
    return complex(np.trapezoid(f, x))


def quad_overlap_2d(g1, g2, half_width=11.0, n=441):
    x = np.linspace(-half_width, half_width, n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
    f = (np.conj(g1.evaluate(pts)) * g2.evaluate(pts)).reshape(n, n)
    return complex(np.trapezoid(np.trapezoid(f, x, axis=1), x))


def coherent_width(omega, mass=1.0):
    """Width matrix of the stationary packet of a harmonic mode."""
    return np.atleast_2d(np.diag(np.atleast_1d(0.5j * np.asarray(mass * omega))))


def two_arm_scenario(
    lam,
    t_final=3.0,
    dt=0.002,
    hbar=1.0,
    omega_bath=np.sqrt(2.0),
    coupling=None,
    bath_packets=None,
    bath_kind="single",
    n_thermal=2,
    temperature=2.0,
    seed=20240901,
    arm_gap=12.0,
    alpha_bath=None,
):
    """Standard separated-arm scenario used across the suite."""
    left = gd.builtin_model("harmonic", {"omega": 1.0, "center": -arm_gap})
    right = gd.builtin_model("harmonic", {"omega": 1.0, "center": 0.0})
    bath_model = gd.builtin_model("harmonic", {"omega": omega_bath})
    if coupling is None:
        coupling = gd.builtin_model("bilinear", {"c": 1.0})
    joint = gd.JointHamiltonian(right, bath_model, coupling, lam, [1.0, 1.0])
    g_left = gd.normalized([-arm_gap], [1.0], [[0.5j]], hbar)
    g_right = gd.normalized([0.0], [1.0], [[0.5j]], hbar)
    if bath_packets is not None:
        ensemble = bath_packets
    elif bath_kind == "single":
        a = omega_bath if alpha_bath is None else alpha_bath
        ensemble = gd.single_packet(gd.normalized([0.0], [0.0], [[0.5j * a]], hbar))
    else:
        ensemble = gd.thermal_harmonic(
            [omega_bath], temperature, n_thermal, seed, hbar=hbar
        )
    scenario = gd.TwoArmScenario(
        system_left=left,
        system_right=right,
        g0_left=g_left,
        g0_right=g_right,
        joint=joint,
        t_final=t_final,
        dt=dt,
    )
    return scenario, ensemble
