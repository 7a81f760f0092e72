"""Scenario-driven command line: validate configs, run sweeps, write tables.

Usage:
    gwpdec run scenario.yaml [--output-dir DIR] [--seed N] [--oracle] [--quiet]
    gwpdec validate scenario.yaml

Outputs per run: manifest.json, reports.csv, timeseries.csv, phase_hist.csv,
summary.txt, and oracle.csv when the oracle is enabled.  All floats are
written with 17 significant digits; rerunning with the same config and seed
reproduces every file byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._kernels import backend_name
from .bath import BathEnsemble, diagonal_mixture, pure_state, thermal_harmonic
from .coherence import (
    TwoArmScenario,
    bath_overlaps,
    branch_at,
    evolve,
    m_coh,
    phase_distribution,
    total_purity,
    weighted_mu,
)
from .errors import ConfigError, GwpdecError
from .oracle import exact_two_arm
from .potentials import JointHamiltonian, PotentialModel, builtin_model
from .propagator import default_dt
from .wavecore import normalized


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


# -- config reading -----------------------------------------------------------


def _need(cfg: dict, key: str, path: str):
    if not isinstance(cfg, dict) or key not in cfg:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return cfg[key]


def _vector(raw, path: str) -> np.ndarray:
    try:
        v = np.asarray(raw, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: expected a list of numbers ({exc})") from exc
    if v.size == 0:
        raise ConfigError(f"{path}: must be non-empty")
    return v


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML parse error: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return cfg


def _build_potential(spec, dim: int, path: str) -> PotentialModel:
    if isinstance(spec, dict):
        spec = [spec]
    if not isinstance(spec, list) or not spec:
        raise ConfigError(f"{path}: expected a model mapping or list of mappings")
    total = None
    for k, entry in enumerate(spec):
        where = f"{path}[{k}]"
        name = _need(entry, "name", where)
        params = entry.get("params", {}) or {}
        try:
            params = {k: float(v) for k, v in params.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}.params: values must be numbers ({exc})") from exc
        try:
            model = builtin_model(name, params)
        except ConfigError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        coords = entry.get("coords", list(range(model.dim)))
        coords = [int(c) for c in np.atleast_1d(coords)]
        if len(coords) != model.dim:
            raise ConfigError(
                f"{where}: model '{name}' needs {model.dim} coords, got {coords}"
            )
        if any(c < 0 or c >= dim for c in coords):
            raise ConfigError(f"{where}: coords {coords} out of range for dim {dim}")
        emb = model.embedded(dim, coords)
        total = emb if total is None else total + emb
    return total


def _build_packet(spec, dim: int, hbar: float, path: str):
    q = _vector(_need(spec, "q", path), f"{path}.q")
    p = _vector(_need(spec, "p", path), f"{path}.p")
    alpha = _vector(_need(spec, "alpha", path), f"{path}.alpha")
    if not (q.size == p.size == alpha.size == dim):
        raise ConfigError(f"{path}: q, p, alpha must all have length {dim}")
    if np.any(alpha <= 0):
        raise ConfigError(f"{path}.alpha: width parameters must be positive")
    return normalized(q, p, np.diag(0.5j * alpha), hbar)


def _build_ensemble(spec, dim, masses, hbar, seed_override, path) -> tuple:
    kind = _need(spec, "kind", path)
    if kind == "thermal":
        omega = _vector(_need(spec, "omega", path), f"{path}.omega")
        if omega.size != dim:
            raise ConfigError(f"{path}.omega: need {dim} mode frequencies")
        seed = int(spec.get("seed", 0)) if seed_override is None else int(seed_override)
        ens = thermal_harmonic(
            omega,
            float(_need(spec, "temperature", path)),
            int(_need(spec, "n_samples", path)),
            seed,
            mass=masses,
            hbar=hbar,
        )
        return ens, seed
    if kind in ("pure", "mixture"):
        entries = _need(spec, "packets", path)
        if not isinstance(entries, list) or not entries:
            raise ConfigError(f"{path}.packets: need a non-empty list")
        packets, weights, phases = [], [], []
        for k, e in enumerate(entries):
            where = f"{path}.packets[{k}]"
            packets.append(_build_packet(e, dim, hbar, where))
            if kind == "pure":
                weights.append(float(_need(e, "amplitude", where)))
                phases.append(float(e.get("phase", 0.0)))
            else:
                weights.append(float(_need(e, "probability", where)))
        if kind == "pure":
            return pure_state(packets, weights, phases), None
        return diagonal_mixture(packets, weights), None
    raise ConfigError(f"{path}.kind: unknown ensemble kind '{kind}' "
                      "(thermal, pure, mixture)")


@dataclass
class RunSetup:
    """Everything needed to execute a sweep, decoupled from file I/O."""

    hbar: float
    system_left: PotentialModel
    system_right: PotentialModel
    g0_left: object
    g0_right: object
    bath_model: PotentialModel
    coupling: PotentialModel
    masses: np.ndarray
    ensemble: BathEnsemble
    lambdas: list
    t_final: float
    dt: float
    seed: int | None
    timeseries_stride: int
    phase_bins: int
    oracle_enabled: bool
    oracle_opts: dict

    def scenario(self, lam: float) -> TwoArmScenario:
        joint = JointHamiltonian(
            system=self.system_right,
            bath=self.bath_model,
            coupling=self.coupling,
            lam=lam,
            masses=self.masses,
        )
        return TwoArmScenario(
            system_left=self.system_left,
            system_right=self.system_right,
            g0_left=self.g0_left,
            g0_right=self.g0_right,
            joint=joint,
            t_final=self.t_final,
            dt=self.dt,
        )


def build_setup(cfg: dict, seed_override=None) -> RunSetup:
    hbar = float(cfg.get("hbar", 1.0))
    if hbar <= 0:
        raise ConfigError("hbar: must be positive")

    sys_cfg = _need(cfg, "system", "config")
    m_sys = _vector(_need(sys_cfg, "masses", "system"), "system.masses")
    ns = m_sys.size
    left_cfg = _need(sys_cfg, "left", "system")
    right_cfg = _need(sys_cfg, "right", "system")
    sys_left = _build_potential(_need(left_cfg, "potential", "system.left"), ns,
                                "system.left.potential")
    sys_right = _build_potential(_need(right_cfg, "potential", "system.right"), ns,
                                 "system.right.potential")
    g_left = _build_packet(_need(left_cfg, "packet", "system.left"), ns, hbar,
                           "system.left.packet")
    g_right = _build_packet(_need(right_cfg, "packet", "system.right"), ns, hbar,
                            "system.right.packet")

    bath_cfg = _need(cfg, "bath", "config")
    m_bath = _vector(_need(bath_cfg, "masses", "bath"), "bath.masses")
    nb = m_bath.size
    bath_model = _build_potential(_need(bath_cfg, "potential", "bath"), nb,
                                  "bath.potential")
    ensemble, seed = _build_ensemble(
        _need(bath_cfg, "ensemble", "bath"), nb, m_bath, hbar, seed_override,
        "bath.ensemble",
    )

    coup_cfg = _need(cfg, "coupling", "config")
    coupling = _build_potential(_need(coup_cfg, "potential", "coupling"), ns + nb,
                                "coupling.potential")
    lambdas_raw = _need(coup_cfg, "lambda", "coupling")
    lambdas = [float(x) for x in np.atleast_1d(lambdas_raw)]
    if not lambdas:
        raise ConfigError("coupling.lambda: sweep list must be non-empty")
    if any(l < 0 for l in lambdas):
        raise ConfigError("coupling.lambda: values must be >= 0")

    integ = _need(cfg, "integration", "config")
    t_final = float(_need(integ, "t_final", "integration"))
    if t_final <= 0:
        raise ConfigError("integration: t_final must be positive")
    if "dt" in integ:
        dt = float(integ["dt"])
        if dt <= 0:
            raise ConfigError("integration: dt must be positive")
        n = t_final / dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ConfigError(
                f"integration: dt={dt} does not divide t_final={t_final}"
            )
    else:
        # 1/200 of the fastest harmonic period across all model pieces
        ns, nb = m_sys.size, m_bath.size
        combined = (
            sys_left.embedded(2 * ns + nb, np.arange(ns))
            + sys_right.embedded(2 * ns + nb, ns + np.arange(ns))
            + bath_model.embedded(2 * ns + nb, 2 * ns + np.arange(nb))
        )
        dt = default_dt(
            combined, np.concatenate([m_sys, m_sys, m_bath]), t_final
        )
    n = t_final / dt

    out_cfg = cfg.get("outputs", {}) or {}
    stride = int(out_cfg.get("timeseries_stride", max(1, int(round(n)) // 200)))
    if stride < 1:
        raise ConfigError("outputs.timeseries_stride: must be >= 1")
    phase_bins = int(out_cfg.get("phase_bins", 32))
    if phase_bins < 1:
        raise ConfigError("outputs.phase_bins: must be >= 1")

    orc_cfg = cfg.get("oracle", {}) or {}
    oracle_opts = {
        k: orc_cfg[k]
        for k in ("dt", "margin", "points_per_sigma", "max_points", "certify")
        if k in orc_cfg
    }

    return RunSetup(
        hbar=hbar,
        system_left=sys_left,
        system_right=sys_right,
        g0_left=g_left,
        g0_right=g_right,
        bath_model=bath_model,
        coupling=coupling,
        masses=np.concatenate([m_sys, m_bath]),
        ensemble=ensemble,
        lambdas=lambdas,
        t_final=t_final,
        dt=dt,
        seed=seed,
        timeseries_stride=stride,
        phase_bins=phase_bins,
        oracle_enabled=bool(orc_cfg.get("enabled", False)),
        oracle_opts=oracle_opts,
    )


# -- run pipeline -------------------------------------------------------------

_REPORT_FIELDS = [
    "lambda",
    "m_coh",
    "purity",
    "trace",
    "block_ll",
    "block_rr",
    "block_rl_lr",
    "block_cross_other",
    "mu_abs",
    "phase_spread",
    "mean_bath_overlap",
    "mean_system_displacement",
]


def _write_csv(path: Path, header: list, rows: list):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def run_pipeline(setup: RunSetup, out_dir: Path, quiet: bool, force_oracle: bool,
                 log=print):
    report_rows = []
    series_rows = []
    hist_rows = []
    oracle_rows = []
    summary: dict = {}

    for lam in setup.lambdas:
        scenario = setup.scenario(lam)
        branch = evolve(scenario, setup.ensemble)
        rep = total_purity(branch, setup.ensemble)
        mu = weighted_mu(branch, setup.ensemble)
        report_rows.append([
            lam, rep.m_coh, rep.purity_total, rep.trace, rep.block_ll,
            rep.block_rr, rep.block_rl_lr, rep.block_cross_other, abs(mu),
            rep.phase_spread, rep.mean_bath_overlap,
            rep.mean_system_displacement,
        ])
        summary[f"lambda={_fmt(lam)}"] = {
            "m_coh": rep.m_coh,
            "purity": rep.purity_total,
            "mu_abs": abs(mu),
            "phase_spread": rep.phase_spread,
            "mean_bath_overlap": rep.mean_bath_overlap,
            "mean_system_displacement": rep.mean_system_displacement,
        }

        series = branch.series
        idx = list(range(0, series.n_samples, setup.timeseries_stride))
        if idx[-1] != series.n_samples - 1:
            idx.append(series.n_samples - 1)
        for k in idx:
            b = branch_at(series, k)
            probs = setup.ensemble.probabilities()
            phases = np.exp(1j * b.phis)
            o_diag = np.abs(np.diag(bath_overlaps(b)))
            series_rows.append([
                lam, b.t, m_coh(b, setup.ensemble),
                abs(weighted_mu(b, setup.ensemble)),
                1.0 - abs(probs @ phases), float(probs @ o_diag),
            ])

        dist = phase_distribution(branch, setup.ensemble, setup.phase_bins)
        for c, wgt in zip(dist.bin_centers, dist.bin_weights):
            hist_rows.append([lam, c, wgt])

        if setup.oracle_enabled or force_oracle:
            res = exact_two_arm(scenario, setup.ensemble, **setup.oracle_opts)
            rel = abs(rep.m_coh - res.m_coh) / res.m_coh if res.m_coh else np.nan
            oracle_rows.append([
                lam, rep.m_coh, res.m_coh, rel, rep.purity_total, res.purity,
            ])
            if not quiet:
                log(f"lambda={lam:g}: m_coh={rep.m_coh:.6f} "
                    f"exact={res.m_coh:.6f} rel_err={rel:.3%}")
        elif not quiet:
            log(f"lambda={lam:g}: m_coh={rep.m_coh:.6f} purity={rep.purity_total:.6f}")

    # weak-coupling deficit scaling between consecutive halved sweep points
    scaling = []
    for a in range(len(setup.lambdas)):
        for b in range(len(setup.lambdas)):
            la, lb = setup.lambdas[a], setup.lambdas[b]
            if la > 0 and lb > 0 and abs(la - 2.0 * lb) < 1e-12:
                da = 0.5 - report_rows[a][1]
                db = 0.5 - report_rows[b][1]
                if db != 0:
                    scaling.append({
                        "lambda_high": la,
                        "lambda_low": lb,
                        "deficit_ratio": da / db,
                    })
    if scaling:
        summary["deficit_scaling"] = scaling

    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "reports.csv", _REPORT_FIELDS, report_rows)
    _write_csv(
        out_dir / "timeseries.csv",
        ["lambda", "t", "m_coh", "mu_abs", "phase_spread", "mean_bath_overlap"],
        series_rows,
    )
    _write_csv(out_dir / "phase_hist.csv", ["lambda", "bin_center", "weight"],
               hist_rows)
    if oracle_rows:
        _write_csv(
            out_dir / "oracle.csv",
            ["lambda", "m_coh_semiclassical", "m_coh_exact", "rel_err",
             "purity_semiclassical", "purity_exact"],
            oracle_rows,
        )
    return summary


def _summary_lines(tree, indent=0) -> list:
    lines = []
    pad = "  " * indent
    if isinstance(tree, dict):
        for key, val in tree.items():
            if isinstance(val, (dict, list)):
                lines.append(f"{pad}{key}:")
                lines.extend(_summary_lines(val, indent + 1))
            else:
                val = val if isinstance(val, str) else _fmt(val)
                lines.append(f"{pad}{key}: {val}")
    else:  # list
        for val in tree:
            lines.append(f"{pad}-")
            lines.extend(_summary_lines(val, indent + 1))
    return lines


def run_command(config_path, out_dir, seed, force_oracle, quiet, log=print) -> int:
    cfg = load_config(config_path)
    setup = build_setup(cfg, seed_override=seed)
    out_dir = Path(out_dir) if out_dir else Path(
        cfg.get("outputs", {}).get("directory", "out")
    )
    digest = hashlib.sha256(Path(config_path).read_bytes()).hexdigest()
    summary = {
        "run": {
            "config": str(config_path),
            "config_sha256": digest,
            "seed": "none" if setup.seed is None else setup.seed,
            "backend": backend_name(),
            "versions": {"gwpdec": __version__, "numpy": np.__version__},
        }
    }
    summary.update(run_pipeline(setup, out_dir, quiet, force_oracle, log=log))

    manifest = {
        "config_sha256": digest,
        "seed": setup.seed,
        "backend": backend_name(),
        "versions": {"gwpdec": __version__, "numpy": np.__version__},
        "lambdas": [float(x) for x in setup.lambdas],
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    (out_dir / "summary.txt").write_text("\n".join(_summary_lines(summary)) + "\n")
    if not quiet:
        log(f"wrote {out_dir}/")
    return 0


def validate_command(config_path, log=print) -> int:
    cfg = load_config(config_path)
    setup = build_setup(cfg)
    n_steps = int(round(setup.t_final / setup.dt))
    log(f"config ok: {len(setup.lambdas)} sweep point(s), "
        f"{setup.ensemble.size} bath member(s), {n_steps} steps, "
        f"system dim {setup.g0_left.dim}, bath dim {setup.ensemble.dim}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gwpdec",
        description="semiclassical two-arm decoherence sweeps",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario sweep")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--oracle", action="store_true",
                       help="force-enable the exact grid oracle")
    p_run.add_argument("--quiet", action="store_true")
    p_val = sub.add_parser("validate", help="check a scenario file and exit")
    p_val.add_argument("config")
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            return run_command(args.config, args.output_dir, args.seed,
                               args.oracle, args.quiet)
        return validate_command(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GwpdecError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
