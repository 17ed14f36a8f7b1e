"""Command-line front end.

Subcommands (all driven by one JSON config, see config.py / README):

    qm-corr    quantum two-time correlation series -> CSV
    compare    QM / Bohm / Nelson-spectral table -> CSV + JSON summary
    nelson-mc  regularized Euler-Maruyama estimates -> CSV + diagnostics
    chsh       CHSH report for the antisymmetric pair state -> JSON
    eps-study  patch-width convergence table -> CSV
    eigen      eigenfunction samples -> CSV (x, psi_0 ... psi_{k-1})

Exit codes: 0 success, 2 configuration problem, 3 numeric backend error,
4 diagnostics threshold exceeded.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import bell, nelson_sde, serialize
from .config import RunConfig, build_cluster, build_observable, build_state, load_config
from .correlators import compare_theories, qm_two_time_series
from .errors import ConfigError, StepSizeError, StochMechError
from .states import CompositeState

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_DIAGNOSTIC = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochmech",
        description="Multi-time position correlations: quantum mechanics vs "
        "Bohm and Nelson trajectory theories, plus CHSH realizability tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("qm-corr", "quantum two-time correlation series"),
        ("compare", "three-theory comparison table"),
        ("nelson-mc", "Monte Carlo estimates with error bars and diagnostics"),
        ("chsh", "CHSH correlations, S value, classical realizability"),
        ("eps-study", "patch-width convergence study"),
        ("eigen", "export eigenfunction samples"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--out", default=None, help="output path (overrides config)")
        p.add_argument("--seed", type=int, default=None, help="override the MC seed")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker hint only; results are identical regardless",
        )
        if name == "eigen":
            p.add_argument("--cluster", type=int, default=0, help="cluster to export")
        if name == "nelson-mc":
            p.add_argument(
                "--dump-paths",
                default=None,
                metavar="PATH",
                help="also write raw paths (one per line, space-separated "
                "positions, time-major); large files",
            )
    return parser


def _resolve_out(cfg: RunConfig, args) -> Path:
    path = args.out or cfg.output_path
    if path is None:
        raise ConfigError("output.path: required (or pass --out)")
    return Path(path)


def _two_observables(cfg: RunConfig, state: CompositeState):
    systems = [c for c in state.clusters]
    if not cfg.observables:
        raise ConfigError("observables: at least one observable is required")
    f = build_observable(cfg.observables[0], systems, 0)
    if len(cfg.observables) >= 2:
        g = build_observable(cfg.observables[1], systems, 1)
    else:
        g = f
    return f, g


def _require_lags(cfg: RunConfig):
    if not cfg.lags:
        raise ConfigError("lags: required for this subcommand")
    return cfg.lags


def cmd_qm_corr(cfg: RunConfig, args) -> int:
    out = _resolve_out(cfg, args)
    state = build_state(cfg)
    f, g = _two_observables(cfg, state)
    lags = _require_lags(cfg)
    series, _ = qm_two_time_series(state, f, g, lags)
    serialize.write_csv(
        out, ["lag", "value", "method"],
        [[lag, val, "qm"] for lag, val in zip(series.lags, series.values)],
    )
    serialize.write_sidecar(out, args.config)
    return EXIT_OK


def cmd_compare(cfg: RunConfig, args) -> int:
    out = _resolve_out(cfg, args)
    state = build_state(cfg)
    f, g = _two_observables(cfg, state)
    lags = _require_lags(cfg)
    result = compare_theories(state, f, g, lags)
    if result.nelson is None:
        print(
            f"warning: Nelson spectral backend unavailable: {result.nelson_warning}",
            file=sys.stderr,
        )
        header = ["lag", "qm", "bohm"]
        rows = [
            [lag, q, b]
            for lag, q, b in zip(result.qm.lags, result.qm.values, result.bohm.values)
        ]
    else:
        header = ["lag", "qm", "bohm", "nelson"]
        rows = [
            [lag, q, b, n]
            for lag, q, b, n in zip(
                result.qm.lags, result.qm.values, result.bohm.values, result.nelson.values
            )
        ]
    serialize.write_csv(out, header, rows)
    summary = {
        "equal_time_agreement": result.equal_time_max_dev,
        "max_abs_dev_qm_bohm": result.max_abs_dev_qm_bohm,
        "max_abs_dev_qm_nelson": result.max_abs_dev_qm_nelson,
    }
    serialize.write_json(Path(str(out) + ".summary.json"), summary)
    serialize.write_sidecar(out, args.config)
    return EXIT_OK


def _mc_plan(cfg: RunConfig, args):
    if cfg.mc is None:
        raise ConfigError("mc: required for stochastic subcommands")
    seed = args.seed if args.seed is not None else cfg.mc.seed
    if seed is None:
        raise ConfigError("mc.seed: required for stochastic subcommands (or pass --seed)")
    return cfg.mc, int(seed)


def _lag_steps(lags, dt: float, horizon: float):
    steps = []
    for lag in lags:
        k = round(lag / dt)
        if abs(k * dt - lag) > 1e-9 * max(1.0, lag):
            raise ConfigError(f"lags: {lag} is not a multiple of mc.dt={dt}")
        if lag > horizon + 1e-12:
            raise ConfigError(f"lags: {lag} exceeds mc.horizon={horizon}")
        steps.append(int(k))
    n_steps = round(horizon / dt)
    if abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ConfigError(f"mc.horizon: {horizon} is not a multiple of mc.dt={dt}")
    stride = int(n_steps)
    for k in steps:
        if k:
            stride = math.gcd(stride, k)
    return steps, int(n_steps), stride


def cmd_nelson_mc(cfg: RunConfig, args) -> int:
    out = _resolve_out(cfg, args)
    mc, seed = _mc_plan(cfg, args)
    state = build_state(cfg)
    f, g = _two_observables(cfg, state)
    lags = _require_lags(cfg)
    _, _, stride = _lag_steps(lags, mc.dt, mc.horizon)
    drift = nelson_sde.regularized_drift(state, mc.epsilon)
    init = nelson_sde.sample_stationary(state, mc.n_paths, seed)
    ensemble = nelson_sde.simulate_ensemble(
        drift, init, mc.dt, mc.horizon, seed, store_stride=stride
    )
    rows = []
    for lag in lags:
        value, stderr = nelson_sde.estimate_two_time(ensemble, f, g, lag, 0.0)
        rows.append([lag, value, stderr])
    serialize.write_csv(out, ["lag", "estimate", "stderr"], rows)
    ks = {
        serialize.fmt(float(t)): list(nelson_sde.stationarity_distance(ensemble, state, float(t)))
        for t in ensemble.t_grid
    }
    diagnostics = {
        "ks_stats": ks,
        "clamp_rate": ensemble.clamp_rate,
        "sign_change_fraction": list(ensemble.sign_change_fraction),
    }
    serialize.write_json(Path(str(out) + ".diag.json"), diagnostics)
    if args.dump_paths:
        nelson_sde.dump_paths(ensemble, args.dump_paths)
    serialize.write_sidecar(out, args.config)
    return EXIT_OK


def cmd_chsh(cfg: RunConfig, args) -> int:
    out = _resolve_out(cfg, args)
    es = build_cluster(cfg.clusters[0])
    if es.k < 2:
        raise ConfigError("system.clusters[0].k: chsh needs at least 2 eigenstates")
    obs_raw = cfg.chsh_observable or {"kind": "sign"}
    f = build_observable(obs_raw, [es], 0)
    report = bell.run_chsh(es, f, cfg.chsh_times)
    if cfg.output_format == "csv":
        serialize.write_csv(
            out, serialize.CHSH_CSV_HEADER, [serialize.chsh_report_csv_row(report)]
        )
    else:
        serialize.write_json(out, serialize.chsh_report_to_dict(report))
    serialize.write_sidecar(out, args.config)
    if not report.classical_feasible:
        print(f"VIOLATES: S = {report.S:.3f}, classical infeasible")
    else:
        print(f"NO VIOLATION: S = {report.S:.3f}, classical feasible")
    return EXIT_OK


def cmd_eps_study(cfg: RunConfig, args) -> int:
    out = _resolve_out(cfg, args)
    mc, seed = _mc_plan(cfg, args)
    if not cfg.eps_study_epsilons or cfg.eps_study_lag is None:
        raise ConfigError("eps_study: epsilons and lag are required")
    state = build_state(cfg)
    f, g = _two_observables(cfg, state)
    rows = nelson_sde.epsilon_convergence_study(
        state, f, g, cfg.eps_study_lag, cfg.eps_study_epsilons,
        n_paths=mc.n_paths, dt=mc.dt, seed=seed,
    )
    serialize.write_csv(
        out,
        ["epsilon", "value", "stderr", "spectral_ref", "abs_dev"],
        [[r.epsilon, r.value, r.stderr, r.spectral_ref, r.abs_dev] for r in rows],
    )
    serialize.write_sidecar(out, args.config)
    return EXIT_OK


def cmd_eigen(cfg: RunConfig, args) -> int:
    out = _resolve_out(cfg, args)
    idx = args.cluster
    if not 0 <= idx < len(cfg.clusters):
        raise ConfigError(f"--cluster: no cluster {idx} in the config")
    es = build_cluster(cfg.clusters[idx])
    header = ["x"] + [f"psi_{i}" for i in range(es.k)]
    mat = np.column_stack([es.grid.points] + [f.values for f in es.eigenfunctions])
    serialize.write_csv(out, header, mat.tolist())
    serialize.write_sidecar(out, args.config)
    return EXIT_OK


_COMMANDS = {
    "qm-corr": cmd_qm_corr,
    "compare": cmd_compare,
    "nelson-mc": cmd_nelson_mc,
    "chsh": cmd_chsh,
    "eps-study": cmd_eps_study,
    "eigen": cmd_eigen,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepSizeError as exc:
        print(f"diagnostics: {exc}", file=sys.stderr)
        return EXIT_DIAGNOSTIC
    except StochMechError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
