"""Batch command-line front-end.

Four subcommands, each driven by one TOML config file:

- ``check``: validate chain structure, innovation moments and the drift
  condition; write ``check_report.json``.
- ``simulate``: write one CSV per replication plus a manifest; refuses a
  config that fails ``check`` unless ``--force`` is given.
- ``density``: tabulate the one-step transition density on a grid, with
  its normalization integral in the CSV header.
- ``diagnose``: estimate drift constants and empirical convergence rates;
  write ``diagnose_report.json`` plus plot-ready CSV tables.

Exit codes: 0 success, 1 checked failure (assumption or diagnostic),
2 usage or config error. Every run writes ``manifest.json`` recording the
config hash, seeds and tool version, so outputs can be reproduced
byte-for-byte.
"""

import argparse
import json
import math
import os
import sys
import time
from typing import List, Optional, Tuple

from . import __version__
from .config import RunConfig, load_config
from .density import normalization_integral, transition_density
from .ergodicity import distance_decay, estimate_drift_constants
from .errors import (
    ConfigError,
    FourthMomentUndefinedError,
    GridTooSmallError,
    PeriodicChainError,
    ReducibleChainError,
    SkewSwitchError,
)
from .markov import is_irreducible, period, seed_record, stationary_distribution
from .model import check_assumption8, innovation_moments
from .simulate import simulate_ensemble, write_path_csv


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _moments_dict(moments) -> dict:
    return {
        "mean": _json_value(moments.mean),
        "variance": _json_value(moments.variance),
        "kappa": _json_value(moments.kappa),
    }


def _model_checks(config: RunConfig) -> Tuple[dict, List[str]]:
    """Shared check battery: chain structure, moments, drift condition."""
    spec = config.model
    failures: List[str] = []

    irreducible = is_irreducible(spec.tm)
    chain: dict = {"irreducible": irreducible, "period": None, "aperiodic": None}
    if not irreducible:
        failures.append("transition chain is reducible")
    else:
        p = period(spec.tm)
        chain["period"] = p
        chain["aperiodic"] = p == 1
        if p != 1:
            failures.append(f"transition chain is periodic with period {p}")
    chain["stationary_distribution"] = None
    chain["stationary_residual"] = None
    try:
        pi = stationary_distribution(spec.tm)
        chain["stationary_distribution"] = [float(v) for v in pi.probabilities]
        chain["stationary_residual"] = float(pi.residual)
    except (ReducibleChainError, PeriodicChainError):
        pass

    innovations: dict = {}
    innovations["eps"] = _moments_dict(innovation_moments(spec.eps, require_kappa=False))
    try:
        innovations["iota"] = _moments_dict(innovation_moments(spec.iota))
    except FourthMomentUndefinedError as exc:
        innovations["iota"] = {"error": str(exc)}
        failures.append(f"skew innovation: {exc}")

    try:
        drift = check_assumption8(
            spec, magnitudes=config.check.magnitudes, margin=config.check.margin
        )
        assumption8 = drift.to_dict()
        if not drift.passed:
            failures.append(
                f"drift condition fails: limsup estimate {drift.max_limsup:.6g} "
                f"not below 1 - margin"
            )
    except FourthMomentUndefinedError as exc:
        assumption8 = {"error": str(exc)}
        failures.append(f"drift condition uncheckable: {exc}")

    report = {
        "n_regimes": spec.n_regimes,
        "chain": chain,
        "innovations": innovations,
        "assumption8": assumption8,
        "failures": failures,
        "passed": not failures,
    }
    return report, failures


def _write_manifest(
    out_dir: str,
    command: str,
    config: RunConfig,
    files: List[str],
    elapsed: float,
    extra: Optional[dict] = None,
) -> None:
    manifest = {
        "tool": "skewswitch",
        "version": __version__,
        "command": command,
        "config_sha256": config.sha256,
        "config_source": config.source,
        "files": sorted(files),
        "elapsed_seconds": round(elapsed, 3),
    }
    if extra:
        manifest.update(extra)
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def cmd_check(config: RunConfig, args: argparse.Namespace, out_dir: str) -> int:
    started = time.perf_counter()
    report, failures = _model_checks(config)
    report_path = os.path.join(out_dir, "check_report.json")
    _write_json(report_path, report)
    _write_manifest(
        out_dir, "check", config, ["check_report.json"], time.perf_counter() - started
    )
    if failures:
        for message in failures:
            print(f"FAIL: {message}", file=sys.stderr)
        print(f"check report written to {report_path}")
        return 1
    print(f"all checks passed; report written to {report_path}")
    return 0


def cmd_simulate(config: RunConfig, args: argparse.Namespace, out_dir: str) -> int:
    if config.simulate is None:
        raise ConfigError("config has no [simulate] table", "simulate")
    sim = config.simulate
    if not args.force:
        _, failures = _model_checks(config)
        if failures:
            for message in failures:
                print(f"FAIL: {message}", file=sys.stderr)
            print(
                "model fails checks; rerun with --force to simulate anyway",
                file=sys.stderr,
            )
            return 1
    seed = args.seed if args.seed is not None else sim.seed
    workers = args.workers if args.workers is not None else sim.workers
    started = time.perf_counter()
    ensemble = simulate_ensemble(
        config.model,
        sim.init_regime,
        sim.init_x,
        sim.n,
        sim.replications,
        seed,
        workers=workers,
    )
    width = max(3, len(str(sim.replications)))
    files = []
    replication_rows = []
    for index, path in enumerate(ensemble.paths, start=1):
        name = f"path_{index:0{width}d}.csv"
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            write_path_csv(path, fh)
        files.append(name)
        replication_rows.append(
            {
                "file": name,
                "seed": path.seed,
                "diverged": path.diverged,
                "length": len(path),
            }
        )
    elapsed = time.perf_counter() - started
    n_diverged = sum(row["diverged"] for row in replication_rows)
    _write_manifest(
        out_dir,
        "simulate",
        config,
        files,
        elapsed,
        extra={
            "master_seed": ensemble.master_seed,
            "parameters": {
                "n": sim.n,
                "replications": sim.replications,
                "init_regime": sim.init_regime,
                "init_x": sim.init_x,
                "workers": workers,
                "forced": bool(args.force),
            },
            "replications": replication_rows,
            "n_diverged": n_diverged,
        },
    )
    print(
        f"wrote {len(files)} path file(s) to {out_dir} "
        f"({n_diverged} diverged) in {elapsed:.2f}s"
    )
    if n_diverged == sim.replications:
        print("all replications diverged", file=sys.stderr)
        return 1
    return 0


def cmd_density(config: RunConfig, args: argparse.Namespace, out_dir: str) -> int:
    if config.density is None:
        raise ConfigError("config has no [density] table", "density")
    den = config.density
    spec = config.model
    started = time.perf_counter()
    normalization = normalization_integral(spec, den.regime, den.x)
    rows = [
        (float(u), transition_density(spec, den.regime, den.x, float(u)))
        for u in den.u
    ]
    name = "density.csv"
    with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
        fh.write(f"# normalization,{normalization!r}\n")
        fh.write("u,transition_density\n")
        for u, value in rows:
            fh.write(f"{u!r},{value!r}\n")
    _write_manifest(
        out_dir,
        "density",
        config,
        [name],
        time.perf_counter() - started,
        extra={
            "parameters": {
                "regime": den.regime,
                "x": den.x,
                "grid_points": len(rows),
            },
            "normalization": normalization,
        },
    )
    print(
        f"wrote {name} ({len(rows)} points, normalization {normalization:.9f})"
    )
    return 0


def cmd_diagnose(config: RunConfig, args: argparse.Namespace, out_dir: str) -> int:
    _, failures = _model_checks(config)
    if failures:
        for message in failures:
            print(f"FAIL: {message}", file=sys.stderr)
        print("model fails checks; diagnose requires a passing model", file=sys.stderr)
        return 1
    diag = config.diagnose
    spec = config.model
    seed = args.seed if args.seed is not None else diag.seed
    workers = args.workers if args.workers is not None else diag.workers
    started = time.perf_counter()
    constants = estimate_drift_constants(spec, slack=diag.slack)
    convergence = distance_decay(
        spec,
        diag.x0,
        diag.lags,
        diag.replications,
        seed,
        reference_length=diag.reference_length,
        reference_burn_in=diag.burn_in,
        workers=workers,
    )
    elapsed = time.perf_counter() - started

    files = ["diagnose_report.json", "distance_vs_lag.csv", "drift_margins.csv"]
    _write_json(
        os.path.join(out_dir, "diagnose_report.json"),
        {
            "drift_constants": constants.to_dict(),
            "convergence": {
                key: _json_value(value) if not isinstance(value, list) else value
                for key, value in convergence.to_dict().items()
            },
        },
    )
    with open(os.path.join(out_dir, "distance_vs_lag.csv"), "w", encoding="utf-8") as fh:
        fh.write("lag,distance,above_noise_floor\n")
        informative = set(int(t) for t in convergence.informative_lags)
        for lag, distance in zip(convergence.lags, convergence.distances):
            fh.write(f"{int(lag)},{float(distance)!r},{int(lag) in informative}\n")
    with open(os.path.join(out_dir, "drift_margins.csv"), "w", encoding="utf-8") as fh:
        labels = ",".join(f"margin_regime_{l}" for l in range(1, spec.n_regimes + 1))
        fh.write(f"x,{labels}\n")
        for j, x in enumerate(constants.grid):
            margins = ",".join(repr(float(constants.margins[l, j]))
                               for l in range(spec.n_regimes))
            fh.write(f"{float(x)!r},{margins}\n")
    _write_manifest(
        out_dir,
        "diagnose",
        config,
        files,
        elapsed,
        extra={
            "master_seed": convergence.seed,
            "parameters": {
                "lags": [int(t) for t in diag.lags],
                "replications": diag.replications,
                "x0": list(diag.x0),
                "reference_length": diag.reference_length,
                "burn_in": diag.burn_in,
                "workers": workers,
            },
        },
    )
    rho = convergence.fitted_rho
    summary = f"L={constants.L:g}, beta={constants.beta:.4f}"
    if rho is not None:
        summary += f", fitted rho={rho:.4f} (R^2={convergence.r_squared:.3f})"
    if convergence.note:
        summary += f"; note: {convergence.note}"
    print(f"diagnose complete in {elapsed:.1f}s: {summary}")
    return 0


_COMMANDS = {
    "check": cmd_check,
    "simulate": cmd_simulate,
    "density": cmd_density,
    "diagnose": cmd_diagnose,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewswitch",
        description=(
            "Simulate Markov-switching skewed stochastic-volatility processes, "
            "evaluate exact transition densities, and verify stability "
            "assumptions and their ergodicity consequences."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "check": "validate chain structure, moments, and the drift condition",
        "simulate": "write per-replication path CSVs and a manifest",
        "density": "tabulate the one-step transition density on a grid",
        "diagnose": "estimate drift constants and empirical convergence rates",
    }
    for name, text in descriptions.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("config", help="path to the TOML run configuration")
        p.add_argument(
            "--out", default=".", help="output directory (created if missing)"
        )
        p.add_argument(
            "--seed",
            type=int,
            default=None,
            help="override the seed from the config (nonnegative integer)",
        )
        p.add_argument(
            "--workers",
            type=int,
            default=None,
            help="override the worker-thread count from the config",
        )
        if name == "simulate":
            p.add_argument(
                "--force",
                action="store_true",
                help="simulate even if the model fails checks",
            )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return 2
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return 2
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](config, args, args.out)
    except (ConfigError, GridTooSmallError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SkewSwitchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
