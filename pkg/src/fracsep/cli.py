"""Command-line entry point: config parsing, dispatch, run manifests.

Configs are TOML (JSON also accepted); model parameters sit at the top level
and each command reads its own section.  Every run writes its outputs plus a
manifest recording the resolved config, the seed derivation, and a sha256
digest per emitted file; re-running a manifest's config and seed reproduces
the digests bit for bit (timestamps live only in the manifest itself).

Exit codes: 0 success, 1 I/O or internal failure, 2 usage/config error,
3 at least one asserted metric failed.
"""

from __future__ import annotations

import argparse
import difflib
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .fracop import GridProfile
from .harness import (
    ConstantProfile,
    LinearProfile,
    ExperimentReport,
    explore_theta_positive,
    operator_consistency,
    sweep_evolution,
    sweep_stationary,
    verify_hydro,
)
from .kernel import ModelParams, build_kernel
from .lattice import sample_initial, simulate
from .pde import PdeSpec, solve_evolution, solve_stationary
from .rng import derive_seed

__all__ = ["parse_config", "dispatch", "main", "ConfigError"]

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_METRIC = 3

_MODEL_KEYS = ("gamma", "alpha", "beta", "kappa", "theta", "N")
_TOP_KEYS = _MODEL_KEYS + ("seed", "replicas", "threads", "sim", "pde", "hydro",
                           "sweep", "operator", "output")
_SECTION_KEYS = {
    "sim": ("t_end", "observe_at", "initial", "record_events", "disable_reservoirs"),
    "pde": ("n_grid", "dt", "T", "kappa_hat", "initial", "store_every"),
    "hydro": ("checkpoints", "bin_width", "tolerance", "dt"),
    "sweep": ("kind", "kappas", "n_grid", "T", "dt"),
    "operator": ("gammas", "Ns"),
    "output": ("format",),
}
_DEFAULTS = {
    "seed": 20240801,
    "replicas": 100,
    "sim": {"t_end": 0.1, "observe_at": None, "initial": "constant:0.5",
            "record_events": False, "disable_reservoirs": False},
    "pde": {"n_grid": 256, "dt": 1e-3, "T": 0.1, "kappa_hat": 1.0,
            "initial": "constant:0.5", "store_every": 1},
    "hydro": {"checkpoints": [0.05, 0.1], "bin_width": 0.0625, "tolerance": 0.05,
              "dt": 1e-3},
    "sweep": {"kind": "stationary", "kappas": [10.0, 100.0, 1000.0],
              "n_grid": 256, "T": 0.5, "dt": 1e-3},
    "operator": {"gammas": [1.2, 1.5, 1.8], "Ns": [128, 256, 512, 1024]},
    "output": {"format": "csv"},
}


class ConfigError(ValueError):
    pass


def _suggest(key: str, valid) -> str:
    close = difflib.get_close_matches(key, valid, n=1)
    hint = f"; did you mean {close[0]!r}?" if close else ""
    return f"unknown key {key!r}{hint} (valid: {', '.join(sorted(valid))})"


def parse_config(source) -> dict:
    """Parse and resolve a TOML or JSON config document.

    ``source`` is a path or raw text.  Unknown keys are rejected with the
    nearest valid key; model invariants are validated immediately.
    """
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        text = Path(source).read_text()
    else:
        text = str(source)
    data = None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}")
    else:
        try:
            import tomllib  # py >= 3.11
        except ImportError:
            import tomli as tomllib
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML config: {exc}")

    for key in data:
        if key not in _TOP_KEYS:
            raise ConfigError(_suggest(key, _TOP_KEYS))
    for section, keys in _SECTION_KEYS.items():
        sub = data.get(section)
        if sub is None:
            continue
        if not isinstance(sub, dict):
            raise ConfigError(f"section {section!r} must be a table")
        for key in sub:
            if key not in keys:
                raise ConfigError(_suggest(key, keys))

    resolved = {k: data[k] for k in _MODEL_KEYS if k in data}
    resolved["seed"] = int(data.get("seed", _DEFAULTS["seed"]))
    resolved["replicas"] = int(data.get("replicas", _DEFAULTS["replicas"]))
    if "threads" in data:
        resolved["threads"] = int(data["threads"])
    for section in _SECTION_KEYS:
        merged = dict(_DEFAULTS[section])
        merged.update(data.get(section, {}))
        resolved[section] = merged

    if all(k in resolved for k in _MODEL_KEYS):
        # Early validation; the exploratory theta window is tolerated here and
        # commands that need theta <= 0 re-validate strictly.
        resolved["_model"] = _model_from(resolved, allow_exploratory=True)
    return resolved


def _model_from(cfg: dict, allow_exploratory=False) -> ModelParams:
    try:
        return ModelParams(
            gamma=float(cfg["gamma"]),
            alpha=float(cfg["alpha"]),
            beta=float(cfg["beta"]),
            kappa=float(cfg["kappa"]),
            theta=float(cfg["theta"]),
            N=int(cfg["N"]),
            allow_exploratory_theta=allow_exploratory,
        )
    except KeyError as exc:
        raise ConfigError(f"missing model parameter {exc.args[0]!r}")
    except ValueError as exc:
        raise ConfigError(str(exc))


def _profile_from(spec: str, alpha: float, beta: float):
    if spec.startswith("constant:"):
        return ConstantProfile(float(spec.split(":", 1)[1]))
    if spec == "linear":
        return LinearProfile(alpha, beta)
    raise ConfigError(
        f"unknown initial profile {spec!r} (use 'constant:<v>' or 'linear')"
    )


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                    for v in row
                )
            )
            fh.write("\n")


def _digest(path: Path) -> dict:
    blob = path.read_bytes()
    return {
        "path": path.name,
        "sha256": hashlib.sha256(blob).hexdigest(),
        "bytes": len(blob),
    }


def _write_report(report: ExperimentReport, out: Path, fmt: str) -> list:
    files = []
    rpath = out / "report.json"
    rpath.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    files.append(rpath)
    if fmt == "csv":
        for name, rows in report.tables.items():
            if not rows:
                continue
            tpath = out / f"table_{name}.csv"
            cols = list(rows[0].keys())
            _write_csv(tpath, cols, [[r[c] for c in cols] for r in rows])
            files.append(tpath)
    return files


def dispatch(command: str, config: dict, out_dir, seed=None, replicas=None,
             threads=None, fmt=None) -> tuple[int, dict]:
    """Run one command, write outputs and the manifest; returns
    (exit_status, manifest)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    t0 = time.perf_counter()
    master_seed = int(seed if seed is not None else config.get("seed", _DEFAULTS["seed"]))
    n_replicas = int(replicas if replicas is not None else config.get("replicas", 100))
    n_threads = int(
        threads
        if threads is not None
        else config.get("threads", os.environ.get("FRACSEP_THREADS", 1))
    )
    fmt = fmt or config.get("output", _DEFAULTS["output"])["format"]
    files: list = []
    report: ExperimentReport | None = None
    replica_seeds: list = []

    if command == "simulate":
        model = _model_from(config)
        sim_cfg = config.get("sim", _DEFAULTS["sim"])
        t_end = float(sim_cfg["t_end"])
        observe = sim_cfg["observe_at"] or [t_end]
        g = _profile_from(sim_cfg["initial"], model.alpha, model.beta)
        kernel = build_kernel(model.gamma, model.N)
        for r in range(n_replicas):
            init_seed = derive_seed(master_seed, r, 0)
            chain_seed = derive_seed(master_seed, r, 1)
            replica_seeds.append({"replica": r, "init": init_seed, "chain": chain_seed})
            init = sample_initial(g, model.N, seed=init_seed)
            res = simulate(
                model, kernel, init, t_end, observe, seed=chain_seed,
                disable_reservoirs=bool(sim_cfg["disable_reservoirs"]),
            )
            rows = []
            if res.binned:
                centers = (np.arange(res.snapshots.shape[1]) + 0.5) / res.snapshots.shape[1]
                for ti, t in enumerate(res.times):
                    rows.extend(
                        (float(t), float(u), float(d))
                        for u, d in zip(centers, res.snapshots[ti])
                    )
                cols = ("t", "u", "density")
            else:
                for ti, t in enumerate(res.times):
                    rows.extend(
                        (float(t), x + 1, int(v))
                        for x, v in enumerate(res.snapshots[ti])
                    )
                cols = ("t", "site", "occupied")
            path = out / (
                "snapshots.csv" if n_replicas == 1 else f"snapshots_r{r:04d}.csv"
            )
            _write_csv(path, cols, rows)
            files.append(path)

    elif command == "solve":
        pde_cfg = config.get("pde", _DEFAULTS["pde"])
        model_like = {k: config[k] for k in ("gamma", "alpha", "beta") if k in config}
        if len(model_like) < 3:
            raise ConfigError("solve needs gamma, alpha, beta")
        n_grid = int(pde_cfg["n_grid"])
        g = _profile_from(pde_cfg["initial"], model_like["alpha"], model_like["beta"])
        init = GridProfile.from_function(
            g, n_grid, model_like["alpha"], model_like["beta"]
        )
        spec = PdeSpec(
            gamma=float(model_like["gamma"]),
            alpha=float(model_like["alpha"]),
            beta=float(model_like["beta"]),
            kappa_hat=float(pde_cfg["kappa_hat"]),
            N_grid=n_grid,
            dt=float(pde_cfg["dt"]),
            T=float(pde_cfg["T"]),
            initial=init,
        )
        res = solve_evolution(spec, store_every=int(pde_cfg["store_every"]))
        rows = []
        for t, prof in zip(res.times, res.profiles):
            rows.extend(
                (float(t), float(u), float(v)) for u, v in zip(prof.u, prof.values)
            )
        path = out / "trajectory.csv"
        _write_csv(path, ("t", "u", "rho"), rows)
        files.append(path)

    elif command == "stationary":
        pde_cfg = config.get("pde", _DEFAULTS["pde"])
        prof = solve_stationary(
            gamma=float(config["gamma"]),
            alpha=float(config["alpha"]),
            beta=float(config["beta"]),
            kappa_hat=float(pde_cfg["kappa_hat"]),
            N_grid=int(pde_cfg["n_grid"]),
        )
        path = out / "profile.csv"
        _write_csv(
            path,
            ("u", "rho"),
            [(float(u), float(v)) for u, v in zip(prof.u, prof.values)],
        )
        files.append(path)

    elif command == "verify-hydro":
        model = _model_from(config)
        hydro = config.get("hydro", _DEFAULTS["hydro"])
        sim_cfg = config.get("sim", _DEFAULTS["sim"])
        g = _profile_from(sim_cfg["initial"], model.alpha, model.beta)
        report = verify_hydro(
            model,
            g,
            hydro["checkpoints"],
            replicas=n_replicas,
            bin_width=float(hydro["bin_width"]),
            seed=master_seed,
            tolerance=float(hydro["tolerance"]),
            dt=float(hydro["dt"]),
            threads=n_threads,
        )
        replica_seeds = report.seeds.get("replicas", [])
        files.extend(_write_report(report, out, fmt))

    elif command == "sweep-kappa":
        sweep = config.get("sweep", _DEFAULTS["sweep"])
        if sweep["kind"] == "stationary":
            report = sweep_stationary(
                gamma=float(config["gamma"]),
                alpha=float(config["alpha"]),
                beta=float(config["beta"]),
                kappas=sweep["kappas"],
                N_grid=int(sweep["n_grid"]),
            )
        elif sweep["kind"] == "evolution":
            g = _profile_from(
                config.get("sim", _DEFAULTS["sim"])["initial"],
                config["alpha"],
                config["beta"],
            )
            report = sweep_evolution(
                gamma=float(config["gamma"]),
                alpha=float(config["alpha"]),
                beta=float(config["beta"]),
                g=g,
                kappas=sweep["kappas"],
                T=float(sweep["T"]),
                N_grid=int(sweep["n_grid"]),
                dt=float(sweep["dt"]),
            )
        else:
            raise ConfigError(f"unknown sweep kind {sweep['kind']!r}")
        files.extend(_write_report(report, out, fmt))

    elif command == "operator-check":
        op = config.get("operator", _DEFAULTS["operator"])
        report = operator_consistency(op["gammas"], op["Ns"])
        files.extend(_write_report(report, out, fmt))

    elif command == "explore-theta":
        if float(config.get("theta", 0.0)) <= 0.0:
            raise ConfigError("explore-theta requires theta > 0 (use verify-hydro otherwise)")
        model = _model_from(config, allow_exploratory=True)
        hydro = config.get("hydro", _DEFAULTS["hydro"])
        sim_cfg = config.get("sim", _DEFAULTS["sim"])
        g = _profile_from(sim_cfg["initial"], model.alpha, model.beta)
        report = explore_theta_positive(
            model,
            g,
            hydro["checkpoints"],
            replicas=n_replicas,
            bin_width=float(hydro["bin_width"]),
            seed=master_seed,
            threads=n_threads,
        )
        replica_seeds = report.seeds.get("replicas", [])
        files.extend(_write_report(report, out, fmt))

    else:
        raise ConfigError(f"unknown command {command!r}")

    manifest = {
        "tool_version": __version__,
        "command": command,
        "config": {k: v for k, v in config.items() if not k.startswith("_")},
        "master_seed": master_seed,
        "replica_seeds": replica_seeds,
        "started_at": started,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "wall_clock_s": time.perf_counter() - t0,
        "outputs": [_digest(p) for p in files],
        "metrics_passed": None if report is None else report.passed,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    status = EXIT_OK
    if report is not None and not report.passed:
        status = EXIT_METRIC
    return status, manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracsep",
        description="Boundary-driven exclusion with Levy jumps: simulation, "
        "fractional PDE solvers, and theorem-checking experiments.",
    )
    parser.add_argument(
        "command",
        choices=[
            "simulate", "solve", "stationary", "verify-hydro",
            "sweep-kappa", "operator-check", "explore-theta",
        ],
    )
    parser.add_argument("--config", required=True, help="TOML or JSON config file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="64-bit master seed")
    parser.add_argument("--replicas", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--format", choices=["csv", "json"], default=None)
    args = parser.parse_args(argv)

    try:
        config = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        status, manifest = dispatch(
            args.command,
            config,
            args.out,
            seed=args.seed,
            replicas=args.replicas,
            threads=args.threads,
            fmt=args.format,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    for out_file in manifest["outputs"]:
        print(f"wrote {out_file['path']} ({out_file['bytes']} bytes)")
    if manifest["metrics_passed"] is False:
        print("one or more asserted metrics FAILED", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
