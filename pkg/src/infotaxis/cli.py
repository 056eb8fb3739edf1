"""Command-line front end: single runs, sweeps and density-map campaigns.

Configuration files are flat ``key = value`` text with dotted sections
(see the schema table below and the README).  Unknown keys are hard
errors; every omitted key takes a documented default, and the manifest
written next to the artifacts echoes the fully resolved configuration,
which is sufficient to reproduce any run byte for byte.

Exit codes: 0 success, 2 configuration error, 3 aborted runs under
--strict.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, replace

from . import __version__
from .env_model import EnvParams, GridSpec
from .experiments import (GAMMA_RATIOS, GAMMA_SWEEP_VALUES, KMAX_SWEEP_VALUES,
                          LAMBDA_RATIOS, SWEEP_PARAMETERS, D_SWEEP_VALUES,
                          V_SWEEP_VALUES, SweepSpec, resolve_workers,
                          run_density_campaign, run_sweep, write_matrix,
                          write_pgm, write_sweep_csv)
from .policy import CUMULATIVE, DEFAULT_MOVE_ORDER, HARD_CAP, MOVES, PolicyConfig
from .search import ABORTED, SearchConfig, run_search, write_trajectory


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MapSpec:
    base: SearchConfig
    n_traj: int
    which: str
    seed_base: int


EXPERIMENTS = ("run", "map", "sweep", "sweep_diffusion", "sweep_wind",
               "sweep_gamma", "mismatch_lambda", "mismatch_gamma",
               "sweep_kmax")

_SWEEP_PRESETS = {
    "sweep_diffusion": ("D_real_and_agent", D_SWEEP_VALUES),
    "sweep_wind": ("V_real_and_agent", V_SWEEP_VALUES),
    "sweep_gamma": ("gamma_real_and_agent", GAMMA_SWEEP_VALUES),
    "mismatch_lambda": ("lambda_agent_over_lambda_real", LAMBDA_RATIOS),
    "mismatch_gamma": ("gamma_agent_over_gamma_real", GAMMA_RATIOS),
    "sweep_kmax": ("k_max", KMAX_SWEEP_VALUES),
}

_ENV_FIELDS = ("gamma", "D", "V", "eta", "a")

# key -> value kind; kinds drive both parsing and the manifest echo
_SCHEMA = {
    "experiment": "choice:" + ",".join(EXPERIMENTS),
    "seed": "int",
    "runs": "int",
    "grid.width": "int",
    "grid.height": "int",
    **{f"env_real.{f}": "float" for f in _ENV_FIELDS},
    **{f"env_agent.{f}": "float" for f in _ENV_FIELDS},
    "search.source": "cell",
    "search.start": "cell",
    "search.dt": "float",
    "search.entropy_threshold": "float",
    "search.max_steps": "int",
    "search.forced_initial_detection": "bool",
    "policy.truncation": f"choice:{CUMULATIVE},{HARD_CAP}",
    "policy.threshold": "float",
    "policy.k_max": "int",
    "policy.move_order": "moves",
    "sweep.parameter": "choice:" + ",".join(SWEEP_PARAMETERS),
    "sweep.values": "floats",
    "map.n_traj": "int",
    "map.filter": "choice:successful,unsuccessful,all",
}


def _parse_value(key: str, raw: str, lineno: int):
    kind = _SCHEMA[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError("expected true/false")
        if kind == "cell":
            parts = [int(p) for p in raw.split(",")]
            if len(parts) != 2:
                raise ValueError("expected x,y")
            return tuple(parts)
        if kind == "floats":
            return tuple(float(p) for p in raw.split(",") if p.strip())
        if kind == "moves":
            return tuple(p.strip() for p in raw.split(","))
        if kind.startswith("choice:"):
            choices = kind.split(":", 1)[1].split(",")
            if raw not in choices:
                raise ValueError(f"expected one of {'/'.join(choices)}")
            return raw
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: {key}: {exc}") from None
    raise AssertionError(kind)


def _read_pairs(text: str) -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key = value, got {line.rstrip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in pairs:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = _parse_value(key, raw, lineno)
    return pairs


def _env_params(pairs: dict, section: str, fallback: EnvParams | None) -> EnvParams:
    values = {}
    for f in _ENV_FIELDS:
        key = f"{section}.{f}"
        if key in pairs:
            values[f] = pairs[key]
        elif fallback is not None:
            values[f] = getattr(fallback, f)
    for f in ("gamma", "D", "eta", "a"):
        if f in values and not values[f] > 0:
            raise ConfigError(f"{section}.{f}: must be > 0, got {values[f]}")
    try:
        return EnvParams(**values)
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from None


def parse_config(text: str):
    """Resolve a config file into a SearchConfig, SweepSpec or MapSpec."""
    pairs = _read_pairs(text)
    experiment = pairs.get("experiment", "run")

    try:
        grid = GridSpec(pairs.get("grid.width", 100), pairs.get("grid.height", 100))
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    params_real = _env_params(pairs, "env_real", None)
    params_agent = _env_params(pairs, "env_agent", params_real)
    try:
        policy = PolicyConfig(
            truncation=pairs.get("policy.truncation", CUMULATIVE),
            threshold=pairs.get("policy.threshold", 0.999),
            k_max=pairs.get("policy.k_max", 20),
            move_order=pairs.get("policy.move_order", DEFAULT_MOVE_ORDER),
        )
    except ValueError as exc:
        raise ConfigError(f"policy: {exc}") from None
    seed = pairs.get("seed", 0)
    try:
        base = SearchConfig(
            grid=grid,
            params_real=params_real,
            params_agent=params_agent,
            r_source=pairs.get("search.source", (0, 35)),
            r_start=pairs.get("search.start", (0, -47)),
            dt=pairs.get("search.dt", 1.0),
            entropy_threshold=pairs.get("search.entropy_threshold", 1e-4),
            max_steps=pairs.get("search.max_steps", 10000),
            policy=policy,
            forced_initial_detection=pairs.get("search.forced_initial_detection", True),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(f"search: {exc}") from None

    if experiment == "run":
        return base
    if experiment == "map":
        return MapSpec(base=base,
                       n_traj=pairs.get("map.n_traj", 200),
                       which=pairs.get("map.filter", "successful"),
                       seed_base=seed)

    if experiment == "sweep":
        if "sweep.parameter" not in pairs:
            raise ConfigError("experiment = sweep requires sweep.parameter")
        parameter = pairs["sweep.parameter"]
        if "sweep.values" not in pairs:
            raise ConfigError("experiment = sweep requires sweep.values")
        values = pairs["sweep.values"]
    else:
        parameter, values = _SWEEP_PRESETS[experiment]
        parameter = pairs.get("sweep.parameter", parameter)
        values = pairs.get("sweep.values", values)
    try:
        return SweepSpec(base=base, swept_parameter=parameter,
                         values=tuple(values),
                         runs_per_value=pairs.get("runs", 100),
                         seed_base=seed)
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from None


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_fmt_value(v) for v in value)
    return str(value)


def echo_config(spec, experiment: str) -> dict:
    """Flat key = value mapping that reproduces ``spec`` via parse_config."""
    base = spec if isinstance(spec, SearchConfig) else spec.base
    echo = {
        "experiment": experiment,
        "seed": base.seed if isinstance(spec, SearchConfig) else spec.seed_base,
        "grid.width": base.grid.width,
        "grid.height": base.grid.height,
    }
    for section, params in (("env_real", base.params_real),
                            ("env_agent", base.params_agent)):
        for f in _ENV_FIELDS:
            echo[f"{section}.{f}"] = getattr(params, f)
    echo.update({
        "search.source": base.r_source,
        "search.start": base.r_start,
        "search.dt": base.dt,
        "search.entropy_threshold": base.entropy_threshold,
        "search.max_steps": base.max_steps,
        "search.forced_initial_detection": base.forced_initial_detection,
        "policy.truncation": base.policy.truncation,
        "policy.threshold": base.policy.threshold,
        "policy.k_max": base.policy.k_max,
        "policy.move_order": base.policy.move_order,
    })
    if isinstance(spec, SweepSpec):
        echo["sweep.parameter"] = spec.swept_parameter
        echo["sweep.values"] = spec.values
        echo["runs"] = spec.runs_per_value
    elif isinstance(spec, MapSpec):
        echo["map.n_traj"] = spec.n_traj
        echo["map.filter"] = spec.which
    return {k: _fmt_value(v) for k, v in echo.items()}


def config_text(echo: dict) -> str:
    return "\n".join(f"{k} = {v}" for k, v in echo.items()) + "\n"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="infotaxis",
        description="Lattice infotaxis searches and Monte Carlo campaigns")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in (("run", "single search"),
                       ("sweep", "parameter sweep to CSV"),
                       ("map", "density-map campaign")):
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", help="config file (flat key = value)")
        p.add_argument("--out", default="infotaxis_out", help="output directory")
        p.add_argument("--seed", type=int, help="override seed / seed base")
        p.add_argument("--runs", type=int,
                       help="override runs per value (sweep) or trajectories (map)")
        p.add_argument("--threads", type=int,
                       help="worker processes (default: INFOTAXIS_THREADS or CPU count)")
        p.add_argument("--strict", action="store_true",
                       help="exit 3 when any run aborts numerically")
        p.add_argument("--dump-trajectories", action="store_true",
                       help="write trajectory.tsv (run command)")
    return parser


def _load_spec(args):
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
        spec = parse_config(text)
    else:
        defaults = {"run": "experiment = run",
                    "sweep": "experiment = sweep_gamma",
                    "map": "experiment = map"}
        spec = parse_config(defaults[args.command])

    kind = {"run": SearchConfig, "sweep": SweepSpec, "map": MapSpec}[args.command]
    if not isinstance(spec, kind):
        raise ConfigError(
            f"config resolves to {type(spec).__name__}, but the "
            f"{args.command!r} command expects {kind.__name__}")

    if args.seed is not None:
        if isinstance(spec, SearchConfig):
            spec = replace(spec, seed=args.seed)
        elif isinstance(spec, SweepSpec):
            spec = replace(spec, seed_base=args.seed,
                           base=replace(spec.base, seed=args.seed))
        else:
            spec = replace(spec, seed_base=args.seed,
                           base=replace(spec.base, seed=args.seed))
    if args.runs is not None:
        if isinstance(spec, SweepSpec):
            spec = replace(spec, runs_per_value=args.runs)
        elif isinstance(spec, MapSpec):
            spec = replace(spec, n_traj=args.runs)
    return spec


def _experiment_name(spec, args) -> str:
    if isinstance(spec, SearchConfig):
        return "run"
    if isinstance(spec, MapSpec):
        return "map"
    return "sweep"


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    started = time.time()
    try:
        spec = _load_spec(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    workers = resolve_workers(args.threads)
    artifacts = []
    aborted = 0

    if isinstance(spec, SearchConfig):
        outcome = run_search(spec)
        aborted = int(outcome.status == ABORTED)
        summary = {
            "status": outcome.status,
            "search_time": outcome.search_time,
            "first_step": outcome.first_step,
            "final_entropy": outcome.final_entropy,
            "final_argmax": list(outcome.final_argmax),
            "final_argmax_tie": outcome.final_argmax_tie,
            "detections_total": outcome.detections_total,
            "min_distance_to_source": outcome.min_distance_to_source,
            "trajectory_length": int(len(outcome.trajectory)),
        }
        with open(os.path.join(args.out, "outcome.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        artifacts.append("outcome.json")
        if args.dump_trajectories:
            write_trajectory(outcome, os.path.join(args.out, "trajectory.tsv"))
            artifacts.append("trajectory.tsv")
    elif isinstance(spec, SweepSpec):
        result = run_sweep(spec, n_workers=workers)
        aborted = sum(row.n_aborted for row in result.rows)
        write_sweep_csv(result, os.path.join(args.out, "sweep.csv"))
        artifacts.append("sweep.csv")
    else:
        campaign = run_density_campaign(spec.base, spec.n_traj, spec.which,
                                        seed_base=spec.seed_base,
                                        n_workers=workers)
        aborted = sum(o.status == ABORTED for o in campaign.outcomes)
        write_matrix(campaign.map.counts, os.path.join(args.out, "density.txt"))
        write_pgm(campaign.map.counts, os.path.join(args.out, "density.pgm"))
        write_matrix(campaign.field, os.path.join(args.out, "mean_field.txt"))
        write_pgm(campaign.field, os.path.join(args.out, "mean_field.pgm"))
        counts = {}
        for o in campaign.outcomes:
            counts[o.status] = counts.get(o.status, 0) + 1
        summary = {
            "n_trajectories": spec.n_traj,
            "filter": spec.which,
            "n_mapped": campaign.map.n_trajectories,
            "status_counts": counts,
        }
        with open(os.path.join(args.out, "map_summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        artifacts.extend(["density.txt", "density.pgm", "mean_field.txt",
                          "mean_field.pgm", "map_summary.json"])

    manifest = {
        "tool": "infotaxis",
        "version": __version__,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "wall_clock_seconds": round(time.time() - started, 3),
        "argv": list(argv) if argv is not None else sys.argv[1:],
        "config_path": args.config,
        "out_dir": args.out,
        "threads": workers,
        "seed_base": spec.seed if isinstance(spec, SearchConfig) else spec.seed_base,
        "resolved_config": echo_config(spec, _experiment_name(spec, args)),
        "artifacts": artifacts,
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if args.strict and aborted:
        print(f"error: {aborted} aborted run(s) under --strict", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
