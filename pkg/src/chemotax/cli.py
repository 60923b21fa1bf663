"""Command-line front end: simulations, identity checks, bubble scans.

Subcommands
-----------
simulate        advance a configured regime, write trajectory CSV, field
                snapshots, and run metadata JSON
duality-check   verify the two inner-minimizer identities on random fields
bubble-scan     run the concentration experiment over an epsilon ladder
                (and a lambda sweep), write scan CSV + verdict JSON
critical-mass   print both critical-mass constants of a measure as JSON
gradient-check  finite-difference check of the mean-field right-hand side

Configuration is a single JSON file; command-line flags override file
values.  Numeric fields accept a ``pi`` suffix ("8pi", "-1.5pi") so that
critical masses can be stated exactly.  The output directory is
``$CHEMOTAX_OUT`` (or the CWD) joined with the config's ``output_dir``.

Exit codes: 0 success, 1 tolerance or step failure, 2 invalid config,
3 collapse detected.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bubbles import collapse_experiment
from .dynamics import (
    SimConfig,
    SimState,
    StepRefusedError,
    initial_density_stack,
    run,
    uniform_density,
)
from .fieldio import (
    geometry_from_dict,
    read_field,
    write_csv,
    write_field,
    write_field_csv,
    write_json,
    write_trajectory_csv,
)
from .functionals import (
    ExponentOverflowError,
    average_mass,
    free_energy,
    gibbs_density,
    individual_mean_field_energy,
    induced_potential,
    lyapunov,
    mean_field_energy,
)
from .grid import Disk, Grid, field_inner, make_grid
from .greens import GreenOperator
from .measure import (
    critical_mass_average,
    critical_mass_individual,
    parse_measure_literal,
)
from .sampling import admissible_density, smooth_potential
from .dynamics import meanfield_source

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_COLLAPSE = 3

SCHEMA_VERSION = 1

DUALITY_RTOL = 1e-10
GRADIENT_RTOL = 1e-5
SMALL_GRID_CSV_CELLS = 4096


class ConfigError(ValueError):
    pass


def parse_number(value, key: str) -> float:
    """Accept plain numbers or strings with a trailing 'pi' multiplier."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        text = value.strip().lower()
        if text.endswith("pi"):
            head = text[:-2].strip()
            if head in ("", "+"):
                return math.pi
            if head == "-":
                return -math.pi
            try:
                return float(head) * math.pi
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {value!r}") from None
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r}") from None
    raise ConfigError(f"{key}: expected a number, got {type(value).__name__}")


@dataclass
class RunConfig:
    raw: dict
    geometry: object
    nx: int
    ny: int
    measure: object
    regime: str | None
    sim: SimConfig | None
    initial_rho: dict
    initial_v: dict
    output_dir: str
    seed: int
    threads: int
    bubble: dict
    trials: int
    fd_step: float


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def parse_config(raw: dict, need_regime: bool = False) -> RunConfig:
    """Validate the whole configuration before anything is allocated."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: expected {SCHEMA_VERSION}, got {version}")

    geo_spec = raw.get("geometry", {"kind": "rectangle", "lx": 1.0, "ly": 1.0})
    try:
        geometry = geometry_from_dict(geo_spec)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"geometry: {exc}") from None
    mesh = raw.get("mesh", {})
    nx = int(mesh.get("nx", 64))
    ny = int(mesh.get("ny", nx))
    if nx <= 0 or ny <= 0:
        raise ConfigError("mesh: cell counts must be positive")

    try:
        measure = parse_measure_literal(raw.get("measure",
                                                [{"alpha": 1.0, "weight": 1.0}]))
    except ValueError as exc:
        raise ConfigError(f"measure: {exc}") from None

    regime = raw.get("regime")
    sim = None
    if regime is not None or need_regime:
        if regime is None:
            raise ConfigError("regime: required for this command")
        lam = raw.get("lambda")
        lam = parse_number(lam, "lambda") if lam is not None else None
        delta = raw.get("delta", 1.0)
        if isinstance(delta, (list, tuple)):
            delta = tuple(parse_number(d, "delta") for d in delta)
        else:
            delta = (parse_number(delta, "delta"),)
        dt_spec = raw.get("dt", {})
        if not isinstance(dt_spec, dict):
            raise ConfigError("dt: must be an object with a 'policy' field")
        try:
            sim = SimConfig(
                regime=regime,
                horizon=parse_number(raw.get("horizon", 0.0), "horizon"),
                delta=delta,
                epsilon=parse_number(raw.get("epsilon", 1.0), "epsilon"),
                lam=lam,
                dt_policy=dt_spec.get("policy", "cfl"),
                dt=parse_number(dt_spec["value"], "dt.value")
                if dt_spec.get("value") is not None else None,
                dt_max=parse_number(dt_spec["max"], "dt.max")
                if dt_spec.get("max") is not None else None,
                dt_safety=parse_number(dt_spec.get("safety", 0.5), "dt.safety"),
                diag_every=int(raw.get("diag_every", 1)),
                max_steps=int(raw["max_steps"]) if raw.get("max_steps") is not None else None,
                snapshot_times=tuple(parse_number(t, "snapshot_times")
                                     for t in raw.get("snapshot_times", ())),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    initial = raw.get("initial", {})
    initial_rho = initial.get("rho", {"preset": "gaussian-bump"})
    initial_v = initial.get("v", {"preset": "zero"})

    bubble = raw.get("bubble", {})
    checks = raw.get("checks", {})
    return RunConfig(
        raw=raw,
        geometry=geometry,
        nx=nx,
        ny=ny,
        measure=measure,
        regime=regime,
        sim=sim,
        initial_rho=initial_rho,
        initial_v=initial_v,
        output_dir=raw.get("output_dir", "out"),
        seed=int(raw.get("seed", 0)),
        threads=int(raw.get("threads", 1)),
        bubble=bubble,
        trials=int(checks.get("trials", 100)),
        fd_step=parse_number(checks.get("fd_step", 1e-4), "checks.fd_step"),
    )


def output_root(cfg: RunConfig) -> Path:
    root = Path(os.environ.get("CHEMOTAX_OUT", "."))
    return root / cfg.output_dir


def _build_initial_state(cfg: RunConfig, grid: Grid) -> SimState:
    sim = cfg.sim
    lam = sim.lam if sim.lam is not None else 1.0

    spec = cfg.initial_v
    preset = spec.get("preset", "zero")
    if preset == "zero":
        v0 = grid.zeros()
    elif preset == "file":
        v0, _ = read_field(spec["path"], grid)
    else:
        raise ConfigError(f"initial.v.preset: unknown preset {preset!r}")

    if sim.regime.startswith("meanfield"):
        return SimState(time=0.0, v=v0, rho=None)

    spec = cfg.initial_rho
    preset = spec.get("preset", "gaussian-bump")
    mass = parse_number(spec.get("mass", lam), "initial.rho.mass")
    if preset == "uniform":
        rho0 = np.tile(uniform_density(grid, mass), (cfg.measure.natoms, 1))
    elif preset == "gaussian-bump":
        center = spec.get("center")
        rho0 = initial_density_stack(
            grid, cfg.measure, mass, "gaussian-bump",
            center=tuple(center) if center is not None else None,
            width=parse_number(spec.get("width", 0.1), "initial.rho.width"))
    elif preset == "file":
        paths = spec.get("paths")
        if not paths or len(paths) != cfg.measure.natoms:
            raise ConfigError("initial.rho.paths: need one file per atom")
        rho0 = np.stack([read_field(p, grid)[0] for p in paths])
        if np.any(rho0 < 0.0):
            raise ConfigError("initial.rho: densities must be nonnegative")
    else:
        raise ConfigError(f"initial.rho.preset: unknown preset {preset!r}")
    return SimState(time=0.0, v=v0, rho=rho0)


def cmd_simulate(cfg: RunConfig) -> int:
    if cfg.sim is None:
        raise ConfigError("regime: required for simulate")
    outdir = output_root(cfg)
    grid = make_grid(cfg.geometry, cfg.nx, cfg.ny)
    state = _build_initial_state(cfg, grid)
    green = GreenOperator(grid)
    outdir.mkdir(parents=True, exist_ok=True)

    started = time.perf_counter()
    try:
        traj = run(state, cfg.sim, cfg.measure, grid, green)
    except StepRefusedError as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    wall = time.perf_counter() - started

    write_trajectory_csv(outdir / "trajectory.csv", traj)
    for k, snap in enumerate(traj.snapshots):
        _write_state(outdir, f"snap{k:03d}", snap, grid)
    write_json(outdir / "metadata.json", {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.raw,
        "termination": traj.termination,
        "steps": traj.steps,
        "wall_time_s": wall,
        "energies": {
            "initial": _energy_records(state, cfg, grid, green),
            "final": _energy_records(traj.final_state, cfg, grid, green),
        },
    })
    if traj.termination == "collapse":
        return EXIT_COLLAPSE
    return EXIT_OK


def _energy_records(state: SimState | None, cfg: RunConfig, grid: Grid,
                    green: GreenOperator) -> list[dict]:
    """Functional reports for a state; empty past a blow-up."""
    if state is None:
        return []
    lam = cfg.sim.lam
    if lam is None:
        lam = average_mass(state.rho, cfg.measure, grid)
    records = []
    try:
        if state.rho is not None:
            records.append(lyapunov(state.rho, state.v, cfg.measure,
                                    grid).as_record("lyapunov"))
            records.append(free_energy(state.rho, cfg.measure, grid,
                                       green).as_record("free_energy"))
        if cfg.sim.regime == "meanfield_individual":
            records.append(individual_mean_field_energy(
                state.v, cfg.measure, grid, lam).as_record("individual_energy"))
        else:
            records.append(mean_field_energy(
                state.v, cfg.measure, grid, lam).as_record("mean_field_energy"))
    except ExponentOverflowError:
        pass
    return records


def _write_state(outdir: Path, stem: str, state: SimState, grid: Grid) -> None:
    write_field(outdir / f"{stem}_v.bin", state.v, grid, name="v", time=state.time)
    if grid.ncells <= SMALL_GRID_CSV_CELLS:
        write_field_csv(outdir / f"{stem}_v.csv", state.v, grid)
    if state.rho is not None:
        for j in range(state.rho.shape[0]):
            write_field(outdir / f"{stem}_rho{j}.bin", state.rho[j], grid,
                        name=f"rho{j}", time=state.time)
            if grid.ncells <= SMALL_GRID_CSV_CELLS:
                write_field_csv(outdir / f"{stem}_rho{j}.csv", state.rho[j], grid)


def cmd_duality_check(cfg: RunConfig, trials: int) -> int:
    if trials < 1:
        raise ConfigError("trials: must be at least 1")
    grid = make_grid(cfg.geometry, cfg.nx, cfg.ny)
    green = GreenOperator(grid)
    lam = parse_number(cfg.raw.get("lambda", "4pi"), "lambda")
    rng = np.random.default_rng(cfg.seed)
    gap_j = gap_f = 0.0
    for _ in range(trials):
        v = smooth_potential(rng, grid)
        j_val = mean_field_energy(v, cfg.measure, grid, lam).value
        l_val = lyapunov(gibbs_density(v, cfg.measure, grid, lam), v,
                         cfg.measure, grid).value
        gap_j = max(gap_j, abs(l_val - j_val) / max(1.0, abs(j_val)))
        rho = admissible_density(rng, grid, cfg.measure, lam)
        v_rho = induced_potential(rho, cfg.measure, grid, green)
        l_val = lyapunov(rho, v_rho, cfg.measure, grid).value
        f_val = free_energy(rho, cfg.measure, grid, green).value
        gap_f = max(gap_f, abs(l_val - f_val) / max(1.0, abs(f_val)))
    passed = gap_j <= DUALITY_RTOL and gap_f <= DUALITY_RTOL
    print(json.dumps({"trials": trials, "max_gap_potential_identity": gap_j,
                      "max_gap_density_identity": gap_f,
                      "tolerance": DUALITY_RTOL, "pass": passed}, sort_keys=True))
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_bubble_scan(cfg: RunConfig) -> int:
    bubble = cfg.bubble
    epsilons = [parse_number(e, "bubble.epsilons")
                for e in bubble.get("epsilons", (0.2, 0.141, 0.1, 0.071, 0.05))]
    eta = parse_number(bubble.get("eta", 1.0), "bubble.eta")
    lambdas = bubble.get("lambdas")
    if lambdas is None:
        lambdas = [cfg.raw.get("lambda", "8pi")]
    lambdas = [parse_number(lam, "bubble.lambdas") for lam in lambdas]

    geometry = cfg.geometry
    if not isinstance(geometry, Disk) and "geometry" not in cfg.raw:
        geometry = Disk(1.0)  # scans default to the unit disk
        nx = cfg.raw.get("mesh", {}).get("nx", 256)
    else:
        nx = cfg.nx
    grid = make_grid(geometry, nx)
    green = GreenOperator(grid)
    outdir = output_root(cfg)
    outdir.mkdir(parents=True, exist_ok=True)

    scans = []
    for k, lam in enumerate(lambdas):
        scan = collapse_experiment(grid, cfg.measure, lam, eta, epsilons, green,
                                   threads=cfg.threads)
        write_csv(outdir / f"bubble_scan_{k}.csv", scan.CSV_COLUMNS, scan.csv_rows())
        scans.append(scan.summary())
    verdicts = [s["verdict"] for s in scans]
    flips = sum(1 for a, b in zip(verdicts, verdicts[1:]) if a != b)
    summary = {"schema_version": SCHEMA_VERSION, "scans": scans,
               "verdict_changes": flips}
    write_json(outdir / "bubble_summary.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_critical_mass(measure_literal) -> int:
    measure = parse_measure_literal(measure_literal)
    avg = critical_mass_average(measure)
    result = {
        "average": avg if avg is not None else "not covered",
        "individual": critical_mass_individual(measure),
    }
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def cmd_gradient_check(cfg: RunConfig) -> int:
    grid = make_grid(cfg.geometry, cfg.nx, cfg.ny)
    lam = parse_number(cfg.raw.get("lambda", "4pi"), "lambda")
    rng = np.random.default_rng(cfg.seed)
    pairs = int(cfg.raw.get("checks", {}).get("pairs", 20))
    h_fd = cfg.fd_step
    variants = ["average"]
    if cfg.regime == "meanfield_individual":
        variants.append("individual")
    worst = 0.0
    for variant in variants:
        energy = (mean_field_energy if variant == "average"
                  else individual_mean_field_energy)
        for _ in range(pairs):
            v = smooth_potential(rng, grid)
            xi = smooth_potential(rng, grid)
            rhs = grid.laplacian_dirichlet_matrix @ v + \
                meanfield_source(v, cfg.measure, grid, lam, variant)
            forward = energy(v + h_fd * xi, cfg.measure, grid, lam).value
            backward = energy(v - h_fd * xi, cfg.measure, grid, lam).value
            reference = -(forward - backward) / (2.0 * h_fd)
            err = abs(field_inner(rhs, xi, grid) - reference) / \
                max(abs(reference), 1e-12)
            worst = max(worst, err)
    passed = worst <= GRADIENT_RTOL
    print(json.dumps({"pairs": pairs, "max_rel_error": worst,
                      "tolerance": GRADIENT_RTOL, "pass": passed}, sort_keys=True))
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chemotax", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=False, help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, help="worker threads for sweeps")
        p.add_argument("--output", help="override the config output_dir")

    p = sub.add_parser("simulate", help="run a configured simulation")
    common(p)
    p = sub.add_parser("duality-check", help="check the inner-minimizer identities")
    common(p)
    p.add_argument("--trials", type=int, default=None)
    p = sub.add_parser("bubble-scan", help="concentration experiment + slope fit")
    common(p)
    p = sub.add_parser("critical-mass", help="print both critical-mass constants")
    p.add_argument("--measure", help="measure literal JSON, e.g. "
                   '\'[{"alpha":1,"weight":1}]\'')
    p.add_argument("--config", help="JSON config file holding a measure")
    p = sub.add_parser("gradient-check", help="finite-difference check of the mean-field flow")
    common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "critical-mass":
            if args.measure:
                literal = json.loads(args.measure)
            elif args.config:
                literal = load_config(args.config).get("measure")
                if literal is None:
                    raise ConfigError("config has no measure literal")
            else:
                raise ConfigError("critical-mass needs --measure or --config")
            return cmd_critical_mass(literal)

        raw = load_config(args.config) if args.config else {}
        if getattr(args, "seed", None) is not None:
            raw["seed"] = args.seed
        if getattr(args, "threads", None) is not None:
            raw["threads"] = args.threads
        if getattr(args, "output", None) is not None:
            raw["output_dir"] = args.output

        if args.command == "simulate":
            cfg = parse_config(raw, need_regime=True)
            return cmd_simulate(cfg)
        if args.command == "duality-check":
            cfg = parse_config(raw)
            trials = args.trials if args.trials is not None else cfg.trials
            return cmd_duality_check(cfg, trials)
        if args.command == "bubble-scan":
            cfg = parse_config(raw)
            return cmd_bubble_scan(cfg)
        if args.command == "gradient-check":
            cfg = parse_config(raw)
            return cmd_gradient_check(cfg)
        raise ConfigError(f"unknown command {args.command}")
    except (ConfigError, json.JSONDecodeError, ValueError) as exc:
        print(f"chemotax: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
