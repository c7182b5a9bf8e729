"""Command-line interface.

Subcommands: gql | simulate | residuals | sweep | validate.  Configuration
comes from an optional JSON file plus flag overrides (flags win); the
REDIMLAB_OUT environment variable overrides the built-in default output
directory.  Exit codes: 0 success, 1 numerical failure, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .csvio import write_csv, write_text
from .errors import ConfigurationError, RedimlabError
from .gql import format_decomposition, split_spectrum
from .manifold import report_to_csv_rows
from .mm import (MmParams, REFERENCE_FAST_COEFFS, REFERENCE_TRANSFORM,
                 Z_EQUATION_NOTE, build_scenarios, fast_quadratic_coefficients,
                 mm_model)
from .pde import Profile1D, SolverConfig, simulate_transient, uniform_grid
from .pipeline import (benchmark_decomposition, run_scenario,
                       scenario_residuals, transform_profile)
from .testsystems import LINEAR_TEST_DIAG, heat_model
from .validation import ValidationRun, run_all

MODELS = ("mm", "linear-test", "heat-test")
SCENARIOS = ("far", "near")
SNAPSHOT_TIMES = (0.0, 1.0, 5.0, 25.0)


@dataclass
class RunConfig:
    command: str = ""
    model: str = "mm"
    scenario: str = "far"
    order: int = 1
    grid: int = 199
    dt: float = 1e-3
    tmax: float = 5000.0
    steady_tol: float = 1e-9
    epsilon: float | None = None   # overrides the GQL estimate
    out: str = "out"
    seed: int = 0
    diag: str = ",".join(str(x) for x in LINEAR_TEST_DIAG)

    def solver_config(self, delta: float) -> SolverConfig:
        return SolverConfig(dt=self.dt, t_max=self.tmax,
                            steady_tol=self.steady_tol, n_interior=self.grid,
                            delta=delta)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="redimlab",
        description="slow-manifold approximations and reaction-diffusion "
                    "profile diagnostics",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("gql", "compute and export a fast/slow decomposition"),
        ("simulate", "march a scenario to its stationary profile"),
        ("residuals", "residual report along a stationary profile"),
        ("sweep", "run the far and near scenarios end to end"),
        ("validate", "run the full acceptance suite"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--model", choices=MODELS)
        p.add_argument("--scenario", choices=SCENARIOS)
        p.add_argument("--order", type=int, choices=(0, 1, 2))
        p.add_argument("--grid", type=int)
        p.add_argument("--dt", type=float)
        p.add_argument("--tmax", type=float)
        p.add_argument("--steady-tol", dest="steady_tol", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--out", type=str)
        p.add_argument("--seed", type=int)
        p.add_argument("--config", type=str)
        p.add_argument("--diag", type=str,
                       help="comma-separated diagonal for the linear test model")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    file_values: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            file_values = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file is not valid JSON: {exc}")
        unknown = set(file_values) - set(asdict(cfg))
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    env_out = os.environ.get("REDIMLAB_OUT")
    if env_out and "out" not in file_values:
        cfg.out = env_out
    for key, value in file_values.items():
        setattr(cfg, key, value)
    for key in ("model", "scenario", "order", "grid", "dt", "tmax",
                "steady_tol", "epsilon", "out", "seed", "diag"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if cfg.model not in MODELS:
        raise ConfigurationError(f"unknown model {cfg.model!r}")
    if cfg.scenario not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {cfg.scenario!r}")
    if cfg.order not in (0, 1, 2):
        raise ConfigurationError(f"order must be 0, 1 or 2, got {cfg.order}")
    outdir = Path(cfg.out)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigurationError(f"output directory is not writable: {exc}")
    return cfg


def _metadata(cfg: RunConfig, **extra) -> dict:
    meta = {"version": __version__, "command": cfg.command, "model": cfg.model,
            "seed": cfg.seed, "z_equation": Z_EQUATION_NOTE}
    meta.update(extra)
    return meta


def _parse_diag(cfg: RunConfig) -> np.ndarray:
    try:
        values = np.array([float(x) for x in cfg.diag.split(",")])
    except ValueError:
        raise ConfigurationError(f"--diag must be comma-separated floats, "
                                 f"got {cfg.diag!r}")
    if values.size < 2:
        raise ConfigurationError("--diag needs at least two entries")
    return values


def cmd_gql(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    if cfg.model == "mm":
        params = MmParams()
        d = benchmark_decomposition(params)
        meta = _metadata(cfg, mode=d.mode, epsilon=d.epsilon,
                         gap_ratio=d.gap_ratio, **params.as_dict())
        write_text(outdir / "gql_decomposition.txt", format_decomposition(d), meta)
        own = fast_quadratic_coefficients(mm_model(params),
                                          np.hstack([d.Zf, d.Zs]))
        ref = fast_quadratic_coefficients(mm_model(params), REFERENCE_TRANSFORM)
        rows = [[k, own[k], ref[k], REFERENCE_FAST_COEFFS[k],
                 abs(ref[k] - REFERENCE_FAST_COEFFS[k])]
                for k in REFERENCE_FAST_COEFFS]
        write_csv(outdir / "fast_rhs_coefficients.csv",
                  ["coefficient", "own_basis", "reference_basis",
                   "published", "reference_abs_error"],
                  rows, meta)
    else:
        diag = _parse_diag(cfg)
        d = split_spectrum(np.diag(diag))
        meta = _metadata(cfg, mode=d.mode, epsilon=d.epsilon,
                         gap_ratio=d.gap_ratio, diag=cfg.diag)
        write_text(outdir / "gql_decomposition.txt", format_decomposition(d), meta)
    print(f"wrote {outdir}/gql_decomposition.txt "
          f"(m_f={d.partition.m_f}, m_s={d.partition.m_s}, "
          f"epsilon={d.epsilon:.6g})")
    return 0


def _write_profiles(cfg: RunConfig, outdir: Path, profiles: list[Profile1D],
                    labels: tuple[str, ...], stem: str, **extra) -> None:
    cols = ["t", "x", *labels]
    rows = []
    for p in profiles:
        for i, x in enumerate(p.grid_x):
            rows.append([p.time, x] + [p.fields[k, i] for k in range(p.n_species)])
    write_csv(outdir / f"{stem}.csv", cols, rows, _metadata(cfg, **extra))


def _run_mm_scenario(cfg: RunConfig):
    params = MmParams()
    d = benchmark_decomposition(params)
    scenario = build_scenarios(params, d)[cfg.scenario]
    config = cfg.solver_config(params.delta)
    times = tuple(t for t in SNAPSHOT_TIMES if t < cfg.tmax)
    steady, snapshots = run_scenario(scenario, config, times)
    return params, d, scenario, steady, snapshots


def cmd_simulate(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    if cfg.model == "heat-test":
        model = heat_model()
        config = cfg.solver_config(delta=0.01)
        x = uniform_grid(cfg.grid)
        initial = Profile1D(grid_x=x, fields=np.sin(np.pi * x)[None, :],
                            left_bc=[0.0], right_bc=[0.0])
        t_end = 0.1
        final = simulate_transient(model, config, initial, [t_end])[0]
        exact = np.exp(-0.01 * np.pi**2 * t_end) * np.sin(np.pi * x)
        err = float(np.max(np.abs(final.fields[0] - exact)) / np.max(np.abs(exact)))
        _write_profiles(cfg, outdir, [initial, final], ("u",),
                        "heat_profile", relative_error_vs_closed_form=err,
                        grid=cfg.grid, integrator=config.scheme)
        print(f"wrote {outdir}/heat_profile.csv (closed-form relative error "
              f"{err:.3e})")
        return 0
    if cfg.model != "mm":
        raise ConfigurationError(f"simulate supports models mm and heat-test, "
                                 f"got {cfg.model!r}")
    params, d, scenario, steady, snapshots = _run_mm_scenario(cfg)
    eps = cfg.epsilon if cfg.epsilon is not None else d.epsilon
    extra = dict(scenario=cfg.scenario, grid=cfg.grid, integrator="implicit_euler",
                 epsilon=eps, converged=bool(steady.converged),
                 t_final=steady.time, **params.as_dict())
    _write_profiles(cfg, outdir, snapshots + [steady], ("X", "Y", "Z"),
                    f"profile_{cfg.scenario}_original", **extra)
    dec_profiles = [transform_profile(d, p) for p in snapshots + [steady]]
    _write_profiles(cfg, outdir, dec_profiles, ("U", "V", "W"),
                    f"profile_{cfg.scenario}_decomposed", **extra)
    print(f"wrote {outdir}/profile_{cfg.scenario}_original.csv and "
          f"_decomposed.csv (converged={steady.converged})")
    return 0 if steady.converged else 1


def cmd_residuals(cfg: RunConfig) -> int:
    if cfg.model != "mm":
        raise ConfigurationError("residuals requires the mm model")
    outdir = Path(cfg.out)
    params, d, scenario, steady, _ = _run_mm_scenario(cfg)
    rep = scenario_residuals(d, scenario, steady, max_order=cfg.order,
                             epsilon_override=cfg.epsilon)
    eps = cfg.epsilon if cfg.epsilon is not None else d.epsilon
    cols, rows = report_to_csv_rows(rep)
    write_csv(outdir / f"residuals_{cfg.scenario}.csv", cols, rows,
              _metadata(cfg, scenario=cfg.scenario, order=cfg.order,
                        epsilon=eps, grid=cfg.grid,
                        integrator="implicit_euler",
                        converged=bool(steady.converged),
                        turning_points=len(rep.turning_points),
                        **params.as_dict()))
    print(f"wrote {outdir}/residuals_{cfg.scenario}.csv "
          f"(max H0 {np.max(rep.H0):.3e})")
    return 0 if steady.converged else 1


def _sweep_one(payload: tuple[dict, str]) -> tuple[str, int]:
    values, scenario = payload
    cfg = RunConfig(**values)
    cfg.scenario = scenario
    cfg.out = str(Path(cfg.out) / scenario)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    code = cmd_simulate(cfg)
    cfg.command = "residuals"
    code = max(code, cmd_residuals(cfg))
    return scenario, code


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.model != "mm":
        raise ConfigurationError("sweep requires the mm model")
    payloads = [(asdict(cfg), s) for s in SCENARIOS]
    with ProcessPoolExecutor(max_workers=2) as pool:
        results = list(pool.map(_sweep_one, payloads))
    worst = 0
    for scenario, code in results:
        print(f"sweep {scenario}: exit {code}")
        worst = max(worst, code)
    return worst


def cmd_validate(cfg: RunConfig) -> int:
    outdir = Path(cfg.out)
    run = ValidationRun(seed=cfg.seed, n_interior=cfg.grid, outdir=outdir)
    results = run_all(run, echo=print)
    summary = {
        "version": __version__,
        "seed": cfg.seed,
        "all_passed": all(r.passed for r in results),
        "criteria": [
            {"criterion": r.criterion, "description": r.description,
             "passed": r.passed, "details": r.details}
            for r in results
        ],
    }
    (outdir / "validate_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n",
        encoding="utf-8")
    failed = [r.criterion for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return 1
    print("all criteria passed")
    return 0


_COMMANDS = {
    "gql": cmd_gql,
    "simulate": cmd_simulate,
    "residuals": cmd_residuals,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[cfg.command](cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except RedimlabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
