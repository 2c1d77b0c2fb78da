"""Command-line front end.

Subcommands: mesh | operators | advect | diffuse | maxwell | swe |
compare.  PDE runs are driven by a JSON config file (see config.py for
the schema) with individual entries overridable by flags; mesh and
operator studies are flag-only.  Exit codes are a stable contract:

    0  success
    2  usage, bad flag values, config or schema errors
    3  mesh generation failure (spring relaxation did not converge)
    4  solver failure (non-finite state or depth positivity loss);
       the failing time is stamped into <stem>_failure.json

MMF_THREADS caps worker parallelism.  Element loops are vectorized, so
the cap is enforced by pinning the process to that many CPUs (and by
exporting the corresponding BLAS thread variables for child code).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .config import (ALIGNMENTS, STRATEGIES, RunConfig, apply_overrides,
                     config_to_dict, load_run_config)
from .errors import (ConfigError, MeshFormatError, NonFiniteState,
                     PositivityLoss, SchemaMismatch, SpringNonConvergence)


def _cap_threads():
    raw = os.environ.get("MMF_THREADS")
    if raw is None or raw == "":
        return
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"MMF_THREADS must be an integer, got {raw!r}")
    if cap < 1:
        raise ConfigError("MMF_THREADS must be >= 1")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(var, str(cap))
    if hasattr(os, "sched_setaffinity"):
        cpus = sorted(os.sched_getaffinity(0))
        os.sched_setaffinity(0, set(cpus[:cap]))


def _parse_order_range(text: str) -> range:
    """'a..b' inclusive, or a single order 'a'."""
    parts = text.split("..")
    try:
        if len(parts) == 1:
            lo = hi = int(parts[0])
        elif len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise ConfigError(f"order range must look like 'a..b', got {text!r}")
    if lo > hi:
        raise ConfigError(f"empty order range {text!r}")
    return range(lo, hi + 1)


def _outdir(path_str: str) -> Path:
    out = Path(path_str)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- mesh

def cmd_mesh(args) -> int:
    from .diagnostics import DiagnosticsSeries
    from .sphere_mesh import (build_sphere_mesh, geometric_approximation_error,
                              mesh_error, save_mesh)

    if args.sweep_p is not None:
        orders = _parse_order_range(args.sweep_p)
    else:
        orders = range(args.p_geom, args.p_geom + 1)
    out = _outdir(args.out)
    table = DiagnosticsSeries(
        columns=("p_geom[order]", "dof[count]", "mesh_error[rms]",
                 "gae[rms]"))
    for p_geom in orders:
        mesh = build_sphere_mesh(args.n, p_geom, args.strategy)
        gae = geometric_approximation_error(mesh)
        table.append(p_geom, mesh.n_elements * (p_geom + 1) ** 2,
                     mesh_error(mesh), gae)
        save_mesh(mesh, out / f"mesh_{args.strategy}_n{args.n}_p{p_geom}.json")
        print(f"p_geom={p_geom}  gae={gae:.6e}")
    csv_path = out / f"mesh_{args.strategy}_n{args.n}.csv"
    table.write_csv(csv_path)
    print(f"wrote {csv_path}")
    return 0


# ----------------------------------------------------------- operators

def cmd_operators(args) -> int:
    from .diagnostics import DiagnosticsSeries
    from .operators import fitted_decay_decades_per_order, run_operator_study

    orders = _parse_order_range(args.p)
    rows = run_operator_study(args.op, args.strategy, args.alignment, orders,
                              n_per_face=args.n, progress=print)
    table = DiagnosticsSeries(
        columns=("p[order]", "dof[count]", "l2[rel]", "linf[rel]"))
    for row in rows:
        table.append(row.p, row.dof, row.l2_error, row.linf_error)
    out = _outdir(args.out)
    csv_path = out / f"operators_{args.op}_{args.strategy}_{args.alignment}.csv"
    table.write_csv(csv_path)
    rate = fitted_decay_decades_per_order(rows)
    print(f"fitted decay: {rate:.3f} decades per order")
    print(f"wrote {csv_path}")
    return 0


# ------------------------------------------------------------ PDE runs

def _load_pde_config(args) -> RunConfig:
    config = load_run_config(args.config) if args.config else RunConfig()
    return apply_overrides(
        config, n_per_face=args.n, p_geom=args.p_geom, strategy=args.strategy,
        case=getattr(args, "case", None), p=args.p, dt=args.dt,
        t_final=args.t_final, alignment=args.alignment,
        upwind_alpha=getattr(args, "upwind_alpha", None),
        directory=args.out, cadence=args.cadence)


def _discretize(config: RunConfig):
    from .frames import build_frames
    from .sem import compute_geometry, make_reference_element
    from .sphere_mesh import build_sphere_mesh

    mesh = build_sphere_mesh(config.mesh.n_per_face, config.geometry_order(),
                             config.mesh.strategy)
    geometry = compute_geometry(mesh, make_reference_element(config.solver.p))
    frames = build_frames(geometry, config.solver.alignment)
    return mesh, geometry, frames


def _write_run_outputs(stem: str, config: RunConfig, series, fields: dict,
                       final_time: float, wall: float) -> None:
    out = _outdir(config.output.directory)
    formats = config.output.formats
    series.metadata.setdefault("config", config_to_dict(config))
    series.metadata["wall_time_s"] = wall
    if "csv" in formats:
        series.write_csv(out / f"{stem}.csv")
        print(f"wrote {out / (stem + '.csv')}")
    if "json" in formats:
        series.write_metadata(out / f"{stem}_metadata.json")
        dump = {"time": final_time,
                "fields": {k: v.tolist() for k, v in fields.items()}}
        (out / f"{stem}_fields.json").write_text(
            json.dumps(dump) + "\n")
        print(f"wrote {out / (stem + '_fields.json')}")
    last = series.rows[-1]
    print("final row: " + ", ".join(
        f"{c}={v:.6e}" for c, v in zip(series.columns, last)))


def _write_failure(config: RunConfig, stem: str, exc) -> None:
    out = _outdir(config.output.directory)
    report = {"error": type(exc).__name__, "message": str(exc),
              "time": getattr(exc, "time", None)}
    (out / f"{stem}_failure.json").write_text(
        json.dumps(report, indent=2) + "\n")
    print(f"solver failure at t={report['time']}: {exc}", file=sys.stderr)


def cmd_advect(args) -> int:
    from .advection import AdvectionCase, advect_solve

    config = _load_pde_config(args)
    case = AdvectionCase()
    if config.solver.dt is not None:
        case = AdvectionCase(dt=config.solver.dt, t_final=case.t_final)
    if config.solver.t_final is not None:
        case = AdvectionCase(dt=case.dt, t_final=config.solver.t_final)
    stem = "advect"
    t0 = time.perf_counter()
    try:
        _, geometry, frames = _discretize(config)
        series, u_final = advect_solve(
            geometry, frames, case, observe_every=config.output.cadence)
    except (NonFiniteState, PositivityLoss) as exc:
        _write_failure(config, stem, exc)
        return 4
    _write_run_outputs(stem, config, series, {"u": u_final},
                       case.t_final, time.perf_counter() - t0)
    return 0


def cmd_diffuse(args) -> int:
    from .reaction_diffusion import (ReactionDiffusionParams,
                                     reaction_diffusion_solve)

    config = _load_pde_config(args)
    kwargs = {}
    if config.solver.dt is not None:
        kwargs["dt"] = config.solver.dt
    if config.solver.t_final is not None:
        kwargs["t_final"] = config.solver.t_final
    params = ReactionDiffusionParams(**kwargs)
    stem = "diffuse"
    t0 = time.perf_counter()
    try:
        _, geometry, frames = _discretize(config)
        series, (u, v) = reaction_diffusion_solve(
            geometry, frames, params, observe_every=config.output.cadence)
    except (NonFiniteState, PositivityLoss) as exc:
        _write_failure(config, stem, exc)
        return 4
    _write_run_outputs(stem, config, series, {"u": u, "v": v},
                       params.t_final, time.perf_counter() - t0)
    return 0


def cmd_maxwell(args) -> int:
    from .frames import build_connections
    from .maxwell import MaxwellParams, maxwell_solve

    config = _load_pde_config(args)
    kwargs = dict(config.solver.flux)
    if config.solver.dt is not None:
        kwargs["dt"] = config.solver.dt
    if config.solver.t_final is not None:
        kwargs["t_final"] = config.solver.t_final
    params = MaxwellParams(**kwargs)
    stem = "maxwell"
    t0 = time.perf_counter()
    try:
        _, geometry, frames = _discretize(config)
        connections = build_connections(frames, geometry)
        series, (h1, h2, e3) = maxwell_solve(
            geometry, frames, connections, params,
            observe_every=config.output.cadence)
    except (NonFiniteState, PositivityLoss) as exc:
        _write_failure(config, stem, exc)
        return 4
    _write_run_outputs(stem, config, series, {"H1": h1, "H2": h2, "E3": e3},
                       params.t_final, time.perf_counter() - t0)
    return 0


def cmd_swe(args) -> int:
    from .swe import WILLIAMSON_CASES, swe_run_case

    config = _load_pde_config(args)
    case_name = config.solver.case or "steady-zonal"
    disturbed = False
    if case_name == "rossby-haurwitz-disturbed":
        case_name, disturbed = "rossby-haurwitz", True
    if case_name not in WILLIAMSON_CASES:
        known = ", ".join(sorted(WILLIAMSON_CASES) +
                          ["rossby-haurwitz-disturbed"])
        raise ConfigError(f"unknown SWE case {case_name!r}; known: {known}")
    case_cls = WILLIAMSON_CASES[case_name]
    case = case_cls(disturbed=True) if disturbed else case_cls()
    stem = f"swe-{config.solver.case or case_name}"
    t0 = time.perf_counter()
    try:
        _, geometry, frames = _discretize(config)
        series, state = swe_run_case(
            geometry, frames, case, dt=config.solver.dt,
            t_final=config.solver.t_final,
            observe_every=config.output.cadence)
    except (NonFiniteState, PositivityLoss) as exc:
        _write_failure(config, stem, exc)
        return 4
    fields = {"H": state.h, "Hu1": state.hu1, "Hu2": state.hu2}
    final_t = series.rows[-1][0]
    _write_run_outputs(stem, config, series, fields, final_t,
                       time.perf_counter() - t0)
    return 0


# ------------------------------------------------------------- compare

def cmd_compare(args) -> int:
    from .diagnostics import compare_series, format_compare_report, read_series

    report = compare_series(read_series(args.series_a),
                            read_series(args.series_b))
    print(format_compare_report(report))
    return 0


# ------------------------------------------------------------- parsing

def _add_pde_flags(sub, with_case: bool = False, with_alpha: bool = False):
    sub.add_argument("--config", help="JSON run configuration file")
    sub.add_argument("--n", type=int, help="elements per cube-face edge")
    sub.add_argument("--p", type=int, help="solution polynomial order")
    sub.add_argument("--p-geom", dest="p_geom", type=int,
                     help="geometry order (default: same as --p)")
    sub.add_argument("--strategy", choices=STRATEGIES)
    sub.add_argument("--alignment", choices=ALIGNMENTS)
    sub.add_argument("--dt", type=float)
    sub.add_argument("--t-final", dest="t_final", type=float)
    sub.add_argument("--cadence", type=int, help="observation stride in steps")
    sub.add_argument("--out", help="output directory")
    if with_case:
        sub.add_argument("--case", help="test case name")
    if with_alpha:
        sub.add_argument("--upwind-alpha", dest="upwind_alpha", type=float,
                         help="interface upwinding weight in [0, 1]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmfsphere",
        description="Spectral-element studies on cubed-sphere meshes")
    subs = parser.add_subparsers(dest="command", required=True)

    mesh = subs.add_parser("mesh", help="generate meshes, report errors")
    mesh.add_argument("--n", type=int, default=4)
    mesh.add_argument("--p-geom", dest="p_geom", type=int, default=4)
    mesh.add_argument("--strategy", choices=STRATEGIES, default="optimized")
    mesh.add_argument("--sweep-p", dest="sweep_p",
                      help="inclusive geometry-order range 'a..b'")
    mesh.add_argument("--out", default=".")
    mesh.set_defaults(func=cmd_mesh)

    ops = subs.add_parser("operators", help="operator convergence study")
    from .operators import OPERATOR_IDS
    ops.add_argument("--op", choices=OPERATOR_IDS, required=True)
    ops.add_argument("--strategy", choices=STRATEGIES, default="optimized")
    ops.add_argument("--alignment", choices=ALIGNMENTS, default="local")
    ops.add_argument("--p", default="2..8",
                     help="inclusive order range 'a..b'")
    ops.add_argument("--n", type=int, default=4)
    ops.add_argument("--out", default=".")
    ops.set_defaults(func=cmd_operators)

    advect = subs.add_parser("advect", help="cosine-bell advection run")
    _add_pde_flags(advect)
    advect.set_defaults(func=cmd_advect)

    diffuse = subs.add_parser("diffuse", help="reaction-diffusion run")
    _add_pde_flags(diffuse)
    diffuse.set_defaults(func=cmd_diffuse)

    maxwell = subs.add_parser("maxwell", help="Maxwell TM pulse run")
    _add_pde_flags(maxwell, with_alpha=True)
    maxwell.set_defaults(func=cmd_maxwell)

    swe = subs.add_parser("swe", help="shallow-water test case run")
    _add_pde_flags(swe, with_case=True)
    swe.set_defaults(func=cmd_swe)

    compare = subs.add_parser("compare", help="ratio report for two series")
    compare.add_argument("series_a")
    compare.add_argument("series_b")
    compare.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    try:
        _cap_threads()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (ConfigError, SchemaMismatch, MeshFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SpringNonConvergence as exc:
        print(f"mesh generation failed: {exc}", file=sys.stderr)
        return 3
    except (NonFiniteState, PositivityLoss) as exc:
        # run commands usually handle these with a report; this is the
        # fallback for failures outside a run context
        print(f"solver failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
