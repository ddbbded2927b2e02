"""
Command-line entry point.

    python cli.py [--config PATH] [--out DIR] [--seed N] [--threads N] [--tol X] <command> ...

Exit codes: 0 success, 1 verification failure, 2 usage or config error.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pydantic import ValidationError
from pydantic_settings import SettingsError

from config import APP_NAME, APP_VERSION, Settings, load_settings
from models.domain import PhasePoint, ReducedParams, SpacetimePoint
from services.artifacts import write_json
from services.container import ServiceContainer
from services.errors import VerificationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


def _common(parser: argparse.ArgumentParser, defaults: Settings, suppress: bool = False) -> None:
    # subcommands repeat the global flags; SUPPRESS keeps them from resetting values given earlier
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", metavar="PATH", default=default, help="TOML config file")
    parser.add_argument(
        "--out", metavar="DIR", default=default, help=f"Output directory (config default: {defaults.run.out_dir})"
    )
    parser.add_argument(
        "--seed", type=int, default=default, help=f"Seed of every random sample (config default: {defaults.run.seed})"
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=default,
        help=f"Worker processes for sweeps (config default: {defaults.run.threads})",
    )
    parser.add_argument(
        "--tol",
        type=float,
        default=default,
        help=f"Relative tolerance of every ODE solve (config default: geodesic {defaults.geodesic.tol:g},"
        f" reduced {defaults.reduced.tol:g})",
    )
    parser.add_argument(
        "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False, help="Debug logging"
    )


def build_parser() -> argparse.ArgumentParser:
    defaults = load_settings()
    common = argparse.ArgumentParser(add_help=False)
    _common(common, defaults, suppress=True)
    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description="Numerical witnesses for a globally hyperbolic, geodesically complete spacetime "
        "whose Klein-Gordon operator is not essentially self-adjoint.",
    )
    _common(parser, defaults)
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("potential", parents=[common], help="Spike table and summability certificate")
    p.add_argument("--count", type=int, help=f"Number of spikes (config default: {defaults.acceptance.spike_count})")

    p = sub.add_parser("geodesic", parents=[common], help="Integrate one geodesic")
    for name, default in (("eta", 0.0), ("z", 0.0), ("x", 0.5), ("y", 0.0)):
        p.add_argument(f"--{name}", type=float, default=default, help=f"Initial {name} (default: {default})")
    for name, default in (("p-eta", 0.3), ("p-z", 1.0), ("p-x", 1.0), ("p-y", 0.2)):
        p.add_argument(f"--{name}", type=float, default=default, help=f"Initial {name} (default: {default})")
    p.add_argument(
        "--lambda-max", type=float, help=f"Affine reach (config default: {defaults.geodesic.lambda_max:g})"
    )

    p = sub.add_parser("cone", parents=[common], help="Sample causal vectors and check the cone inequalities")
    p.add_argument(
        "--samples", type=int, help=f"Number of vectors (config default: {defaults.acceptance.cone_samples})"
    )
    p.add_argument(
        "--max-n", type=int, help=f"Largest spike index n (config default: {defaults.acceptance.cone_max_n})"
    )

    p = sub.add_parser("diamond", parents=[common], help="Coordinate bounds of J+(p) and J-(q)")
    p.add_argument("--p", nargs=4, type=float, required=True, metavar=("ETA", "Z", "X", "Y"))
    p.add_argument("--q", nargs=4, type=float, required=True, metavar=("ETA", "Z", "X", "Y"))

    p = sub.add_parser("weyl", parents=[common], help="Endpoint classification and deficiency indices")
    for name in ("p-y", "p-z", "p-eta"):
        p.add_argument(f"--{name}", type=float, default=1.0, help=f"Reduced {name} (default: 1.0)")
    p.add_argument("--lambda-im", type=float, default=1.0, help="Im lambda of lambda = i * value (default: 1.0)")

    p = sub.add_parser("normmap", parents=[common], help="Norm grid of psi and the threshold M")
    p.add_argument(
        "--counts",
        nargs=3,
        type=int,
        metavar=("NY", "NZ", "NETA"),
        help=f"Grid points per axis (config default: {' '.join(map(str, defaults.normmap.counts))})",
    )
    p.add_argument("--L", type=float, help=f"Half-width of the norm window (config default: {defaults.normmap.L:g})")
    p.add_argument(
        "--target", type=float, help=f"Target fraction (config default: {defaults.normmap.target_fraction:g})"
    )

    p = sub.add_parser("verify", parents=[common], help="Run the acceptance suite")
    p.add_argument("--only", nargs="+", metavar="CHECK", help="Run only these checks")

    p = sub.add_parser("serve", parents=[common], help="Serve the HTTP API")
    p.add_argument("--host", default="127.0.0.1", help="Bind address (default: 127.0.0.1)")
    p.add_argument("--port", type=int, default=8000, help="Port (default: 8000)")
    return parser


def settings_from_args(args: argparse.Namespace) -> Settings:
    overrides: Dict[str, Dict[str, Any]] = {}
    run: Dict[str, Any] = {}
    if args.out is not None:
        run["out_dir"] = args.out
    if args.seed is not None:
        run["seed"] = args.seed
    if args.threads is not None:
        run["threads"] = args.threads
    if run:
        overrides["run"] = run
    if args.tol is not None:
        overrides["geodesic"] = {"tol": args.tol}
        overrides["reduced"] = {"tol": args.tol}
    return load_settings(args.config, **overrides)


# -- subcommands ----------------------------------------------------------------


def cmd_potential(c: ServiceContainer, args: argparse.Namespace, out: Path) -> int:
    from services.potential_service import admissibility_rows, export_spike_table

    a = c.settings.acceptance
    count = args.count or a.spike_count
    rows = admissibility_rows(c.potential, count)
    summability = c.potential.check_summability(max(count, a.summability_terms))
    export_spike_table(out / "spike-table.csv", rows, c.config_hash, summability)
    write_json(out / "summability.json", summability.model_dump(), c.config_hash)
    ok = summability.verdict == "pass" and all(r["disjoint"] and r["residual_ok"] for r in rows)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_geodesic(c: ServiceContainer, args: argparse.Namespace, out: Path) -> int:
    from services.geodesic_service import export_drift, export_trajectory

    s0 = PhasePoint.from_state([args.eta, args.z, args.x, args.y, args.p_eta, args.p_z, args.p_x, args.p_y])
    trajectory, report = c.geodesic.integrate(s0, lambda_max=args.lambda_max)
    export_trajectory(out / "trajectory.csv", c.geodesic, trajectory, c.config_hash)
    export_drift(out / "drift.json", report, c.config_hash)
    drift_ok = max(report.max_drift.values()) <= c.geodesic.drift_limit()
    return EXIT_OK if drift_ok and report.confined in (True, None) and not report.zdot_violations else EXIT_FAILED


def cmd_cone(c: ServiceContainer, args: argparse.Namespace, out: Path) -> int:
    import numpy as np

    from services.geometry_service import export_cone_report

    a = c.settings.acceptance
    rng = np.random.default_rng(c.settings.run.seed)
    n, x, X = c.geometry.sample_causal_future(rng, args.samples or a.cone_samples, args.max_n or a.cone_max_n)
    rows = c.geometry.cone_report_rows(n, x, X)
    export_cone_report(out / "cone-report.csv", rows, c.config_hash)
    slacks = c.geometry.cone_slacks(X, n)
    tol = 1e-12 * np.maximum(1.0, np.abs(X).max(axis=0) * n)
    ok = bool(np.all(slacks[0] > 0) and np.all(slacks[1:] >= -tol))
    logger.info(f"{'✓' if ok else '✗'} {x.size} causal vectors checked")
    return EXIT_OK if ok else EXIT_FAILED


def cmd_diamond(c: ServiceContainer, args: argparse.Namespace, out: Path) -> int:
    p = SpacetimePoint.from_array(args.p)
    q = SpacetimePoint.from_array(args.q)
    bound = c.geometry.diamond_bounds(p, q)
    write_json(out / "diamond.json", {"p": p, "q": q, "bound": bound}, c.config_hash)
    print(bound.model_dump_json(indent=2))
    return EXIT_OK


def cmd_weyl(c: ServiceContainer, args: argparse.Namespace, out: Path) -> int:
    from services.weyl_service import export_weyl_report, weyl_row

    rp = ReducedParams(p_y=args.p_y, p_z=args.p_z, p_eta=args.p_eta)
    report = c.weyl.classify_endpoint(rp, complex(0.0, args.lambda_im))
    psi = c.weyl.deficiency_psi(rp) if rp.p_z != 0.0 else None
    export_weyl_report(out / "weyl-report.csv", [weyl_row(report, psi)], c.config_hash)
    write_json(out / "weyl-report.json", report.model_dump(), c.config_hash)
    return EXIT_OK


def cmd_normmap(c: ServiceContainer, args: argparse.Namespace, out: Path) -> int:
    from services.normmap_service import export_grid, export_summary, find_threshold

    n = c.settings.normmap
    counts = tuple(args.counts) if args.counts else n.counts
    grid = c.normmap.grid_norms((n.p_y_range, n.p_z_range, n.p_eta_range), counts, args.L or n.L)
    export_grid(out / "norm-grid.csv", grid, c.config_hash)
    report = find_threshold(grid, args.target or n.target_fraction)
    export_summary(out / "threshold.json", grid, report, c.config_hash)
    return EXIT_OK if report.admissible else EXIT_FAILED


def cmd_verify(c: ServiceContainer, args: argparse.Namespace, out: Path) -> int:
    from services.acceptance_service import AcceptanceService

    report = AcceptanceService(c, out).run(args.only)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_serve(c: ServiceContainer, args: argparse.Namespace, out: Path) -> int:
    import uvicorn

    from main import create_app

    uvicorn.run(create_app(c.settings), host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "potential": cmd_potential,
    "geodesic": cmd_geodesic,
    "cone": cmd_cone,
    "diamond": cmd_diamond,
    "weyl": cmd_weyl,
    "normmap": cmd_normmap,
    "verify": cmd_verify,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )
    try:
        cfg = settings_from_args(args)
    except (FileNotFoundError, tomllib.TOMLDecodeError, SettingsError, ValidationError) as e:
        logger.error(f"✗ Invalid configuration: {e}")
        return EXIT_USAGE

    out = Path(cfg.run.out_dir)
    try:
        container = ServiceContainer.from_settings(cfg)
        return COMMANDS[args.command](container, args, out)
    except (VerificationError, ValueError) as e:
        # PreconditionViolation and ZeroPz are also ValueErrors: caller mistakes
        if isinstance(e, VerificationError) and not isinstance(e, ValueError):
            logger.error(f"✗ {args.command} failed: {e}")
            return EXIT_FAILED
        logger.error(f"✗ {args.command}: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
