#!/usr/bin/env python3
"""
T-REG Toolkit Command Line
==========================

Reproducible experiments on MST-regularized point clouds. Every command writes
manifest.json (the fully resolved arguments and seed) to its output directory
before computing anything, and `replay` re-runs a command from that file alone.

Usage:
    python run.py mst --input cloud.csv
    python run.py optimize --preset fig2-3d --out runs/fig2-3d
    python run.py estimate-dim --generator uniform-cube --dim 2 --sizes 256,512,1024,2048
    python run.py collapse-scan --n 2000 --dim 256 --etas 0,0.1,0.2
    python run.py verify --filter lemma1
    python run.py replay runs/fig2-3d/manifest.json

Exit codes: 0 success, 1 verification failure, 2 input error, 3 invariant violation.
"""
import argparse
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from app import __version__
from app.core.config import EXPERIMENT_PRESETS, TREG_CONFIG, get_default_seed, get_preset
from app.core.exceptions import (
    EXIT_INPUT_ERROR,
    EXIT_INVARIANT_VIOLATION,
    EXIT_SUCCESS,
    EXIT_VERIFICATION_FAILED,
    InputValidationError,
    TregError,
)
from app.core.logging_config import setup_logging
from app.schemas.experiment_schema import ExperimentManifest
from app.schemas.generator_schema import GeneratorKind, GeneratorSpec
from app.schemas.optim_schema import OptimConfig
from app.services import mst_engine
from app.services.descent import optimize, summarize_run
from app.services.dim_estimator import estimate_dimension
from app.services.generators import generate
from app.services.point_cloud import PointCloud
from app.services.uniformity import collapse_scan, collapse_spearman
from app.services.utils.io import (
    read_json,
    read_point_cloud,
    save_optim_run,
    write_collapse_scan,
    write_json,
    write_mst_edges,
)
from app.services.verification import CHECKS, run_verification

logger = logging.getLogger(__name__)

IO_CONFIG = TREG_CONFIG["io"]

# Flags of `optimize` that map onto OptimConfig fields
OPTIM_FLAGS = {
    "steps": "steps",
    "lr": "lr",
    "method": "method",
    "objective": "objective",
    "constraint": "constraint",
    "radius": "radius",
    "record_every": "record_every",
    "lr_schedule": "lr_schedule",
    "min_lr": "min_lr",
}
WEIGHT_FLAGS = {
    "beta": "beta",
    "gamma": "gamma",
    "lambda_s": "lambda_s",
    "nu": "nu",
    "tau": "tau",
    "epsilon": "epsilon",
}


def _int_list(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _json_object(text: str) -> Dict[str, Any]:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"invalid JSON: {e}")
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("expected a JSON object")
    return value


def _resolve_source(args: argparse.Namespace, seed: int, default_kind: str, default_n: int,
                    default_dim: int, preset_generator: Optional[dict] = None) -> Dict[str, Any]:
    """Where the point cloud comes from: an input CSV or a generator spec."""
    if getattr(args, "input", None):
        return {"input": os.path.abspath(args.input)}
    if getattr(args, "spec", None):
        return {"generator": GeneratorSpec.from_json_file(args.spec).model_dump(mode="json")}

    base = dict(preset_generator or {"kind": default_kind, "n": default_n, "d": default_dim, "params": {}})
    if args.generator is not None:
        base["kind"] = args.generator
    if args.n is not None:
        base["n"] = args.n
    if args.dim is not None:
        base["d"] = args.dim
    if args.params is not None:
        base["params"] = args.params
    base["seed"] = seed
    return {"generator": GeneratorSpec.model_validate(base).model_dump(mode="json")}


def _load_source(source: Dict[str, Any]) -> PointCloud:
    if "input" in source:
        return read_point_cloud(source["input"])
    return generate(GeneratorSpec.model_validate(source["generator"]))


def resolve_mst(args: argparse.Namespace, seed: int) -> Dict[str, Any]:
    return {
        "source": _resolve_source(args, seed, GeneratorKind.UNIFORM_CUBE.value, 256, 2),
        "alpha": args.alpha,
    }


def resolve_optimize(args: argparse.Namespace, seed: int) -> Dict[str, Any]:
    preset = get_preset(args.preset) if args.preset else None
    source = _resolve_source(
        args, seed, GeneratorKind.ISOTROPIC_GAUSSIAN.value, 256, 3,
        preset_generator=preset["generator"] if preset else None,
    )

    optim = dict(preset["optim"]) if preset else {}
    weights = dict(optim.get("weights", {}))
    for flag, field in OPTIM_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            optim[field] = value
    for flag, field in WEIGHT_FLAGS.items():
        value = getattr(args, flag)
        if value is not None:
            weights[field] = value
    optim["weights"] = weights
    optim["seed"] = seed
    config = OptimConfig.model_validate(optim)
    return {"preset": args.preset, "source": source, "optim": config.model_dump(mode="json")}


def resolve_estimate_dim(args: argparse.Namespace, seed: int) -> Dict[str, Any]:
    config = TREG_CONFIG["dimension"]
    if args.spec:
        generator = GeneratorSpec.from_json_file(args.spec)
    else:
        generator = GeneratorSpec(
            kind=args.generator or GeneratorKind.UNIFORM_CUBE.value,
            n=config["min_size"],
            d=args.dim if args.dim is not None else 2,
            params=args.params or {},
            seed=seed,
        )
    return {
        "generator": generator.model_dump(mode="json"),
        "sizes": args.sizes or list(config["sizes"]),
        "trials": args.trials if args.trials is not None else config["trials"],
        "scale": args.scale,
        "threads": args.threads,
    }


def resolve_collapse_scan(args: argparse.Namespace, seed: int) -> Dict[str, Any]:
    config = TREG_CONFIG["uniformity"]
    return {
        "n": args.n if args.n is not None else config["collapse_n"],
        "d": args.dim if args.dim is not None else config["collapse_dim"],
        "etas": args.etas if args.etas is not None else list(config["collapse_etas"]),
        "threads": args.threads,
    }


def resolve_verify(args: argparse.Namespace, seed: int) -> Dict[str, Any]:
    blocks = [name.strip() for name in args.filter.split(",") if name.strip()] if args.filter else list(CHECKS)
    unknown = [name for name in blocks if name not in CHECKS]
    if unknown or not blocks:
        raise InputValidationError(f"Unknown verification blocks {unknown}; known: {', '.join(CHECKS)}")
    return {"blocks": blocks, "threads": args.threads}


def run_mst(arguments: Dict[str, Any], seed: int, out_dir: str) -> int:
    cloud = _load_source(arguments["source"])
    mst = mst_engine.compute_mst(cloud)
    write_mst_edges(mst, os.path.join(out_dir, "mst_edges.csv"))
    print(f"MST of {cloud.n} points in R^{cloud.d}: {len(mst.edges)} edges")
    print(f"Total length: {mst.total_length!r}")
    alpha = arguments["alpha"]
    if alpha != 1.0:
        print(f"Alpha-length (alpha={alpha}): {mst_engine.alpha_length(mst, alpha)!r}")
    return EXIT_SUCCESS


def run_optimize(arguments: Dict[str, Any], seed: int, out_dir: str) -> int:
    cloud = _load_source(arguments["source"])
    config = OptimConfig.model_validate(arguments["optim"])
    run = optimize(cloud, config)
    summary = summarize_run(run)
    save_optim_run(run, summary, out_dir)

    print(f"Steps run: {summary.steps_run}{' (stopped early on dilation)' if summary.stopped_early else ''}")
    print(f"Final total loss: {summary.final.total:.8g}")
    print(f"E(MST)/n: {summary.mst_length_per_point:.6g}")
    print(f"Mean norm: {summary.initial_mean_norm:.6g} -> {summary.mean_norm:.6g} (cv {summary.norm_cv:.4f})")
    if summary.final_cosine_mean is not None:
        print(f"Pairwise cosine: mean {summary.final_cosine_mean:.6f}, std {summary.final_cosine_std:.6f}")
    if summary.simplex is not None:
        print(f"Simplex residual: {summary.simplex.max_relative_deviation:.4%} "
              f"(centered cosine mean {summary.simplex.mean_cosine:.6f})")
    return EXIT_SUCCESS


def run_estimate_dim(arguments: Dict[str, Any], seed: int, out_dir: str) -> int:
    fit = estimate_dimension(
        GeneratorSpec.model_validate(arguments["generator"]),
        sizes=arguments["sizes"],
        trials=arguments["trials"],
        seed=seed,
        threads=arguments["threads"],
        scale=arguments["scale"],
    )
    write_json(fit.to_json_dict(), os.path.join(out_dir, "dimension_fit.json"))
    estimate = "unbounded" if fit.unbounded else f"{fit.dim_estimate:.4f}"
    print(f"Slope: {fit.slope:.6f}  r^2: {fit.r_squared:.6f}")
    print(f"Estimated dimension: {estimate}")
    return EXIT_SUCCESS


def run_collapse_scan(arguments: Dict[str, Any], seed: int, out_dir: str) -> int:
    scan = collapse_scan(arguments["n"], arguments["d"], arguments["etas"], seed, arguments["threads"])
    write_collapse_scan(scan, os.path.join(out_dir, "collapse_scan.csv"))
    for eta, score in zip(scan.etas, scan.scores):
        print(f"eta={eta:.3f}  -L_E={score:.6f}")
    if len(scan.etas) > 1:
        print(f"Spearman rho: {collapse_spearman(scan):.4f}")
    return EXIT_SUCCESS


def run_verify(arguments: Dict[str, Any], seed: int, out_dir: str) -> int:
    report = run_verification(seed=seed, only=arguments["blocks"], threads=arguments["threads"])
    write_json(report, os.path.join(out_dir, "verification_report.json"))
    for check in report.checks:
        print(f"{'PASS' if check.passed else 'FAIL'}  {check.name}: {check.cases - check.failures}/{check.cases}")
        for line in check.detail:
            print(f"      {line}")
    return EXIT_SUCCESS if report.passed else EXIT_VERIFICATION_FAILED


COMMANDS: Dict[str, Callable[[Dict[str, Any], int, str], int]] = {
    "mst": run_mst,
    "optimize": run_optimize,
    "estimate-dim": run_estimate_dim,
    "collapse-scan": run_collapse_scan,
    "verify": run_verify,
}


RESOLVERS = {
    "mst": resolve_mst,
    "optimize": resolve_optimize,
    "estimate-dim": resolve_estimate_dim,
    "collapse-scan": resolve_collapse_scan,
    "verify": resolve_verify,
}


def execute(command: str, arguments: Dict[str, Any], seed: int, out_dir: str) -> int:
    """
    Write the manifest, then run the command.

    Args:
        command: Subcommand name
        arguments: Resolved arguments
        seed: Seed of the run
        out_dir: Output directory

    Returns:
        Process exit code
    """
    manifest = ExperimentManifest(
        command=command,
        arguments=arguments,
        seed=seed,
        tool_version=__version__,
        output_dir=os.path.abspath(out_dir),
    )
    os.makedirs(out_dir, exist_ok=True)
    write_json(manifest, os.path.join(out_dir, IO_CONFIG["manifest_file"]))
    logger.info(f"Running {command} (seed {seed}) into {out_dir}")
    code = COMMANDS[command](arguments, seed, out_dir)
    logger.info(f"{command} finished with exit code {code}")
    return code


def replay(manifest_path: str, out_dir: Optional[str] = None) -> int:
    """Re-run the command recorded in a manifest."""
    manifest = ExperimentManifest.model_validate(read_json(manifest_path))
    if manifest.command not in COMMANDS:
        raise InputValidationError(f"Manifest names unknown command {manifest.command!r}")
    if manifest.tool_version != __version__:
        logger.warning(f"Manifest written by version {manifest.tool_version}, replaying with {__version__}")
    return execute(manifest.command, manifest.arguments, manifest.seed, out_dir or manifest.output_dir)


def _add_source_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", help="Point cloud CSV (header x0,...,x{d-1})")
    parser.add_argument("--spec", help="JSON generator spec file")
    parser.add_argument("--generator", choices=[kind.value for kind in GeneratorKind], help="Generator kind")
    parser.add_argument("--n", type=int, help="Number of points")
    parser.add_argument("--dim", type=int, help="Ambient dimension")
    parser.add_argument("--params", type=_json_object, help='Generator parameters as JSON, e.g. \'{"radius": 0.001}\'')


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="RNG seed (default: TREG_SEED or 0)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--threads", type=int, default=TREG_CONFIG["parallel"]["default_threads"],
                        help="Worker threads for independent trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treg",
        description="MST-based point-cloud regularization toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Override the log level")
    subparsers = parser.add_subparsers(dest="command", required=True)

    mst_parser = subparsers.add_parser("mst", help="Minimum spanning tree of a point cloud")
    _add_source_flags(mst_parser)
    _add_common_flags(mst_parser)
    mst_parser.add_argument("--alpha", type=float, default=1.0, help="Also report the alpha-length")

    optimize_parser = subparsers.add_parser("optimize", help="Constrained descent on a point cloud")
    _add_source_flags(optimize_parser)
    _add_common_flags(optimize_parser)
    optimize_parser.add_argument("--preset", help="Experiment preset: " + ", ".join(sorted(EXPERIMENT_PRESETS)))
    optimize_parser.add_argument("--objective", choices=["treg", "tregs-two-view", "var-cov"])
    optimize_parser.add_argument("--constraint", choices=["none", "soft-sphere", "clamp-to-ball"])
    optimize_parser.add_argument("--radius", type=float, help="Ball radius for clamp-to-ball")
    optimize_parser.add_argument("--method", choices=["gd", "adam"])
    optimize_parser.add_argument("--steps", type=int)
    optimize_parser.add_argument("--lr", type=float)
    optimize_parser.add_argument("--lr-schedule", dest="lr_schedule", choices=["constant", "linear", "exp"])
    optimize_parser.add_argument("--min-lr", dest="min_lr", type=float, help="Floor of the decaying schedules")
    optimize_parser.add_argument("--record-every", dest="record_every", type=int)
    optimize_parser.add_argument("--beta", type=float, help="Invariance weight")
    optimize_parser.add_argument("--gamma", type=float, help="MST length weight")
    optimize_parser.add_argument("--lambda", dest="lambda_s", type=float, help="Soft sphere weight")
    optimize_parser.add_argument("--nu", type=float, help="Variance weight")
    optimize_parser.add_argument("--tau", type=float, help="Covariance weight")
    optimize_parser.add_argument("--epsilon", type=float, help="Variance stabilizer")

    dim_parser = subparsers.add_parser("estimate-dim", help="Intrinsic dimension from MST growth")
    dim_parser.add_argument("--spec", help="JSON generator spec file")
    dim_parser.add_argument("--generator", choices=[kind.value for kind in GeneratorKind])
    dim_parser.add_argument("--dim", type=int)
    dim_parser.add_argument("--params", type=_json_object)
    dim_parser.add_argument("--sizes", type=_int_list, help="Comma-separated sample sizes")
    dim_parser.add_argument("--trials", type=int)
    dim_parser.add_argument("--scale", type=float, default=1.0, help="Multiply every sample")
    _add_common_flags(dim_parser)

    collapse_parser = subparsers.add_parser("collapse-scan", help="MST spread under coordinate collapse")
    collapse_parser.add_argument("--n", type=int)
    collapse_parser.add_argument("--dim", type=int)
    collapse_parser.add_argument("--etas", type=_float_list, help="Comma-separated collapse fractions")
    _add_common_flags(collapse_parser)

    verify_parser = subparsers.add_parser("verify", help="Run the property verification suite")
    verify_parser.add_argument("--filter", help="Comma-separated blocks: " + ", ".join(CHECKS))
    _add_common_flags(verify_parser)

    replay_parser = subparsers.add_parser("replay", help="Re-run a command from its manifest.json")
    replay_parser.add_argument("manifest", help="Path to manifest.json")
    replay_parser.add_argument("--out", help="Output directory (default: the manifest's)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments, configure logging and run one command.

    Returns:
        Process exit code
    """
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level)

    try:
        if args.command == "replay":
            return replay(args.manifest, args.out)
        seed = args.seed if args.seed is not None else get_default_seed()
        arguments = RESOLVERS[args.command](args, seed)
        out_dir = args.out or os.path.join(IO_CONFIG["default_output_root"], args.command)
        return execute(args.command, arguments, seed, out_dir)
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except TregError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INVARIANT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
