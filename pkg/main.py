"""Main entry point for the top-view fisheye renderer."""

import argparse
import json
import logging
import sys
from pathlib import Path

from src.config import get_config
from src.dataset.annotation import GroundTruthError
from src.dataset.statistics import dataset_statistics
from src.dataset.validation import validate_dataset
from src.dataset.writer import SPLITS, DatasetIndex, DatasetReadError, DatasetWriteError
from src.evaluation.metrics import MetricError
from src.evaluation.report import EvaluationInputError, run_eval
from src.geometry.camera_io import load_camera
from src.geometry.fisheye import CameraModelError, ray_crossing_diagnostic
from src.logging_config import setup_logging
from src.pipeline.config import ConfigError
from src.pipeline.demo import write_demo_inputs
from src.pipeline.runner import cmd_render
from src.rendering.voxel import VoxelFormatError, load_voxel_grid, voxel_info

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1  # render failures or validation violations
EXIT_INPUT = 2  # invalid config, schema or input file
EXIT_IO = 3  # missing dataset root or unwritable output

INPUT_ERRORS = (
    ConfigError,
    GroundTruthError,
    EvaluationInputError,
    MetricError,
    CameraModelError,
    VoxelFormatError,
)
IO_ERRORS = (DatasetReadError, DatasetWriteError, OSError)


# ═══════════════════════════════════════════════════════════════
# SUBCOMMANDS
# ═══════════════════════════════════════════════════════════════


def run_render_command(args: argparse.Namespace) -> int:
    summary = cmd_render(
        args.config,
        keep_going=args.keep_going,
        out=args.out,
        workers=args.workers,
        seed=args.seed,
        supersample=args.supersample,
    )
    print(json.dumps({"sets": len(summary.sets), "files": summary.files, "failures": len(summary.failures)}))
    return EXIT_OK if summary.ok else EXIT_FAILED


def run_inspect_rays(args: argparse.Namespace) -> int:
    cam = load_camera(args.camera)
    diagnostic = ray_crossing_diagnostic(cam, args.side)

    print("u v q_x q_y valid")
    for u, v, q_x, q_y, valid in diagnostic.rows():
        print(f"{u!r} {v!r} {q_x!r} {q_y!r} {int(valid)}")

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 6))
        q = diagnostic.q[diagnostic.valid]
        ax.scatter(q[:, 0], q[:, 1], s=2, c="tab:blue")
        ax.set_aspect("equal")
        ax.set_xlabel("q_x (px)")
        ax.set_ylabel("q_y (px)")
        ax.set_title(f"Ray cross points, {args.side}x{args.side} grid")
        fig.savefig(args.plot, dpi=150, bbox_inches="tight")
        plt.close(fig)
        logger.info(f"ℹ️ Cross-point plot written to {args.plot}")
    return EXIT_OK


def run_validate(args: argparse.Namespace) -> int:
    report = validate_dataset(args.root)
    print(report.model_dump_json(indent=2))
    return EXIT_OK if report.ok else EXIT_FAILED


def run_evaluate(args: argparse.Namespace) -> int:
    report = run_eval(args.predictions, args.gt_root, args.mode, out=args.out, split=args.split)
    if args.out is None:
        print(json.dumps(report, indent=2))
    return EXIT_OK


def run_split(args: argparse.Namespace) -> int:
    index = DatasetIndex.load(args.root)
    if not index.path.exists():
        raise DatasetReadError(f"No dataset index under {args.root}")
    counts = index.assign_splits(args.val)
    index.save()
    print(json.dumps(counts))
    return EXIT_OK


def run_voxel_info(args: argparse.Namespace) -> int:
    info = voxel_info(load_voxel_grid(args.path))
    for key, value in info.items():
        print(f"{key}: {value}")
    return EXIT_OK


def run_stats(args: argparse.Namespace) -> int:
    stats = dataset_statistics(args.root, by_split=args.by_split)
    print(stats.to_string())
    return EXIT_OK


def run_demo(args: argparse.Namespace) -> int:
    config_path = write_demo_inputs(args.directory, size=args.size, n_samples=args.samples)
    print(config_path)
    return EXIT_OK


# ═══════════════════════════════════════════════════════════════
# ARGUMENT PARSING
# ═══════════════════════════════════════════════════════════════


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topview", description="Top-view fisheye dataset renderer and pose evaluation"
    )
    parser.add_argument("--log-level", help="Override the log level (DEBUG, INFO, WARNING, ERROR)")
    parser.add_argument("--log-file", type=Path, help="Also write log records to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    render = sub.add_parser("render", help="Render all frames and passes of a pipeline config")
    render.add_argument("--config", required=True, type=Path, help="Pipeline config (JSON)")
    render.add_argument("--out", help="Output dataset root (overrides output_dir)")
    render.add_argument("--workers", type=int, help="Render processes (default: all cores)")
    render.add_argument("--seed", type=int, help="Stratified sampling seed")
    render.add_argument("--supersample", type=int, help="k for k x k samples per pixel")
    render.add_argument("--keep-going", action="store_true", help="Continue after a frame fails")
    render.set_defaults(handler=run_render_command)

    inspect = sub.add_parser("inspect-rays", help="List tan-plane ray cross points of a camera")
    inspect.add_argument("camera", type=Path, help="Camera file (JSON)")
    inspect.add_argument("--side", type=int, default=50, help="Grid size per axis")
    inspect.add_argument("--plot", type=Path, help="Also save a scatter plot (PNG)")
    inspect.set_defaults(handler=run_inspect_rays)

    validate = sub.add_parser("validate", help="Validate a generated dataset")
    validate.add_argument("root", type=Path, help="Dataset root")
    validate.set_defaults(handler=run_validate)

    evaluate = sub.add_parser("eval", help="Evaluate predictions against a dataset")
    evaluate.add_argument("predictions", type=Path, help="Prediction file (JSON)")
    evaluate.add_argument("--gt-root", required=True, type=Path, help="Dataset root with index.json")
    evaluate.add_argument("--mode", choices=["2d", "3d"], default="2d")
    evaluate.add_argument("--out", type=Path, help="Report file (default: print)")
    evaluate.add_argument("--split", choices=SPLITS, help="Only score images of this split")
    evaluate.set_defaults(handler=run_evaluate)

    voxels = sub.add_parser("voxel-info", help="Summarize an NVOX voxel file")
    voxels.add_argument("path", type=Path)
    voxels.set_defaults(handler=run_voxel_info)

    split = sub.add_parser("split", help="Split a dataset into train and val by actor")
    split.add_argument("root", type=Path, help="Dataset root")
    split.add_argument("--val", nargs="+", required=True, metavar="ACTOR", help="Validation actors")
    split.set_defaults(handler=run_split)

    stats = sub.add_parser("stats", help="Per actor and pass statistics of a dataset")
    stats.add_argument("root", type=Path)
    stats.add_argument("--by-split", action="store_true", help="Group by train/val split")
    stats.set_defaults(handler=run_stats)

    demo = sub.add_parser("demo", help="Write the demo sequence and config")
    demo.add_argument("directory", type=Path)
    demo.add_argument("--size", type=int, default=256, help="Image width and height")
    demo.add_argument("--samples", type=int, default=128, help="Samples per ray")
    demo.set_defaults(handler=run_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Run the command line interface.

    Args:
        argv: Arguments without the program name (default: sys.argv[1:])

    Returns:
        Process exit status
    """
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file)
    debug = (args.log_level or get_config().log_level).upper() == "DEBUG"

    try:
        return int(args.handler(args))
    except INPUT_ERRORS as e:
        logger.error(f"❌ {e}", exc_info=debug)
        return EXIT_INPUT
    except IO_ERRORS as e:
        logger.error(f"❌ {e}", exc_info=debug)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
