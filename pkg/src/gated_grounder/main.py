"""Main entry point for the grounder command."""

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from gated_grounder.config import ENV_PREFIX, load_run_config
from gated_grounder.errors import (
    ConfigurationError,
    GrounderError,
    NumericError,
    ParseError,
    UsageError,
)
from gated_grounder.models import Split
from gated_grounder.orchestrator import GroundingOrchestrator

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

SPLITS = [split.value for split in Split]


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per workflow."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        default=os.getenv(f"{ENV_PREFIX}CONFIG"),
        help="Flat key=value config file (default: $GROUNDER_CONFIG)",
    )
    common.add_argument("--seed", type=int, help="Master seed")
    common.add_argument("--output-dir", help="Directory for all artifacts")
    common.add_argument("--order", choices=["forward", "backward"], help="Sub-expression order")
    common.add_argument("--no-dgc", action="store_true", help="Disable dynamic gating")
    common.add_argument("--no-egr", action="store_true", help="Disable box regression")
    common.add_argument("--graphs", choices=["a", "c", "both"], help="Graphs taking part")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="grounder",
        description="Graph-based referring expression grounding with dynamic gating",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("generate", parents=[common], help="Write train/val/test splits")
    commands.add_parser("train", parents=[common], help="Train and checkpoint every epoch")

    evaluate = commands.add_parser("eval", parents=[common], help="Evaluate a checkpoint")
    evaluate.add_argument("--checkpoint", help="Checkpoint file (default: latest of the run)")
    evaluate.add_argument("--split", default="test", choices=SPLITS)
    evaluate.add_argument("--trace", action="store_true", help="Write per-item trace tables")

    ablate = commands.add_parser("ablate", parents=[common], help="Run the ablation grid")
    ablate.add_argument("--pdf", action="store_true", help="Also render the table as PDF")

    trace = commands.add_parser("trace", parents=[common], help="Per-step trace of one scene")
    trace.add_argument("--checkpoint", help="Checkpoint file (default: latest of the run)")
    trace.add_argument("--split", default="test", choices=SPLITS)
    trace.add_argument("--index", type=int, default=0, help="Scene position in the split")
    trace.add_argument("--expression", help="Expression replacing the stored one")

    parse = commands.add_parser("parse", parents=[common], help="Parse an expression")
    parse.add_argument("expression", help="Expression to parse")
    parse.add_argument("--dump", action="store_true", help="Print the language graph")

    gradcheck = commands.add_parser("gradcheck", parents=[common], help="Finite-difference check")
    gradcheck.add_argument("--eps", type=float, default=1e-5, help="Perturbation size")
    gradcheck.add_argument("--tolerance", type=float, default=1e-4, help="Max relative error")
    gradcheck.add_argument("--coords", type=int, default=20, help="Coordinates per tensor (0: all)")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Dotted config keys set by command-line flags."""
    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.output_dir:
        overrides["output_dir"] = args.output_dir
    if args.order:
        overrides["ablation.order"] = args.order
    if args.no_dgc:
        overrides["ablation.dgc"] = False
    if args.no_egr:
        overrides["ablation.egr"] = False
    if args.graphs:
        overrides["ablation.graphs"] = args.graphs
    return overrides


def _print_metrics(metrics) -> None:
    print(f"  Acc@0.5:      {100 * metrics.acc_at_0_5:.2f}%")
    print(f"  Raw-box acc:  {100 * metrics.acc_raw_box:.2f}%")
    print(f"  Mean IoU:     {metrics.mean_iou:.4f} (raw {metrics.mean_iou_raw:.4f})")
    print(f"  Examples:     {metrics.count}")


def dispatch(args: argparse.Namespace) -> int:
    """Run one subcommand; returns the exit code."""
    config = load_run_config(args.config, overrides=overrides_from_args(args))

    if args.command == "parse":
        print(GroundingOrchestrator(config).parse_dump(args.expression))
        return EXIT_OK

    orchestrator = GroundingOrchestrator(config)
    print(
        f"\n🚀 grounder {args.command} (config {config.config_hash()[:12]}, seed {config.seed})"
    )

    if args.command == "generate":
        result = orchestrator.generate()
        print("\n✅ Dataset generation completed!")
        for split, path in result["paths"].items():
            print(f"  {split}: {result['counts'][split]} records -> {path}")
    elif args.command == "train":
        result = orchestrator.train()
        print("\n✅ Training completed!")
        print(f"  Metrics: {result['metrics_path']}")
        print(f"  Checkpoint: {result['checkpoint']}")
    elif args.command == "eval":
        metrics = orchestrator.evaluate(args.checkpoint, split=args.split, trace=args.trace)
        print("\n✅ Evaluation completed!")
        _print_metrics(metrics)
    elif args.command == "ablate":
        result = orchestrator.ablate(pdf=args.pdf)
        print("\n✅ Ablation completed!\n")
        print(result["table"])
        print(f"\n  Table: {result['csv_path']}")
        if result.get("pdf_path"):
            print(f"  PDF: {result['pdf_path']}")
    elif args.command == "trace":
        trace, paths = orchestrator.trace(args.checkpoint, args.split, args.index, args.expression)
        print(f"\nExpression: {trace.expression}")
        for step in trace.steps:
            print(
                f"  step {step.step}: '{step.sub_expression}'"
                f" active={step.active} fallback={step.fallback}"
            )
        prediction = trace.prediction
        print(f"  selected node: {prediction.selected_id}")
        print(f"  refined box: {[round(v, 4) for v in prediction.refined_box]}")
        if prediction.degenerate_nodes:
            print(f"  ⚠️  zero-norm scores on nodes {prediction.degenerate_nodes}")
        print(f"\n  Nodes: {paths['nodes']}\n  Edges: {paths['edges']}")
    elif args.command == "gradcheck":
        report = orchestrator.gradcheck(eps=args.eps, coords_per_tensor=args.coords or None)
        print(f"\n  Max relative error: {report.max_rel_error:.3e} at {report.worst}")
        print(f"  Checked: {report.checked}  Skipped (flipped decisions): {report.skipped}")
        if not report.passed(args.tolerance):
            print(f"\n❌ Error: gradient check above tolerance {args.tolerance}", file=sys.stderr)
            return EXIT_NUMERIC
        print("\n✅ Gradient check passed!")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        return dispatch(args)
    except NumericError as e:
        print(f"\n❌ Error: {e} (op: {e.op})", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ConfigurationError, ParseError, FileNotFoundError) as e:
        print(f"\n❌ Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GrounderError as e:
        print(f"\n❌ Error: {e}", file=sys.stderr)
        return EXIT_FAILURE


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
