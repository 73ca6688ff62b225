"""
Command-line interface for the fault-injection simulator.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from dotenv import load_dotenv

from src.accel.config import FAULT_KINDS, SimulationError
from src.accel.simulator import simulate_dataset
from src.analysis.reports import mitigation_table, sweep_table
from src.analysis.sparsity import sparsity
from src.campaign.config import CampaignConfig, ConfigError, load_config
from src.campaign.presets import AXES, preset_experiments
from src.campaign.runner import CampaignResult, compare_mitigations, run_campaign
from src.campaign.workspace import (
    Workspace,
    prepare_campaign,
    resolve_archive_path,
    save_trained_archive,
    train_archive,
)
from src.mitigate.agreement import agreement_by_class, sign_msb_agreement
from src.mitigate.masking import TECHNIQUES
from src.nn.datasets import load_dataset
from src.nn.reference import predict_reference, reference_error

from .storage import ensure_directory, write_json, write_run_manifest
from .utils import LOG_LEVELS, pe_count, setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

DEFAULT_ITEMS = 10


def load_run_config(args: argparse.Namespace) -> CampaignConfig:
    """The configuration file (or defaults) with command-line overrides applied."""
    config = load_config(args.config) if args.config else CampaignConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        changes["trials"] = args.trials
    if getattr(args, "pes", None) is not None:
        changes["num_pes"] = args.pes
    if getattr(args, "mitigation", None) is not None:
        changes["mitigation"] = args.mitigation
    if getattr(args, "kind", None) is not None:
        changes["fault_kind"] = args.kind
    return config.replace(**changes) if changes else config


def _summary(title: str, lines: List[str]) -> None:
    logger.info("=" * 60)
    logger.info(title)
    for line in lines:
        logger.info(f"  {line}")
    logger.info("=" * 60)


def cmd_train(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    out = ensure_directory(args.out)
    train, test = load_dataset(config.dataset)

    archive, metrics = train_archive(config, train, progress=args.progress)
    path = resolve_archive_path(config, out)
    save_trained_archive(archive, config, path)
    metrics["test_error"] = reference_error(archive, test.inputs, test.labels)
    metrics["float_test_error"] = reference_error(archive, test.inputs, test.labels, mode="float")
    metrics["archive"] = str(path)
    write_json(metrics, out / f"{config.name}_train.json")
    write_run_manifest(out, "train", config, args.config)

    _summary("Training Summary:", [
        f"Topology:        {archive.topology}",
        f"Archive:         {path}",
        f"Train error:     {metrics['error']:.2f}%",
        f"Test error (fx): {metrics['test_error']:.2f}%",
        f"Wrap violations: {metrics['wrap_violations']}",
    ])
    return EXIT_OK


def cmd_infer(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    out = ensure_directory(args.out)
    ws = prepare_campaign(config, out, progress=args.progress)

    engine_error = ws.engine.error()
    baseline = ws.baseline_error
    if engine_error != baseline:
        raise SimulationError(f"batch engine error {engine_error:.4f}% differs from reference {baseline:.4f}%")

    # cycle-by-cycle run over a sample, checked against the flat reference
    items = min(args.items or DEFAULT_ITEMS, len(ws.test))
    sample = ws.test.head(items)
    predicted, trace = simulate_dataset(ws.accelerator, ws.archive, sample.inputs, trace=args.trace)
    expected = predict_reference(ws.archive, sample.inputs)
    mismatches = int(np.count_nonzero(predicted != expected))
    if mismatches:
        raise SimulationError(f"{mismatches} of {items} simulated items disagree with the reference")
    if args.trace:
        trace.write_csv(out / f"{config.name}_trace.csv")

    report = {
        "name": config.name,
        "items": len(ws.test),
        "simulated_items": items,
        "error": baseline,
        "cycles_per_inference": ws.accelerator.cycles_for_inference(),
        "fault_bits": ws.accelerator.total_fault_bits(),
        "transient_fault_space": ws.accelerator.fault_space_size("transient"),
    }
    write_json(report, out / f"{config.name}_infer.json")
    write_run_manifest(out, "infer", config, args.config)

    _summary("Inference Summary:", [
        f"Topology:        {ws.archive.topology} on {config.num_pes} PEs",
        f"Cycles (T):      {report['cycles_per_inference']}",
        f"Fault bits (S):  {report['fault_bits']}",
        f"Test items:      {report['items']}",
        f"Error:           {baseline:.2f}%",
        f"Simulated items: {items} (all match the reference)",
    ])
    return EXIT_OK


def _same_network(config: CampaignConfig, base: CampaignConfig) -> bool:
    return (
        config.training == base.training
        and config.dataset == base.dataset
        and config.widths == base.widths
        and config.archive == base.archive
    )


def _workspace_for(config: CampaignConfig, base: CampaignConfig, base_ws: Workspace, out: Path, progress: bool) -> Workspace:
    """Reuse the baseline network when a preset leaves it unchanged."""
    if not _same_network(config, base):
        return prepare_campaign(config, out, progress)
    if config.num_pes == base.num_pes:
        return base_ws
    return prepare_campaign(config, out, progress, archive=base_ws.archive)


def cmd_campaign(args: argparse.Namespace) -> int:
    base = load_run_config(args)
    out = ensure_directory(args.out)
    base_ws = prepare_campaign(base, out, progress=args.progress)

    configs = [base]
    if args.preset:
        configs = preset_experiments(args.preset, base, base_ws.archive.formats)

    results: Dict[str, CampaignResult] = {}
    for config in configs:
        ws = _workspace_for(config, base, base_ws, out, args.progress)
        result = run_campaign(config, ws, progress=args.progress)
        result.write(out)
        results[config.name] = result
    write_run_manifest(out, "campaign", base, args.config)

    lines = [f"Baseline error: {base_ws.baseline_error:.2f}%"]
    for name, result in results.items():
        top = result.points[-1]
        lines.append(f"{name}: median {top.median:.2f}% at k={top.count} ({top.trials} trials)")
    _summary("Campaign Summary:", lines)
    return EXIT_OK


def cmd_mitigate_eval(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    out = ensure_directory(args.out)
    ws = prepare_campaign(config, out, progress=args.progress)

    results = compare_mitigations(config, ws, TECHNIQUES, progress=args.progress)
    for result in results.values():
        result.write(out)
    table = mitigation_table(results)
    table_path = out / f"{config.name}_mitigation.csv"
    table.write_csv(table_path)
    write_run_manifest(out, "mitigate-eval", config, args.config)

    lines = [f"Table: {table_path}"]
    for row in table.iter_rows(named=True):
        medians = ", ".join(f"{t}={row[f'median_{t}']:.2f}%" for t in results)
        lines.append(f"k={row['k']}: {medians}")
    _summary("Mitigation Summary:", lines)
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace) -> int:
    config = load_run_config(args)
    out = ensure_directory(args.out)

    if args.result:
        result = CampaignResult.load(args.result)
        table = sweep_table(result)
        path = out / f"{result.name}_sweep.csv"
        table.write_csv(path)
        lines = [f"Sweep table: {path}"]
        for k, report in result.convergence().items():
            lines.append(
                f"k={k}: median {report.final_median:.2f}%, "
                f"converged after {report.trials_to_converge} trials"
            )
        write_run_manifest(out, "analyze", config, args.config)
        _summary(f"Analysis of {result.name}:", lines)
        return EXIT_OK

    ws = prepare_campaign(config, out, progress=args.progress)
    items = min(args.items or DEFAULT_ITEMS, len(ws.test))
    _, trace = simulate_dataset(ws.accelerator, ws.archive, ws.test.inputs[:items], trace=True)
    if args.trace:
        trace.write_csv(out / f"{config.name}_trace.csv")

    report = sparsity(trace)
    report.frame().write_csv(out / f"{config.name}_sparsity.csv")
    report.histogram_frame().write_csv(out / f"{config.name}_ir_histogram.csv")
    by_class = agreement_by_class(trace)
    pooled = sign_msb_agreement(trace, ["WR", "IMR"])
    write_json(
        {
            "name": config.name,
            "items": items,
            "zero_bits": report.zero_bits,
            "one_bits": report.one_bits,
            "zero_to_one_ratio": report.ratio,
            "ir_histogram": report.ir_histogram,
            "sign_msb_agreement": by_class,
            "sign_msb_agreement_wr_imr": pooled,
        },
        out / f"{config.name}_analysis.json",
    )
    write_run_manifest(out, "analyze", config, args.config)

    ratio = f"{report.ratio:.2f}" if report.ratio is not None else "n/a"
    _summary("Analysis Summary:", [
        f"Items traced:     {items} ({len(trace)} register writes)",
        f"Zero/one ratio:   {ratio}",
        f"Sign/MSB (WR+IMR): {pooled:.4f}",
    ])
    return EXIT_OK


COMMANDS = {
    "train": cmd_train,
    "infer": cmd_infer,
    "campaign": cmd_campaign,
    "mitigate-eval": cmd_mitigate_eval,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faultline",
        description="Register fault injection on a streaming fixed-point NN accelerator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Train, calibrate and quantize the configured network
  python -m src.cli train --config configs/desk.json --out results

  # Fault-free inference, cross-checked cycle by cycle on 20 items
  python -m src.cli infer --config configs/desk.json --items 20 --trace

  # Stuck-at-1 sweep over every register class, 1000 trials per fault count
  python -m src.cli campaign --config configs/desk.json --preset nn-data --trials 1000

  # Compare no mitigation with word, bit and hybrid masking
  python -m src.cli mitigate-eval --config configs/desk.json --kind transient

  # Sparsity and sign/MSB agreement from traced inferences
  python -m src.cli analyze --config configs/desk.json --items 50
        """
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Campaign configuration (JSON). Default: built-in digits setup")
    common.add_argument("--seed", type=int, help="Override the campaign seed")
    common.add_argument("--out", default="results", help="Output directory. Default: results")
    common.add_argument(
        "--log-level",
        default="INFO",
        choices=LOG_LEVELS,
        help="Logging level. Default: INFO",
    )
    common.add_argument(
        "--no-progress",
        dest="progress",
        action="store_false",
        help="Disable progress bars",
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    subparsers.add_parser("train", parents=[common], help="Train and quantize a network")

    infer = subparsers.add_parser("infer", parents=[common], help="Fault-free inference")
    infer.add_argument("--items", type=int, help=f"Items simulated cycle by cycle. Default: {DEFAULT_ITEMS}")
    infer.add_argument("--trace", action="store_true", help="Write the register trace CSV")

    for name, help_text in (("campaign", "Run a fault-injection campaign"), ("mitigate-eval", "Compare mitigation techniques")):
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("--trials", type=int, help="Trials per fault count")
        sub.add_argument("--pes", type=pe_count, help="Number of processing elements (power of two)")
        sub.add_argument("--kind", choices=FAULT_KINDS, help="Fault kind")
        if name == "campaign":
            sub.add_argument("--preset", choices=AXES, help="Expand the config along one experiment axis")
            sub.add_argument("--mitigation", choices=TECHNIQUES, help="Mitigation technique")

    analyze = subparsers.add_parser("analyze", parents=[common], help="Sparsity, agreement and sweep reports")
    analyze.add_argument("--items", type=int, help=f"Items to trace. Default: {DEFAULT_ITEMS}")
    analyze.add_argument("--result", help="Campaign result JSON to tabulate")
    analyze.add_argument("--trace", action="store_true", help="Write the register trace CSV")
    analyze.add_argument("--pes", type=pe_count, help="Number of processing elements (power of two)")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point."""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)

    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_USAGE
    except Exception as e:
        logger.error(f"Fatal error: {e}")
        logger.debug("Traceback:", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
