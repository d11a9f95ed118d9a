#!/usr/bin/env python3
"""
Genealogy Experiment Runner

Runs one experiment subcommand against config/config.yaml (or --config) and
writes CSV tables plus a JSON metadata sidecar. Exit status is 0 only if every
embedded check passes.

    python scripts/run_experiments.py --seed 7 --replicates 10000 oracle
    python scripts/run_experiments.py simulate --process finite-d --n 3
"""

import argparse
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from experiments.converge_d_experiment import ConvergeDExperiment
from experiments.k_sweep_experiment import KSweepExperiment
from experiments.oracle_experiment import OracleExperiment
from experiments.sampling_dist_experiment import SamplingDistExperiment
from experiments.simulate_experiment import SimulateExperiment
from experiments.verify_consistency_experiment import VerifyConsistencyExperiment
from importers.config_importer import build_experiment_config, load_config

EXPERIMENTS = {
    "simulate": SimulateExperiment,
    "verify-consistency": VerifyConsistencyExperiment,
    "sampling-dist": SamplingDistExperiment,
    "k-sweep": KSweepExperiment,
    "converge-d": ConvergeDExperiment,
    "oracle": OracleExperiment,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Simulate and verify structured genealogies with mass extinctions")
    parser.add_argument("--config", default=str(project_root / "config" / "config.yaml"), help="YAML configuration file")
    parser.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
    parser.add_argument("--replicates", type=int, help="Monte Carlo replicates")
    parser.add_argument("--out", dest="output_path", help="output directory")
    parser.add_argument("--jobs", type=int, help="worker processes")

    subparsers = parser.add_subparsers(dest="command", required=True)
    simulate = subparsers.add_parser("simulate", help="simulate any process on the time grid")
    simulate.add_argument("--process", choices=["fast", "slow", "finite-d", "lambda", "xi"])
    simulate.add_argument("--n", type=int)
    simulate.add_argument("--initial", help="partition text, 'scattered' or 'single-deme'")
    simulate.add_argument("--saved-paths", dest="saved_paths", type=int)

    consistency = subparsers.add_parser("verify-consistency", help="rate consistency and sampling consistency")
    consistency.add_argument("--k-max", dest="k_max", type=int)
    consistency.add_argument("--draws", dest="consistency_draws", type=int)

    sampling = subparsers.add_parser("sampling-dist", help="allele-configuration probabilities")
    sampling.add_argument("--n", type=int)

    sweep = subparsers.add_parser("k-sweep", help="binary-merger rate x K over source-deme counts")
    sweep.add_argument("--n", type=int)
    sweep.add_argument("--k-values", dest="k_values", type=int, nargs="+")

    converge = subparsers.add_parser("converge-d", help="finite-D vs limit TV over a ladder of D")
    converge.add_argument("--n", type=int)
    converge.add_argument("--d-values", dest="d_values", type=int, nargs="+")

    subparsers.add_parser("oracle", help="closed-form and uniformization oracles")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {key: value for key, value in vars(args).items() if key not in ("config", "command")}

    try:
        settings = load_config(args.config)
        config = build_experiment_config(settings, overrides)
    except ValueError as e:
        print(f"Error: {e}")
        return 1

    print(f"Running {args.command} (seed={config.seed}, replicates={config.replicates}, jobs={config.jobs})")

    try:
        experiment = EXPERIMENTS[args.command](config, settings)
        report = experiment.run()
    except Exception as e:
        print(f"Error: {args.command} failed: {e}")
        return 1

    print(f"\n{args.command.upper()} SUMMARY")
    print("=" * 50)
    for comparison in report.comparisons:
        print(f"[{comparison.status}] {comparison.name}: {comparison.estimate:.6g} vs {comparison.reference:.6g} "
              f"(se {comparison.standard_error:.3g}, {comparison.provenance})")
    print(f"\nChecks passed: {report.passed_checks}/{report.total_checks}")
    print(f"Processing time: {report.processing_time:.2f}s")
    print("Output files:")
    for path in report.output_files:
        print(f"  {path}")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
