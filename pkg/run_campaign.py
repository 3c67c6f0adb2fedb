#!/usr/bin/env python3
"""Relative entropy orbit explorer - CLI entry point.

Seeded Monte Carlo campaigns over two-qubit spectra and states.

Usage:
    python run_campaign.py SUBCOMMAND [OPTIONS]

Examples:
    # Δ quantities over 10⁶ admissible spectrum pairs
    python run_campaign.py spectra-deltas --samples 1000000 --seed 42 --workers 8

    # △S against its spectral bounds for Ginibre pairs
    python run_campaign.py state-deltas --samples 10000

    # Look for a full-rank superadditivity counterexample and pin it
    python run_campaign.py counterexample --samples 10000 --out results/cex

    # Re-check a pinned counterexample
    python run_campaign.py recheck results/cex/fixture.json

    # Charts for the 10³ and 10⁶ scenarios side by side
    python run_campaign.py plot results/small results/large --out results/figures
"""

import argparse
import logging
import os
import re
import sys
from pathlib import Path


def load_env_local():
    """Load RELENT_* defaults from a .env.local file next to this script."""
    env_file = Path(__file__).parent / ".env.local"
    if not env_file.exists():
        return

    with open(env_file) as f:
        for line in f:
            line = line.strip()
            # Skip comments and empty lines
            if not line or line.startswith("#"):
                continue
            # Parse KEY="value" or KEY=value
            match = re.match(r'^([A-Z_]+)=["\']?([^"\']+)["\']?$', line)
            if match and not os.environ.get(match.group(1)):
                os.environ[match.group(1)] = match.group(2)


# Load .env.local before anything else
load_env_local()

# Add repo root to path
sys.path.insert(0, str(Path(__file__).parent))

from src.campaign import (  # noqa: E402
    DEFAULT_SAMPLES,
    CampaignConfig,
    Experiment,
    invariant_failures,
    recheck_fixture,
    run_campaign,
)
from src.errors import CampaignIOError, ConfigError, DomainError, InvariantViolation, SamplingError  # noqa: E402
from src.plots import generate_report  # noqa: E402
from src.results import ExitCode  # noqa: E402
from src.unitary_opt import Objective  # noqa: E402


def _add_campaign_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--samples", type=int, help="Number of samples (default depends on experiment)")
    parser.add_argument("--seed", type=int, help="Master seed (default: 0)")
    parser.add_argument(
        "--out",
        type=str,
        help="Output directory (default: $RELENT_OUT_DIR or results/<experiment>)",
    )
    parser.add_argument(
        "--workers",
        type=int,
        help="Worker processes (default: $RELENT_WORKERS or 1); never changes results",
    )
    parser.add_argument("--format", choices=["csv", "json"], help="Sample rows format (default: csv)")
    parser.add_argument("--config", type=str, metavar="FILE", help="JSON config; flags override it")


def build_config(args: argparse.Namespace) -> CampaignConfig:
    """Merge --config, environment defaults and flags (flags win)."""
    experiment = Experiment(args.command)
    data = {"experiment": experiment.value}
    if args.config:
        data = CampaignConfig.load(args.config).to_dict()
        if data["experiment"] != experiment.value:
            raise ConfigError(f"{args.config} configures {data['experiment']}, not {experiment.value}")

    if os.environ.get("RELENT_WORKERS") and "workers" not in data:
        data["workers"] = os.environ["RELENT_WORKERS"]
    if os.environ.get("RELENT_OUT_DIR") and "output_dir" not in data:
        data["output_dir"] = str(Path(os.environ["RELENT_OUT_DIR"]) / experiment.value)
    data.setdefault("output_dir", str(Path("results") / experiment.value))
    data.setdefault("n_samples", DEFAULT_SAMPLES[experiment])

    overrides = {
        "n_samples": args.samples,
        "master_seed": args.seed,
        "output_dir": args.out,
        "workers": args.workers,
        "output_format": args.format,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if getattr(args, "sigma_mixed", False):
        data["sigma_mixed"] = True
    if getattr(args, "include_equal_pair", False):
        data["include_equal_pair"] = True
    if getattr(args, "objective", None):
        data["objective"] = args.objective
    try:
        data["workers"] = int(data.get("workers", 1))
    except ValueError as e:
        raise ConfigError(f"workers must be an integer: {e}") from e
    return CampaignConfig.from_dict(data)


def cmd_campaign(args: argparse.Namespace) -> ExitCode:
    config = build_config(args)
    print("Relative entropy orbit explorer")
    print("=" * 60)
    print(f"Experiment: {config.experiment.value}")
    print(f"Samples: {config.n_samples:,} | Seed: {config.master_seed} | Workers: {config.workers}")

    summary = run_campaign(config)
    failures = invariant_failures(summary)
    if failures:
        print(f"\n✗ Internal invariant failures: {failures}")
        return ExitCode.INTERNAL_ASSERTION
    return ExitCode.OK


def cmd_plot(args: argparse.Namespace) -> ExitCode:
    out = Path(args.out) if args.out else Path(args.campaigns[0]) / "figures"
    print(f"Generating charts for {len(args.campaigns)} campaign(s)...")
    paths = generate_report([Path(c) for c in args.campaigns], out, args.quantity)
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return ExitCode.OK


def cmd_recheck(args: argparse.Namespace) -> ExitCode:
    fixture, value = recheck_fixture(args.fixture, tol=args.tol)
    print(f"✓ {args.fixture}: △S = {value:.17g} (stored {fixture.delta_s:.17g})")
    return ExitCode.OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="Relative entropy orbit explorer - seeded campaigns over two-qubit spectra and states",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Environment Variables:
  RELENT_WORKERS   Default worker count
  RELENT_OUT_DIR   Default parent directory for campaign outputs

Exit codes:
  0 success, 2 invalid config, 3 I/O failure, 4 internal invariant failure.
  Negative Δ or △S values are findings, not failures.
        """,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More logging (-v info, -vv debug)")
    sub = parser.add_subparsers(dest="command", required=True)

    for experiment, help_text in (
        (Experiment.SPECTRA_DELTAS, "Δ quantities over admissible spectrum triples"),
        (Experiment.STATE_DELTAS, "△S and its spectral bounds for random two-qubit pairs"),
        (Experiment.ORBIT_VERIFY, "Haar-sampled orbit values against the analytic interval"),
        (Experiment.COUNTEREXAMPLE, "Search for full-rank superadditivity counterexamples"),
        (Experiment.LOCAL_OPT, "Local-unitary optimisation and the local inequality"),
    ):
        p = sub.add_parser(experiment.value, help=help_text)
        _add_campaign_flags(p)
        if experiment is Experiment.STATE_DELTAS:
            p.add_argument("--include-equal-pair", action="store_true", help="Sample 0 uses σ = ρ (△S = 0 fixture)")
        if experiment is Experiment.COUNTEREXAMPLE:
            p.add_argument("--sigma-mixed", action="store_true", help="Fix σ = I/4 (control run)")
        if experiment is Experiment.LOCAL_OPT:
            p.add_argument("--objective", choices=[o.value for o in Objective], help="What to maximise")
        p.set_defaults(handler=cmd_campaign)

    p = sub.add_parser("plot", help="SVG charts and report.html from saved campaigns")
    p.add_argument("campaigns", nargs="+", help="Campaign output directories (one panel each)")
    p.add_argument("--out", type=str, help="Chart directory (default: <first campaign>/figures)")
    p.add_argument("--quantity", action="append", help="Only this quantity (repeatable)")
    p.set_defaults(handler=cmd_plot)

    p = sub.add_parser("recheck", help="Recompute △S of a pinned counterexample fixture")
    p.add_argument("fixture", help="Path to fixture.json")
    p.add_argument("--tol", type=float, default=1e-12, help="Allowed drift (default: 1e-12)")
    p.set_defaults(handler=cmd_recheck)

    args = parser.parse_args(argv)
    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")

    try:
        code = args.handler(args)
    except ConfigError as e:
        print(f"Invalid configuration: {e}", file=sys.stderr)
        code = ExitCode.INVALID_CONFIG
    except (DomainError, SamplingError) as e:
        print(f"Internal numerical failure: {e}", file=sys.stderr)
        code = ExitCode.INTERNAL_ASSERTION
    except (CampaignIOError, OSError) as e:
        print(f"I/O failure: {e}", file=sys.stderr)
        code = ExitCode.IO_FAILURE
    except InvariantViolation as e:
        print(f"Internal invariant failure: {e}", file=sys.stderr)
        if e.digest:
            print(f"  inputs: {e.digest}", file=sys.stderr)
        code = ExitCode.INTERNAL_ASSERTION
    return code.value


if __name__ == "__main__":
    sys.exit(main())
