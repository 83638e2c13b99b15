"""
Command line interface

    pyprbgan train --config exp.cfg [--seed k] [--variant name] [--out dir]
    pyprbgan train --preset paper [--steps n]
    pyprbgan eval --samples samples.csv --mixture exp.cfg [--plot fig.png] [--json]
    pyprbgan gradcheck [--nets 20] [--seed 0]

Exit codes: 0 success, 1 failure, 2 configuration or usage error,
3 numeric abort during training.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional
import argparse
import json
import logging
import sys

import numpy as np

from pyprbgan.core.config import (
    MIXTURE_PRESETS,
    ExperimentConfig,
    Settings,
    get_settings,
    set_settings,
)
from pyprbgan.core.errors import ConfigError, NumericError, PrbGanError
from pyprbgan.core.experiment import EXIT_CONFIG, EXIT_FAILURE, EXIT_NUMERIC, EXIT_OK, preset_paper_1d, run
from pyprbgan.data.synthetic import MixtureSpec, sample
from pyprbgan.evaluation.coverage import mode_coverage
from pyprbgan.evaluation.plots import plot_histograms
from pyprbgan.gan.config import Variant
from pyprbgan.gan.gradcheck_suite import run_gradcheck_suite
from pyprbgan.utils.file_parsers import read_samples_csv
from pyprbgan.utils.output_writers import format_report, make_json_serializable, write_report_text

logger = logging.getLogger("pyprbgan")

CONFIG_PRESETS = {"paper": preset_paper_1d}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--no-progress", action="store_true", help="Disable progress bars")

    parser = argparse.ArgumentParser(prog="pyprbgan", description="Probabilistic GAN experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", parents=[common], help="Train one GAN per seed and write metrics")
    source = train.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="Experiment config (.cfg text, .yaml or .json)")
    source.add_argument("--preset", choices=sorted(CONFIG_PRESETS), help="Built-in experiment")
    train.add_argument("--seed", type=int, default=None, help="Run only this seed")
    train.add_argument("--variant", choices=[v.value for v in Variant], default=None)
    train.add_argument("--out", type=Path, default=None, help="Output directory")
    train.add_argument("--steps", type=int, default=None, help="Override total_steps")
    train.add_argument("--workers", type=int, default=None,
                       help="Parallel seeds (default: PRBGAN_THREADS or CPU count)")

    evaluate = sub.add_parser("eval", parents=[common], help="Mode coverage of generated samples")
    evaluate.add_argument("--samples", type=Path, required=True, help="CSV of generated samples")
    evaluate.add_argument("--mixture", required=True,
                          help=f"Config file holding a [mixture] section, or a preset {sorted(MIXTURE_PRESETS)}")
    evaluate.add_argument("--tau", type=float, default=0.02, help="Capture threshold")
    evaluate.add_argument("--bins", type=int, default=100, help="Histogram bins for the JSD")
    evaluate.add_argument("--real-samples", type=int, default=10000,
                          help="Real samples drawn for the JSD (1-D mixtures)")
    evaluate.add_argument("--seed", type=int, default=0, help="Seed for the real samples")
    evaluate.add_argument("--json", action="store_true", help="Print JSON instead of key: value text")
    evaluate.add_argument("--out", type=Path, default=None, help="Also write the text report here")
    evaluate.add_argument("--plot", type=Path, default=None, help="Save a real-vs-generated histogram")

    gradcheck = sub.add_parser("gradcheck", parents=[common], help="Check analytic gradients of every loss variant")
    gradcheck.add_argument("--nets", type=int, default=20, help="Random networks per variant")
    gradcheck.add_argument("--seed", type=int, default=0)
    gradcheck.add_argument("--tolerance", type=float, default=1e-4)

    return parser


def apply_overrides(
    config: ExperimentConfig,
    seed: Optional[int] = None,
    variant: Optional[str] = None,
    out: Optional[Path] = None,
    steps: Optional[int] = None
) -> ExperimentConfig:
    """Return a revalidated copy of config with command line overrides"""
    data: Dict[str, Any] = config.model_dump(mode="json")
    if seed is not None:
        data["run"]["seeds"] = [seed]
    if variant is not None:
        data["gan"]["variant"] = variant
    if out is not None:
        data["run"]["output_dir"] = str(out)
    if steps is not None:
        data["schedule"]["total_steps"] = steps
    return ExperimentConfig.from_dict(data)


def load_mixture(source: str) -> MixtureSpec:
    if source.lower() in MIXTURE_PRESETS and not Path(source).exists():
        return MIXTURE_PRESETS[source.lower()]()
    return ExperimentConfig.from_file(Path(source)).mixture


def cmd_train(args: argparse.Namespace) -> int:
    if args.preset:
        config = CONFIG_PRESETS[args.preset]()
    else:
        config = ExperimentConfig.from_file(args.config)
    config = apply_overrides(config, seed=args.seed, variant=args.variant,
                             out=args.out, steps=args.steps)

    logger.info(
        f"Training {config.gan.variant.value} on a {config.mixture.n_components}-component mixture, "
        f"seeds {config.run.seeds}, output {config.run.output_dir}"
    )
    status = run(config, n_workers=args.workers)
    if status == EXIT_NUMERIC:
        logger.error("Training stopped on a numeric error; partial outputs were kept")
    return status


def cmd_eval(args: argparse.Namespace) -> int:
    spec = load_mixture(args.mixture)
    samples = read_samples_csv(args.samples)

    real = None
    if spec.dimension == 1:
        real = sample(spec, args.real_samples, np.random.default_rng(args.seed))
    report = mode_coverage(samples, spec, tau=args.tau, real=real, bins=args.bins)

    if args.json:
        print(json.dumps(make_json_serializable(report.to_dict()), indent=2, sort_keys=True))
    else:
        print(format_report(report), end="")

    if args.out is not None:
        write_report_text(args.out, report)
    if args.plot is not None:
        if real is None:
            raise ConfigError("--plot needs a 1-D mixture")
        plot_histograms(real, samples, args.plot, bins=args.bins)
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    result = run_gradcheck_suite(n_nets=args.nets, seed=args.seed, tolerance=args.tolerance)
    for key in sorted(result.worst):
        flag = "FAIL" if key in result.failures else "ok"
        print(f"{key}: max_rel_error {result.worst[key]:.3e} {flag}")
    print(f"checked {result.n_checked} entries ({result.n_skipped} skipped at kinks); "
          f"{'passed' if result.passed else 'FAILED'}")
    return EXIT_OK if result.passed else EXIT_FAILURE


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "gradcheck": cmd_gradcheck,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK

    try:
        settings = Settings(
            log_level=args.log_level or get_settings().log_level,
            show_progress=not args.no_progress and get_settings().show_progress,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    set_settings(settings)
    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except PrbGanError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"Unexpected failure: {e}", exc_info=True)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
