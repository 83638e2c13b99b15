"""
Experiment harness

Trains one GAN per seed on a Gaussian mixture, evaluates it at fixed
checkpoints and writes telemetry, histograms, coverage reports and
checkpoints. Seeds run in parallel.

Per-seed directory layout:
    telemetry.ndjson           one record per step and per evaluation
    hist_real.csv              histogram of real evaluation samples (1-D)
    hist_step{k}.csv           histogram of generated samples at step k (1-D)
    coverage_step{k}.txt       mode coverage report at step k
    samples_final.csv          generated samples at the last evaluation
    generator.prbgan           final generator parameters
    discriminator.prbgan       final discriminator parameters
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence
import logging

import numpy as np
import pandas as pd
from tqdm import tqdm

from pyprbgan.core.config import ExperimentConfig, RunConfig, ScheduleConfig
from pyprbgan.core.errors import NumericError
from pyprbgan.core.parallel_engine import ParallelSeedRunner
from pyprbgan.data.synthetic import MixtureDataset, MixtureSpec, paper_mixture, sample
from pyprbgan.evaluation.coverage import ModeCoverageReport, mode_coverage
from pyprbgan.evaluation.histogram import default_range, histogram
from pyprbgan.gan.config import GanConfig, Variant
from pyprbgan.gan.trainer import GanTrainer
from pyprbgan.nn.checkpoint import save_params
from pyprbgan.nn.optim import OptimizerConfig, OptimizerKind
from pyprbgan.utils.output_writers import (
    TelemetryWriter,
    write_histogram_csv,
    write_json,
    write_report_text,
    write_samples_csv,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SUMMARY_METRICS = (
    "modes_captured",
    "modes_captured_initial",
    "high_quality_fraction",
    "jsd",
    "jsd_initial",
)


def preset_paper_1d() -> ExperimentConfig:
    """
    1-D five-mode experiment

    Both networks: 4 fully connected layers, 600 hidden units, leaky ReLU
    (slope 0.2). 1-D latent noise, p = 0.4, N = 20, batch 64. Trained in
    data units without standardisation.
    """
    gan = GanConfig(
        variant=Variant.PRB,
        p=0.4,
        n_mc=20,
        batch=64,
        latent_dim=1,
        hidden_dim=600,
        n_layers=4,
        leaky_slope=0.2,
        # learning rate is not given for this experiment; 2e-4 with adam
        optimizer=OptimizerConfig(kind=OptimizerKind.ADAM, learning_rate=2e-4),
    )
    return ExperimentConfig(
        gan=gan,
        mixture=paper_mixture(),
        schedule=ScheduleConfig(total_steps=2000, eval_every=200, normalize_data=False),
        run=RunConfig(output_dir=Path("runs/paper_1d"), seeds=[0, 1, 2, 3, 4]),
    )


@dataclass
class DataScaler:
    """Affine map between data units and training units"""
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def from_spec(cls, spec: MixtureSpec, normalize: bool) -> "DataScaler":
        if not normalize:
            return cls(mean=np.zeros(spec.dimension), std=np.ones(spec.dimension))
        mean, std = spec.moments()
        return cls(mean=mean, std=std)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.std

    def inverse(self, x: np.ndarray) -> np.ndarray:
        return x * self.std + self.mean


def _coverage_record(step: int, report: ModeCoverageReport) -> Dict[str, Any]:
    return {
        "kind": "eval",
        "step": step,
        "modes_captured": report.modes_captured,
        "high_quality_fraction": report.high_quality_fraction,
        "jsd": report.jsd,
        "mass_fractions": [m.mass_fraction for m in report.modes],
    }


def run_seed(
    config: ExperimentConfig,
    seed: int,
    show_progress: bool = False,
    on_step: Optional[Callable[[int, GanTrainer], None]] = None
) -> Dict[str, Any]:
    """
    Train and evaluate one seed

    A NumericError stops training; outputs written up to that point are
    kept and the last parameters are checkpointed.

    Args:
        config: Experiment configuration
        seed: Seed of this run
        show_progress: Show a per-step progress bar
        on_step: Optional hook called after every training step

    Returns:
        Result dictionary with 'success', 'status' and final metrics
    """
    schedule = config.schedule
    out_dir = Path(config.run.output_dir) / f"seed_{seed}"
    out_dir.mkdir(parents=True, exist_ok=True)

    cfg = config.seed_config(seed)
    trainer = GanTrainer(cfg, disc_steps_per_gen_step=schedule.disc_steps_per_gen_step)
    scaler = DataScaler.from_spec(config.mixture, schedule.normalize_data)
    real_eval = sample(config.mixture, schedule.sample_count_for_eval, trainer.rng.eval_data)
    dataset = MixtureDataset(config.mixture, schedule.dataset_size, trainer.rng.data)
    eval_steps = set(schedule.eval_steps())
    one_d = config.mixture.dimension == 1
    value_range = default_range(real_eval) if one_d else None

    if one_d:
        write_histogram_csv(out_dir / "hist_real.csv",
                            histogram(real_eval, schedule.eval_bins, value_range))

    result: Dict[str, Any] = {"seed": seed, "output_dir": str(out_dir), "steps_completed": 0}
    telemetry = TelemetryWriter(out_dir / "telemetry.ndjson")

    def evaluate(step: int) -> ModeCoverageReport:
        fake = scaler.inverse(trainer.sample(schedule.sample_count_for_eval))
        report = mode_coverage(fake, config.mixture, tau=schedule.tau,
                               real=real_eval if one_d else None, bins=schedule.eval_bins)
        if one_d:
            write_histogram_csv(out_dir / f"hist_step{step:06d}.csv",
                                histogram(fake, schedule.eval_bins, value_range))
        write_report_text(out_dir / f"coverage_step{step:06d}.txt", report)
        write_samples_csv(out_dir / "samples_final.csv", fake)
        telemetry.write(_coverage_record(step, report))
        return report

    def next_batch(batch_size: int) -> np.ndarray:
        return scaler.transform(dataset.next_batch(batch_size))

    logger.info(f"Seed {seed}: training {cfg.variant.value} for {schedule.total_steps} steps")
    pbar = tqdm(total=schedule.total_steps, desc=f"Seed {seed}", unit="step",
                leave=False) if show_progress else None

    try:
        initial = evaluate(0)
        result["modes_captured_initial"] = initial.modes_captured
        result["jsd_initial"] = initial.jsd
        final = initial

        for step in range(1, schedule.total_steps + 1):
            report = trainer.step(next_batch)
            telemetry.write({"kind": "step", "step": step, "epoch": dataset.epoch, **report.to_dict()})
            result["steps_completed"] = step
            if on_step is not None:
                on_step(step, trainer)

            if step in eval_steps:
                final = evaluate(step)

            if pbar is not None:
                pbar.update(1)
            if step % max(1, schedule.total_steps // 10) == 0:
                progress = 100 * step / schedule.total_steps
                logger.info(
                    f"Seed {seed} progress: {progress:.0f}% - "
                    f"D loss: {report.disc_loss:.4f} - G loss: {report.gen_loss:.4f} - "
                    f"modes: {final.modes_captured}/{config.mixture.n_components}"
                )

        result.update({
            "success": True,
            "status": "completed",
            "modes_captured": final.modes_captured,
            "high_quality_fraction": final.high_quality_fraction,
            "jsd": final.jsd,
        })

    except NumericError as e:
        logger.error(f"Seed {seed} aborted at step {result['steps_completed'] + 1}: {e}", exc_info=True)
        result.update({"success": False, "status": "numeric_error", "error": str(e)})

    finally:
        if pbar is not None:
            pbar.close()
        telemetry.close()
        save_params(out_dir / "generator.prbgan", trainer.gen_params)
        save_params(out_dir / "discriminator.prbgan", trainer.disc_params)

    return result


def summarize(results: Sequence[Dict[str, Any]]) -> Dict[str, Any]:
    """
    Median and interquartile range of final metrics across seeds

    Returns:
        {'n_seeds', 'n_success', metric: {'median', 'iqr', 'q25', 'q75'}, ...}
    """
    summary: Dict[str, Any] = {
        "n_seeds": len(results),
        "n_success": sum(1 for r in results if r.get("success")),
    }
    df = pd.DataFrame([r for r in results if r.get("success")])
    for metric in SUMMARY_METRICS:
        if metric not in df or df[metric].dropna().empty:
            continue
        values = df[metric].dropna().astype(float)
        q25, q50, q75 = (float(q) for q in values.quantile([0.25, 0.5, 0.75]))
        summary[metric] = {"median": q50, "iqr": q75 - q25, "q25": q25, "q75": q75}
    return summary


def run(
    config: ExperimentConfig,
    n_workers: Optional[int] = None,
    show_progress: Optional[bool] = None
) -> int:
    """
    Run every seed of an experiment and write summary.json

    Args:
        config: Experiment configuration
        n_workers: Parallel seeds (None = Settings / PRBGAN_THREADS)
        show_progress: Progress bars (None = Settings)

    Returns:
        Exit status: 0 success, 3 numeric abort in any seed, 1 other failure
    """
    out_dir = Path(config.run.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.to_yaml(out_dir / "config.yaml")

    runner = ParallelSeedRunner(n_workers=n_workers, show_progress=show_progress)
    step_bars = runner.show_progress and min(runner.n_workers, len(config.run.seeds)) == 1
    results: List[Dict[str, Any]] = runner.run_parallel(
        run_seed, [(config, seed, step_bars) for seed in config.run.seeds]
    )

    summary = summarize(results)
    summary["variant"] = config.gan.variant.value
    summary["seeds"] = [
        {k: v for k, v in r.items() if k != "output_dir"} for r in results
    ]
    write_json(out_dir / "summary.json", summary)

    for metric in ("modes_captured", "jsd"):
        if metric in summary:
            logger.info(f"{metric}: median {summary[metric]['median']:.4g}, "
                        f"IQR {summary[metric]['iqr']:.4g}")

    if any(r.get("status") == "numeric_error" for r in results):
        return EXIT_NUMERIC
    if not all(r.get("success") for r in results):
        return EXIT_FAILURE
    return EXIT_OK
