"""
Probabilistic GAN training

Each step samples networks from the dropout variational family, averages the
per-sample gradients and applies one optimizer update:

- disc_step: one sampled generator, N sampled discriminators
- gen_step:  one sampled discriminator, N sampled generators
  (prb_v1/prb_v2: one generator against N sampled discriminators;
   sliced variants: M sampled discriminator feature maps)

With p = 0 every mask is all-ones and the steps reproduce the vanilla
updates bit for bit.
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple
import copy
import logging

import numpy as np

from pyprbgan.autodiff import ops
from pyprbgan.autodiff.tensor import Node, backward
from pyprbgan.core.errors import ContractError, NumericError
from pyprbgan.data.synthetic import sample_latent
from pyprbgan.gan.config import GanConfig, Variant
from pyprbgan.gan.networks import DiscOutput, discriminate, generate_batch
from pyprbgan.gan.objectives import (
    GanObjective,
    gen_loss_v1,
    gen_loss_v2,
    random_projections,
    score,
    sliced_w_loss,
)
from pyprbgan.nn.layers import DropoutMaskSet, MlpParams, sample_mask_set, xavier_init
from pyprbgan.nn.optim import OptimizerState, apply_update

logger = logging.getLogger(__name__)

STREAMS = (
    "init", "data", "latent", "masks", "projections", "eval_data", "eval_latent", "eval_masks",
)


@dataclass
class RngStreams:
    """
    Independent random streams of one training run

    Every concern draws from its own stream, so sampling masks never shifts
    the data or latent draws.
    """
    init: np.random.Generator
    data: np.random.Generator
    latent: np.random.Generator
    masks: np.random.Generator
    projections: np.random.Generator
    eval_data: np.random.Generator
    eval_latent: np.random.Generator
    eval_masks: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RngStreams":
        children = np.random.SeedSequence(seed).spawn(len(STREAMS))
        return cls(**{name: np.random.default_rng(child) for name, child in zip(STREAMS, children)})

    def clone(self) -> "RngStreams":
        """Deep copy, for replaying the same draws"""
        return copy.deepcopy(self)


@dataclass
class StepReport:
    """
    Telemetry of one training step

    Attributes:
        disc_loss: Discriminator loss averaged over MC samples
        gen_loss: Generator loss averaged over MC samples
        mean_logit_real: Mean raw logit on real data
        mean_logit_fake: Mean raw logit on generated data
        score_set_variance: Batch mean of the variance of N discriminator scores per point
        uncertainty_mean: Mean predicted uncertainty (uncertainty variants)
        grad_norms: L2 norm of the applied (averaged) gradient per network
    """
    disc_loss: float = 0.0
    gen_loss: float = 0.0
    mean_logit_real: float = 0.0
    mean_logit_fake: float = 0.0
    score_set_variance: float = 0.0
    uncertainty_mean: float = 0.0
    grad_norms: Dict[str, float] = field(default_factory=dict)

    def merge(self, other: "StepReport") -> "StepReport":
        """Combine a discriminator report (self) with a generator report"""
        return StepReport(
            disc_loss=self.disc_loss,
            gen_loss=other.gen_loss,
            mean_logit_real=self.mean_logit_real,
            mean_logit_fake=self.mean_logit_fake,
            score_set_variance=self.score_set_variance,
            uncertainty_mean=self.uncertainty_mean,
            grad_norms={**self.grad_norms, **other.grad_norms},
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


class _RunningMean:
    """Incremental mean; exact when every sample is identical"""

    def __init__(self) -> None:
        self.count = 0
        self.value: Any = None

    def add(self, x: Any) -> None:
        self.count += 1
        if self.value is None:
            self.value = copy.deepcopy(x)
        elif isinstance(self.value, list):
            self.value = [m + (g - m) / self.count for m, g in zip(self.value, x)]
        else:
            self.value = self.value + (x - self.value) / self.count


class _RunningMoments:
    """Welford mean and population variance, element-wise across samples"""

    def __init__(self) -> None:
        self.count = 0
        self.mean: Optional[np.ndarray] = None
        self.m2: Optional[np.ndarray] = None

    def add(self, x: np.ndarray) -> None:
        self.count += 1
        if self.mean is None:
            self.mean = x.copy()
            self.m2 = np.zeros_like(x)
            return
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    @property
    def variance(self) -> np.ndarray:
        return self.m2 / self.count


def _grad_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def _maybe_masks(
    params: MlpParams,
    masked: bool,
    cfg: GanConfig,
    rng: np.random.Generator
) -> Optional[DropoutMaskSet]:
    if not masked:
        return None
    return sample_mask_set(params.spec, cfg.p, rng, cfg.layer_drop_probs)


def _run_sample(sample_index: int, fn: Callable[[], Any]) -> Any:
    """Run one MC sample, tagging numeric failures with the sample index"""
    try:
        return fn()
    except NumericError as e:
        raise NumericError(str(e), sample_index=sample_index) from e


# Loss builders with explicit masks

def disc_sample_loss(
    disc_params: MlpParams,
    cfg: GanConfig,
    batch_real: np.ndarray,
    fake: np.ndarray,
    disc_masks: Optional[DropoutMaskSet]
) -> Tuple[Node, DiscOutput, DiscOutput]:
    """Loss of one sampled discriminator on a real and a generated batch"""
    real_out = discriminate(disc_params, disc_masks, batch_real, cfg)
    fake_out = discriminate(disc_params, disc_masks, fake, cfg)
    loss = GanObjective(cfg.variant).disc_loss(real_out, fake_out, cfg)
    return loss, real_out, fake_out


def build_disc_loss(
    gen_params: MlpParams,
    disc_params: MlpParams,
    cfg: GanConfig,
    batch_real: np.ndarray,
    z: np.ndarray,
    gen_masks: Optional[DropoutMaskSet],
    disc_mask_list: Sequence[Optional[DropoutMaskSet]]
) -> Node:
    """Discriminator loss averaged over the given discriminator masks"""
    fake = generate_batch(gen_params.frozen(), gen_masks, z).value
    losses = [disc_sample_loss(disc_params, cfg, batch_real, fake, masks)[0]
              for masks in disc_mask_list]
    return ops.stack_losses(losses)


def build_gen_loss(
    gen_params: MlpParams,
    disc_params: MlpParams,
    cfg: GanConfig,
    z: np.ndarray,
    gen_mask_list: Sequence[Optional[DropoutMaskSet]],
    disc_mask_list: Sequence[Optional[DropoutMaskSet]],
    batch_real: Optional[np.ndarray] = None,
    projections: Optional[np.ndarray] = None
) -> Node:
    """
    Generator loss for explicit mask draws

    For prb_v1/prb_v2 and sliced variants gen_mask_list holds the single
    generator sample and disc_mask_list the N (or M) discriminator samples;
    otherwise disc_mask_list holds the single discriminator sample.
    """
    frozen_disc = disc_params.frozen()

    if cfg.is_sliced:
        if batch_real is None or projections is None:
            raise ContractError("Sliced generator loss needs batch_real and projections")
        fake = generate_batch(gen_params, gen_mask_list[0], z)
        losses = []
        for masks in disc_mask_list:
            real_features = discriminate(frozen_disc, masks, batch_real, cfg).features
            fake_features = discriminate(frozen_disc, masks, fake, cfg).features
            losses.append(sliced_w_loss(real_features, fake_features, projections))
        return ops.stack_losses(losses)

    if cfg.uses_uncertainty:
        fake = generate_batch(gen_params, gen_mask_list[0], z)
        outputs = [discriminate(frozen_disc, masks, fake, cfg) for masks in disc_mask_list]
        if cfg.variant == Variant.PRB_V2:
            return gen_loss_v2(outputs, cfg)
        return gen_loss_v1(outputs, cfg)

    objective = GanObjective(cfg.variant)
    losses = []
    for masks in gen_mask_list:
        fake = generate_batch(gen_params, masks, z)
        losses.append(objective.gen_loss(discriminate(frozen_disc, disc_mask_list[0], fake, cfg), cfg))
    return ops.stack_losses(losses)


# Training steps

def estimate_disc_gradient(
    gen_params: MlpParams,
    disc_params: MlpParams,
    cfg: GanConfig,
    batch_real: np.ndarray,
    rng: RngStreams
) -> Tuple[List[np.ndarray], StepReport]:
    """
    MC estimate of the discriminator gradient

    Samples one generator, then N discriminators; each sample's gradient is
    computed from a fresh graph and folded into a running mean.

    Returns:
        Tuple of (mean gradients ordered like disc_params.nodes(), report)
    """
    batch_real = np.asarray(batch_real, dtype=np.float64)
    if batch_real.ndim != 2 or batch_real.shape[1] != cfg.data_dim:
        raise ContractError(f"batch_real must be [B x {cfg.data_dim}], got {batch_real.shape}")

    z = sample_latent(cfg.latent_dim, batch_real.shape[0], rng.latent, cfg.latent_prior)
    gen_masks = _maybe_masks(gen_params, cfg.generator_masked, cfg, rng.masks)
    fake = generate_batch(gen_params.frozen(), gen_masks, z).value

    n_samples = cfg.n_mc if cfg.discriminator_masked else 1
    grads, losses = _RunningMean(), _RunningMean()
    logit_real, logit_fake, uncertainty = _RunningMean(), _RunningMean(), _RunningMean()
    fake_scores = _RunningMoments()

    for i in range(n_samples):
        def one_sample():
            disc_masks = _maybe_masks(disc_params, cfg.discriminator_masked, cfg, rng.masks)
            disc_params.zero_grad()
            loss, real_out, fake_out = disc_sample_loss(disc_params, cfg, batch_real, fake, disc_masks)
            backward(loss)
            return loss, real_out, fake_out

        loss, real_out, fake_out = _run_sample(i, one_sample)
        grads.add(disc_params.grads())
        losses.add(loss.item())
        logit_real.add(float(real_out.logit.value.mean()))
        logit_fake.add(float(fake_out.logit.value.mean()))
        fake_scores.add(score(fake_out, cfg).value.reshape(-1))
        if real_out.uncertainty is not None:
            uncertainty.add(0.5 * (float(real_out.uncertainty.value.mean())
                                   + float(fake_out.uncertainty.value.mean())))

    disc_params.zero_grad()
    report = StepReport(
        disc_loss=float(losses.value),
        mean_logit_real=float(logit_real.value),
        mean_logit_fake=float(logit_fake.value),
        score_set_variance=float(fake_scores.variance.mean()),
        uncertainty_mean=float(uncertainty.value) if uncertainty.count else 0.0,
        grad_norms={"discriminator": _grad_norm(grads.value)},
    )
    return grads.value, report


def disc_step(
    gen_params: MlpParams,
    disc_params: MlpParams,
    cfg: GanConfig,
    batch_real: np.ndarray,
    rng: RngStreams,
    opt: OptimizerState
) -> StepReport:
    """
    One discriminator update

    Generator parameters are never touched.

    Args:
        gen_params: Generator variational parameters
        disc_params: Discriminator variational parameters (updated in place)
        cfg: GanConfig
        batch_real: [B x data_dim] real batch
        rng: Run streams
        opt: Discriminator optimizer state

    Returns:
        StepReport with the discriminator fields filled

    Raises:
        NumericError: If a sample produces a non-finite value (params unchanged)
    """
    grads, report = estimate_disc_gradient(gen_params, disc_params, cfg, batch_real, rng)
    apply_update(disc_params, grads, opt)
    logger.debug(f"disc_step: loss={report.disc_loss:.6f}")
    return report


def _sample_gen_masks(
    gen_params: MlpParams,
    disc_params: MlpParams,
    cfg: GanConfig,
    rng: RngStreams
) -> Tuple[List[Optional[DropoutMaskSet]], List[Optional[DropoutMaskSet]]]:
    """Mask draws of one generator step, in stream order"""
    if cfg.uses_uncertainty or cfg.is_sliced:
        gen_masks = [_maybe_masks(gen_params, cfg.generator_masked, cfg, rng.masks)]
        if cfg.is_sliced:
            n = cfg.m_slice if cfg.discriminator_masked else 1
        else:
            n = cfg.n_mc
        disc_masks = [_maybe_masks(disc_params, cfg.discriminator_masked, cfg, rng.masks)
                      for _ in range(n)]
        return gen_masks, disc_masks

    disc_masks = [_maybe_masks(disc_params, cfg.discriminator_masked, cfg, rng.masks)]
    n = cfg.n_mc if cfg.generator_masked else 1
    gen_masks = [_maybe_masks(gen_params, cfg.generator_masked, cfg, rng.masks) for _ in range(n)]
    return gen_masks, disc_masks


def estimate_gen_gradient(
    gen_params: MlpParams,
    disc_params: MlpParams,
    cfg: GanConfig,
    rng: RngStreams,
    batch_real: Optional[np.ndarray] = None
) -> Tuple[List[np.ndarray], StepReport]:
    """
    MC estimate of the generator gradient

    Returns:
        Tuple of (mean gradients ordered like gen_params.nodes(), report)
    """
    if cfg.is_sliced and batch_real is None:
        raise ContractError(f"{cfg.variant.value} generator step needs batch_real")

    z = sample_latent(cfg.latent_dim, cfg.batch, rng.latent, cfg.latent_prior)
    gen_mask_list, disc_mask_list = _sample_gen_masks(gen_params, disc_params, cfg, rng)

    projections = None
    if cfg.is_sliced:
        projections = random_projections(cfg.hidden_dim, cfg.n_projections, rng.projections)

    grads, losses = _RunningMean(), _RunningMean()

    if cfg.uses_uncertainty:
        # the variance reward couples the N samples, so one joint graph
        def joint():
            gen_params.zero_grad()
            loss = build_gen_loss(gen_params, disc_params, cfg, z, gen_mask_list, disc_mask_list)
            backward(loss)
            return loss

        loss = _run_sample(0, joint)
        grads.add(gen_params.grads())
        losses.add(loss.item())
    else:
        if cfg.is_sliced:
            pairs = [(gen_mask_list, [m]) for m in disc_mask_list]
        else:
            pairs = [([m], disc_mask_list) for m in gen_mask_list]
        for i, (gen_masks, disc_masks) in enumerate(pairs):
            def one_sample():
                gen_params.zero_grad()
                loss = build_gen_loss(gen_params, disc_params, cfg, z, gen_masks, disc_masks,
                                      batch_real=batch_real, projections=projections)
                backward(loss)
                return loss

            loss = _run_sample(i, one_sample)
            grads.add(gen_params.grads())
            losses.add(loss.item())

    gen_params.zero_grad()
    report = StepReport(gen_loss=float(losses.value),
                        grad_norms={"generator": _grad_norm(grads.value)})
    return grads.value, report


def gen_step(
    gen_params: MlpParams,
    disc_params: MlpParams,
    cfg: GanConfig,
    rng: RngStreams,
    opt: OptimizerState,
    batch_real: Optional[np.ndarray] = None
) -> StepReport:
    """
    One generator update

    Discriminator parameters are used through a frozen view and never receive
    gradients or updates.

    Args:
        gen_params: Generator variational parameters (updated in place)
        disc_params: Discriminator variational parameters
        cfg: GanConfig
        rng: Run streams
        opt: Generator optimizer state
        batch_real: Real batch, required by the sliced variants

    Returns:
        StepReport with gen_loss and the generator gradient norm
    """
    grads, report = estimate_gen_gradient(gen_params, disc_params, cfg, rng, batch_real)
    apply_update(gen_params, grads, opt)
    logger.debug(f"gen_step: loss={report.gen_loss:.6f}")
    return report


def prb_sliced_w_distance(
    gen_params: MlpParams,
    disc_params: MlpParams,
    cfg: GanConfig,
    batch_real: np.ndarray,
    rng: RngStreams
) -> float:
    """
    Sliced Wasserstein distance averaged over M sampled discriminator feature maps

    Draws a latent batch, one generator mask set (if the generator is masked),
    one projection set, then m_slice discriminator mask sets. Real and
    generated features of one term share that term's mask set.
    """
    if cfg.m_slice < 1:
        raise ContractError(f"m_slice must be at least 1, got {cfg.m_slice}")
    batch_real = np.asarray(batch_real, dtype=np.float64)

    z = sample_latent(cfg.latent_dim, batch_real.shape[0], rng.latent, cfg.latent_prior)
    gen_masks = _maybe_masks(gen_params, cfg.generator_masked, cfg, rng.masks)
    projections = random_projections(cfg.hidden_dim, cfg.n_projections, rng.projections)
    fake = generate_batch(gen_params.frozen(), gen_masks, z).value
    frozen_disc = disc_params.frozen()

    total = _RunningMean()
    for _ in range(cfg.m_slice):
        masks = _maybe_masks(disc_params, cfg.discriminator_masked, cfg, rng.masks)
        real_features = discriminate(frozen_disc, masks, batch_real, cfg).features
        fake_features = discriminate(frozen_disc, masks, fake, cfg).features
        total.add(sliced_w_loss(real_features, fake_features, projections).item())
    return float(total.value)


def generate(
    gen_params: MlpParams,
    cfg: GanConfig,
    n: int,
    latent_rng: np.random.Generator,
    mask_rng: Optional[np.random.Generator] = None
) -> np.ndarray:
    """
    Draw n samples from the probabilistic generator

    One generator mask set is sampled per call (MC sampling, no weight
    averaging).

    Returns:
        [n x data_dim] array
    """
    z = sample_latent(cfg.latent_dim, n, latent_rng, cfg.latent_prior)
    masks = _maybe_masks(gen_params, cfg.generator_masked, cfg, mask_rng or latent_rng)
    return generate_batch(gen_params.frozen(), masks, z).value


def generate_instances(
    gen_params: MlpParams,
    cfg: GanConfig,
    z: np.ndarray,
    k: int,
    rng: np.random.Generator
) -> List[np.ndarray]:
    """Push the same latent batch through k independently sampled generators"""
    frozen = gen_params.frozen()
    return [
        generate_batch(frozen, sample_mask_set(gen_params.spec, cfg.p, rng, cfg.layer_drop_probs), z).value
        for _ in range(k)
    ]


class GanTrainer:
    """
    Alternating discriminator / generator training

    Attributes:
        cfg: GanConfig
        gen_params: Generator variational parameters
        disc_params: Discriminator variational parameters
        rng: Run streams (seeded from cfg.seed)
        disc_steps_per_gen_step: Discriminator updates per generator update
        history: Per-step telemetry
    """

    def __init__(self, cfg: GanConfig, disc_steps_per_gen_step: int = 1):
        if disc_steps_per_gen_step < 1:
            raise ContractError(
                f"disc_steps_per_gen_step must be at least 1, got {disc_steps_per_gen_step}"
            )
        self.cfg = cfg
        self.disc_steps_per_gen_step = disc_steps_per_gen_step
        self.rng = RngStreams.from_seed(cfg.seed)
        self.gen_params = xavier_init(cfg.generator_spec(), self.rng.init)
        self.disc_params = xavier_init(cfg.discriminator_spec(), self.rng.init)
        self.gen_opt = OptimizerState(cfg.optimizer)
        self.disc_opt = OptimizerState(cfg.optimizer)
        self.step_count = 0
        self.history: List[Dict[str, Any]] = []

        logger.info(
            f"Initialized GanTrainer: variant={cfg.variant.value}, p={cfg.p}, N={cfg.n_mc}, "
            f"B={cfg.batch}, masked(G,D)=({cfg.generator_masked}, {cfg.discriminator_masked})"
        )

    def step(self, next_batch: Callable[[int], np.ndarray]) -> StepReport:
        """
        One training iteration: disc_steps_per_gen_step discriminator updates,
        then one generator update

        Args:
            next_batch: Returns a [B x data_dim] real batch for a given B
        """
        disc_report = StepReport()
        batch_real = None
        for _ in range(self.disc_steps_per_gen_step):
            batch_real = next_batch(self.cfg.batch)
            disc_report = disc_step(self.gen_params, self.disc_params, self.cfg,
                                    batch_real, self.rng, self.disc_opt)

        gen_report = gen_step(self.gen_params, self.disc_params, self.cfg, self.rng,
                              self.gen_opt, batch_real=batch_real if self.cfg.is_sliced else None)

        self.step_count += 1
        report = disc_report.merge(gen_report)
        self.history.append({"step": self.step_count, **report.to_dict()})
        return report

    def sample(self, n: int) -> np.ndarray:
        """Generate n samples using the evaluation streams"""
        return generate(self.gen_params, self.cfg, n, self.rng.eval_latent, self.rng.eval_masks)

    def __repr__(self) -> str:
        return (
            f"GanTrainer(variant={self.cfg.variant.value}, "
            f"steps={self.step_count}, N={self.cfg.n_mc}, p={self.cfg.p})"
        )
