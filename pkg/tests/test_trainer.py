"""
Tests for probabilistic GAN training steps
"""

import pytest
import numpy as np

from pyprbgan.autodiff.tensor import backward
from pyprbgan.core.errors import ContractError
from pyprbgan.data.synthetic import MixtureDataset, paper_mixture, sample_latent
from pyprbgan.gan.config import GanConfig, Variant
from pyprbgan.gan.gradcheck_suite import run_gradcheck_suite
from pyprbgan.gan.networks import discriminate, generate_batch
from pyprbgan.gan.objectives import random_projections, sliced_w_distance
from pyprbgan.gan.trainer import (
    GanTrainer,
    RngStreams,
    build_gen_loss,
    disc_sample_loss,
    disc_step,
    estimate_disc_gradient,
    estimate_gen_gradient,
    gen_step,
    generate,
    generate_instances,
    prb_sliced_w_distance,
)
from pyprbgan.nn.layers import sample_mask_set, xavier_init
from pyprbgan.nn.optim import OptimizerConfig, OptimizerKind, OptimizerState


def small_config(variant=Variant.PRB, **overrides):
    """Tiny networks so a few hundred steps stay fast"""
    values = dict(
        variant=variant,
        p=0.3,
        n_mc=3,
        batch=8,
        latent_dim=1,
        data_dim=1,
        hidden_dim=8,
        n_layers=3,
        n_projections=4,
        m_slice=3,
        optimizer=OptimizerConfig(kind=OptimizerKind.ADAM, learning_rate=1e-3),
        seed=0,
    )
    values.update(overrides)
    return GanConfig(**values)


def networks(cfg):
    return xavier_init(cfg.generator_spec(), seed=10), xavier_init(cfg.discriminator_spec(), seed=11)


def real_batch(cfg, seed=5):
    return np.random.default_rng(seed).normal(size=(cfg.batch, cfg.data_dim))


def batch_source(seed=1):
    dataset = MixtureDataset(paper_mixture(), size=None, rng=np.random.default_rng(seed))
    return lambda b: (dataset.next_batch(b) - 56.0) / 37.0


def mean_grads(singles):
    return [np.mean([s[j] for s in singles], axis=0) for j in range(len(singles[0]))]


class TestDropoutReduction:
    """Test p = 0 reproduces the vanilla updates exactly"""

    def test_prb_p0_matches_vanilla(self):
        """Test 200 steps of prb with p = 0 are bit-identical to vanilla_ns"""
        prb = GanTrainer(small_config(Variant.PRB, p=0.0, n_mc=4))
        vanilla = GanTrainer(small_config(Variant.VANILLA_NS, p=0.0, n_mc=4))
        prb_batches, vanilla_batches = batch_source(), batch_source()

        for _ in range(200):
            prb.step(prb_batches)
            vanilla.step(vanilla_batches)

        assert prb.history == vanilla.history
        for a, b in zip(prb.gen_params.values() + prb.disc_params.values(),
                        vanilla.gen_params.values() + vanilla.disc_params.values()):
            np.testing.assert_array_equal(a, b)

    def test_p0_disc_step_any_n(self):
        """Test the p = 0 discriminator gradient does not depend on N"""
        grads = []
        for n_mc in (1, 5):
            cfg = small_config(Variant.PRB, p=0.0, n_mc=n_mc)
            gen, disc = networks(cfg)
            g, _ = estimate_disc_gradient(gen, disc, cfg, real_batch(cfg), RngStreams.from_seed(2))
            grads.append(g)
        for a, b in zip(*grads):
            np.testing.assert_array_equal(a, b)


class TestDiscStep:
    """Test the discriminator update"""

    def test_replay_oracle(self):
        """Test the N = 4 gradient equals the mean of replayed single-sample gradients"""
        cfg = small_config(Variant.PRB, n_mc=4)
        gen, disc = networks(cfg)
        batch = real_batch(cfg)
        rng = RngStreams.from_seed(3)
        replay = rng.clone()

        grads, report = estimate_disc_gradient(gen, disc, cfg, batch, rng)

        z = sample_latent(cfg.latent_dim, cfg.batch, replay.latent, cfg.latent_prior)
        gen_masks = sample_mask_set(gen.spec, cfg.p, replay.masks)
        fake = generate_batch(gen.frozen(), gen_masks, z).value
        singles, losses = [], []
        for _ in range(4):
            masks = sample_mask_set(disc.spec, cfg.p, replay.masks)
            disc.zero_grad()
            loss, _, _ = disc_sample_loss(disc, cfg, batch, fake, masks)
            backward(loss)
            singles.append(disc.grads())
            losses.append(loss.item())

        for a, b in zip(grads, mean_grads(singles)):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)
        assert abs(report.disc_loss - np.mean(losses)) < 1e-12

    def test_generator_untouched(self):
        """Test a discriminator step leaves generator values and gradients alone"""
        cfg = small_config(Variant.PRB)
        gen, disc = networks(cfg)
        gen_before = [v.copy() for v in gen.values()]
        disc_before = [v.copy() for v in disc.values()]

        report = disc_step(gen, disc, cfg, real_batch(cfg), RngStreams.from_seed(0),
                           OptimizerState(cfg.optimizer))

        for a, b in zip(gen_before, gen.values()):
            np.testing.assert_array_equal(a, b)
        for g in gen.grads():
            assert not np.any(g)
        assert any(not np.array_equal(a, b) for a, b in zip(disc_before, disc.values()))
        assert report.grad_norms["discriminator"] > 0

    def test_batch_shape(self):
        """Test a batch of the wrong width is rejected"""
        cfg = small_config()
        gen, disc = networks(cfg)
        with pytest.raises(ContractError):
            estimate_disc_gradient(gen, disc, cfg, np.zeros((8, 2)), RngStreams.from_seed(0))

    def test_score_set_variance(self):
        """Test sampled discriminators disagree when masked and agree when not"""
        masked = small_config(Variant.PRB, p=0.4, n_mc=5)
        gen, disc = networks(masked)
        _, report = estimate_disc_gradient(gen, disc, masked, real_batch(masked), RngStreams.from_seed(0))
        assert report.score_set_variance > 0

        plain = small_config(Variant.VANILLA_NS)
        gen, disc = networks(plain)
        _, report = estimate_disc_gradient(gen, disc, plain, real_batch(plain), RngStreams.from_seed(0))
        assert report.score_set_variance == 0.0


class TestGenStep:
    """Test the generator update"""

    def test_replay_oracle(self):
        """Test the N = 3 gradient equals the mean of replayed single-generator gradients"""
        cfg = small_config(Variant.PRB, n_mc=3)
        gen, disc = networks(cfg)
        rng = RngStreams.from_seed(4)
        replay = rng.clone()

        grads, _ = estimate_gen_gradient(gen, disc, cfg, rng)

        z = sample_latent(cfg.latent_dim, cfg.batch, replay.latent, cfg.latent_prior)
        disc_masks = sample_mask_set(disc.spec, cfg.p, replay.masks)
        gen_masks = [sample_mask_set(gen.spec, cfg.p, replay.masks) for _ in range(3)]
        singles = []
        for masks in gen_masks:
            gen.zero_grad()
            backward(build_gen_loss(gen, disc, cfg, z, [masks], [disc_masks]))
            singles.append(gen.grads())

        for a, b in zip(grads, mean_grads(singles)):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("variant", [Variant.PRB, Variant.PRB_V1, Variant.PRB_V2, Variant.PRB_SWGAN])
    def test_discriminator_untouched(self, variant):
        """Test a generator step leaves discriminator values and gradients alone"""
        cfg = small_config(variant)
        gen, disc = networks(cfg)
        disc_before = [v.copy() for v in disc.values()]

        report = gen_step(gen, disc, cfg, RngStreams.from_seed(0), OptimizerState(cfg.optimizer),
                          batch_real=real_batch(cfg))

        for a, b in zip(disc_before, disc.values()):
            np.testing.assert_array_equal(a, b)
        for g in disc.grads():
            assert not np.any(g)
        assert np.isfinite(report.gen_loss)
        assert report.grad_norms["generator"] > 0

    def test_sliced_needs_real_batch(self):
        """Test sliced generator steps require the real batch"""
        cfg = small_config(Variant.SWGAN)
        gen, disc = networks(cfg)
        with pytest.raises(ContractError):
            estimate_gen_gradient(gen, disc, cfg, RngStreams.from_seed(0))


class TestPrbSlicedW:
    """Test the distance averaged over sampled discriminator feature maps"""

    def test_single_sample(self):
        """Test M = 1 equals one sliced distance on that sample's features"""
        cfg = small_config(Variant.PRB_SWGAN, m_slice=1)
        gen, disc = networks(cfg)
        batch = real_batch(cfg)
        rng = RngStreams.from_seed(6)
        replay = rng.clone()

        result = prb_sliced_w_distance(gen, disc, cfg, batch, rng)

        z = sample_latent(cfg.latent_dim, cfg.batch, replay.latent, cfg.latent_prior)
        projections = random_projections(cfg.hidden_dim, cfg.n_projections, replay.projections)
        fake = generate_batch(gen.frozen(), None, z).value
        masks = sample_mask_set(disc.spec, cfg.p, replay.masks)
        expected = sliced_w_distance(discriminate(disc, masks, batch, cfg).features.value,
                                     discriminate(disc, masks, fake, cfg).features.value,
                                     projections)
        assert abs(result - expected) < 1e-12

    def test_p0_terms_identical(self):
        """Test with p = 0 every term is the same, so M does not matter"""
        results = []
        for m_slice in (1, 4):
            cfg = small_config(Variant.PRB_SWGAN, p=0.0, m_slice=m_slice)
            gen, disc = networks(cfg)
            results.append(prb_sliced_w_distance(gen, disc, cfg, real_batch(cfg), RngStreams.from_seed(7)))
        assert results[0] == results[1]

    def test_replay_average(self):
        """Test M = 4 equals the average of four replayed terms"""
        cfg = small_config(Variant.PRB_SWGAN, m_slice=4)
        gen, disc = networks(cfg)
        batch = real_batch(cfg)
        rng = RngStreams.from_seed(8)
        replay = rng.clone()

        result = prb_sliced_w_distance(gen, disc, cfg, batch, rng)

        z = sample_latent(cfg.latent_dim, cfg.batch, replay.latent, cfg.latent_prior)
        projections = random_projections(cfg.hidden_dim, cfg.n_projections, replay.projections)
        fake = generate_batch(gen.frozen(), None, z).value
        terms = []
        for _ in range(4):
            masks = sample_mask_set(disc.spec, cfg.p, replay.masks)
            terms.append(sliced_w_distance(discriminate(disc, masks, batch, cfg).features.value,
                                           discriminate(disc, masks, fake, cfg).features.value,
                                           projections))
        assert abs(result - np.mean(terms)) < 1e-12


class TestGenerate:
    """Test sampling from the probabilistic generator"""

    def test_shape_and_determinism(self):
        """Test generate returns [n x data_dim] and replays with the same seed"""
        cfg = small_config(Variant.PRB, data_dim=2)
        gen, _ = networks(cfg)
        a = generate(gen, cfg, 50, np.random.default_rng(0), np.random.default_rng(1))
        b = generate(gen, cfg, 50, np.random.default_rng(0), np.random.default_rng(1))
        assert a.shape == (50, 2)
        np.testing.assert_array_equal(a, b)

    def test_instances_differ(self):
        """Test k sampled generators map one latent batch to different outputs"""
        cfg = small_config(Variant.PRB, p=0.5, hidden_dim=32)
        gen, _ = networks(cfg)
        z = sample_latent(1, 20, np.random.default_rng(0))
        instances = generate_instances(gen, cfg, z, 3, np.random.default_rng(1))
        assert len(instances) == 3
        assert all(x.shape == (20, 1) for x in instances)
        assert not np.array_equal(instances[0], instances[1])

    def test_instances_p0(self):
        """Test k generators with p = 0 are identical"""
        cfg = small_config(Variant.PRB, p=0.0)
        gen, _ = networks(cfg)
        z = sample_latent(1, 10, np.random.default_rng(0))
        first, second = generate_instances(gen, cfg, z, 2, np.random.default_rng(1))
        np.testing.assert_array_equal(first, second)


class TestGanTrainer:
    """Test the alternating trainer"""

    @pytest.mark.parametrize("variant", list(Variant))
    def test_every_variant_trains(self, variant):
        """Test a few steps of every variant give finite telemetry"""
        trainer = GanTrainer(small_config(variant))
        source = batch_source()
        for _ in range(3):
            report = trainer.step(source)
        assert trainer.step_count == 3
        assert len(trainer.history) == 3
        assert np.isfinite(report.disc_loss) and np.isfinite(report.gen_loss)
        assert set(report.grad_norms) == {"discriminator", "generator"}
        assert trainer.sample(16).shape == (16, 1)

    def test_uncertainty_reported(self):
        """Test uncertainty variants report a positive mean uncertainty"""
        trainer = GanTrainer(small_config(Variant.PRB_V1))
        report = trainer.step(batch_source())
        assert report.uncertainty_mean > 0

    def test_same_seed_same_history(self):
        """Test two trainers with one seed produce identical telemetry"""
        a, b = GanTrainer(small_config(Variant.PRB_V2)), GanTrainer(small_config(Variant.PRB_V2))
        sa, sb = batch_source(), batch_source()
        for _ in range(5):
            a.step(sa)
            b.step(sb)
        assert a.history == b.history

    def test_disc_steps_per_gen_step(self):
        """Test a ratio below one is rejected and extra discriminator updates run"""
        with pytest.raises(ContractError):
            GanTrainer(small_config(), disc_steps_per_gen_step=0)
        trainer = GanTrainer(small_config(), disc_steps_per_gen_step=3)
        trainer.step(batch_source())
        assert trainer.disc_opt.step == 3
        assert trainer.gen_opt.step == 1


class TestDeterminism:
    """Test identical seeds give bit-identical forward values and gradients"""

    @pytest.mark.parametrize("variant", [Variant.PRB, Variant.PRB_V1, Variant.PRB_V2, Variant.PRB_SWGAN])
    def test_replay_is_bitwise(self, variant):
        """Test two runs from the same seeds agree exactly"""
        cfg = small_config(variant)
        runs = []
        for _ in range(2):
            gen, disc = networks(cfg)
            rng = RngStreams.from_seed(7)
            d_grads, d_report = estimate_disc_gradient(gen, disc, cfg, real_batch(cfg), rng)
            g_grads, _ = estimate_gen_gradient(gen, disc, cfg, rng, batch_real=real_batch(cfg))
            samples = generate(gen, cfg, 50, np.random.default_rng(3), np.random.default_rng(4))
            runs.append((d_grads, g_grads, samples, d_report.disc_loss))

        first, second = runs
        for a, b in zip(first[0] + first[1], second[0] + second[1]):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(first[2], second[2])
        assert first[3] == second[3]


class TestGradcheckSuite:
    """Test analytic gradients of every variant against finite differences"""

    def test_small_suite(self):
        """Test two random networks per variant pass at 1e-4"""
        result = run_gradcheck_suite(n_nets=2, seed=0)
        assert result.passed, result.worst
        assert result.n_checked > 10 * result.n_skipped
        assert len(result.worst) == 12

    def test_default_seed_passes(self):
        """Test the suite passes on one network per variant for several seeds"""
        for seed in (1, 2, 3):
            assert run_gradcheck_suite(n_nets=1, seed=seed).passed


if __name__ == "__main__":
    pytest.main([__file__])
