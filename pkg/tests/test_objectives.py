"""
Tests for GAN objectives
"""

from concurrent.futures import ThreadPoolExecutor
import logging

import pytest
import numpy as np
from scipy.optimize import linear_sum_assignment

from pyprbgan.autodiff.tensor import Node
from pyprbgan.core.errors import ConfigError, ContractError
from pyprbgan.gan.config import GanConfig, Variant
from pyprbgan.gan.networks import DiscOutput
from pyprbgan.gan.objectives import (
    GanObjective,
    disc_loss_v1,
    gen_loss_v1,
    gen_loss_v2,
    non_unit_projection_count,
    random_projections,
    reset_non_unit_projection_count,
    score_set,
    sliced_w_distance,
    variance_reward,
    weighted_logit,
)


def outputs(logits, uncertainty=0.0):
    """One single-point DiscOutput per sampled discriminator"""
    return [
        DiscOutput(logit=Node.constant([[v]]), uncertainty=Node.constant([[uncertainty]]))
        for v in logits
    ]


def softplus(x):
    return float(np.logaddexp(0.0, x))


class TestWeightedLogit:
    """Test the uncertainty-weighted score"""

    def test_example(self):
        """Test D = 2.6, u = 0.7, b1 = 0.3 gives 2.6"""
        result = weighted_logit(Node.constant([2.6]), Node.constant([0.7]), 0.3)
        assert abs(result.item() - 2.6) < 1e-12

    def test_zero_uncertainty(self):
        """Test u = 0 divides the logit by b1"""
        result = weighted_logit(Node.constant([1.5]), Node.constant([0.0]), 0.3)
        assert abs(result.item() - 1.5 / 0.3) < 1e-12

    def test_uncertainty_shrinks_score(self):
        """Test more uncertainty pulls the score towards zero"""
        logit = Node.constant([3.0, 3.0])
        result = weighted_logit(logit, Node.constant([0.0, 5.0]), 0.3).value
        assert abs(result[1]) < abs(result[0])

    def test_monotone_in_uncertainty(self):
        """Test |sigmoid(score) - 0.5| never grows as u increases"""
        sweep = np.linspace(0.0, 10.0, 41)
        for value in (-4.0, -0.5, 0.5, 4.0):
            scores = weighted_logit(Node.constant(np.full(41, value)), Node.constant(sweep), 0.3).value
            distance = np.abs(1.0 / (1.0 + np.exp(-scores)) - 0.5)
            assert np.all(np.diff(distance) <= 1e-15)

    def test_invalid_bias(self):
        """Test a non-positive b1 is rejected"""
        with pytest.raises(ContractError):
            weighted_logit(Node.constant([1.0]), Node.constant([0.0]), 0.0)


class TestDiscLossV1:
    """Test the uncertainty-weighted discriminator loss"""

    def test_reduces_to_bce(self):
        """Test u = 0 and b1 = 1 reproduce the plain BCE discriminator loss"""
        cfg = GanConfig(variant=Variant.PRB_V1, b1=1.0, n_mc=3)
        real, fake = outputs([0.4, -1.2, 2.0]), outputs([-0.3, 0.8, -2.5])
        expected = np.mean([softplus(-r) + softplus(f) for r, f in zip([0.4, -1.2, 2.0], [-0.3, 0.8, -2.5])])
        assert abs(disc_loss_v1(real, fake, cfg).item() - expected) < 1e-12

    def test_zero_logits(self):
        """Test N = 1 with zero logits and zero uncertainty gives 2 ln 2"""
        cfg = GanConfig(variant=Variant.PRB_V1, b1=1.0, n_mc=1)
        loss = disc_loss_v1(outputs([0.0]), outputs([0.0]), cfg)
        assert abs(loss.item() - 2.0 * np.log(2.0)) < 1e-12

    def test_uncertainty_penalty(self):
        """Test predicted uncertainty is charged in the loss"""
        cfg = GanConfig(variant=Variant.PRB_V1, b1=1.0, n_mc=1)
        loss = disc_loss_v1(outputs([0.0], uncertainty=0.5), outputs([0.0], uncertainty=0.5), cfg)
        assert abs(loss.item() - (2.0 * np.log(2.0) + 1.0)) < 1e-12

    def test_uncertainty_offset_sweep(self):
        """Test confident correct predictions cost more as uncertainty grows"""
        cfg = GanConfig(variant=Variant.PRB_V1, b1=0.3, n_mc=2)
        losses = [
            disc_loss_v1(outputs([8.0, 6.0], uncertainty=c), outputs([-8.0, -6.0], uncertainty=c), cfg).item()
            for c in np.linspace(0.0, 5.0, 26)
        ]
        assert np.all(np.diff(losses) > 0.0)

    def test_sample_count_mismatch(self):
        """Test a list shorter than n_mc is a contract error"""
        cfg = GanConfig(variant=Variant.PRB_V1, n_mc=3)
        with pytest.raises(ContractError):
            disc_loss_v1(outputs([0.0, 0.0]), outputs([0.0, 0.0]), cfg)
        with pytest.raises(ContractError):
            gen_loss_v1(outputs([0.0]), cfg)


class TestVarianceReward:
    """Test the score-set variance reward"""

    def test_disagreeing_scores(self):
        """Test scores [-5, 7, -5, 7] give lambda * 36 / (1 + b2)"""
        cfg = GanConfig(variant=Variant.PRB_V2, b1=1.0, b2=0.3, lambda_var=2.0, n_mc=4)
        scores = score_set(outputs([-5.0, 7.0, -5.0, 7.0]), cfg)
        np.testing.assert_array_equal(scores.value, [[-5.0, 7.0, -5.0, 7.0]])
        reward = variance_reward(scores, cfg.lambda_var, cfg.b2)
        assert abs(reward.item() - 2.0 * 36.0 / 1.3) < 1e-12

    def test_agreeing_scores(self):
        """Test identical scores give no reward"""
        reward = variance_reward(Node.constant([[1.0, 1.0, 1.0, 1.0]]), 1.0, 0.3)
        assert reward.item() == 0.0

    def test_mean_over_points(self):
        """Test the reward averages the per-point ratios"""
        scores = Node.constant([[-5.0, 7.0, -5.0, 7.0], [1.0, 1.0, 1.0, 1.0]])
        assert abs(variance_reward(scores, 1.0, 0.3).item() - 18.0 / 1.3) < 1e-12


class TestGenLossV2:
    """Test the generator loss with the variance reward"""

    def test_worked_example(self):
        """Test a disagreeing score set lowers the loss by exactly the reward"""
        cfg = GanConfig(variant=Variant.PRB_V2, b1=1.0, b2=0.3, lambda_var=1.0, n_mc=4)
        disagree = outputs([-5.0, 7.0, -5.0, 7.0])
        agree = outputs([1.0, 1.0, 1.0, 1.0])

        bce_disagree = np.mean([softplus(5.0), softplus(-7.0), softplus(5.0), softplus(-7.0)])
        assert abs(gen_loss_v2(disagree, cfg).item() - (bce_disagree - 36.0 / 1.3)) < 1e-12
        assert abs(gen_loss_v2(agree, cfg).item() - softplus(-1.0)) < 1e-12
        assert gen_loss_v2(disagree, cfg).item() < gen_loss_v2(agree, cfg).item()

    def test_spread_sweep(self):
        """Test the loss falls strictly as scores spread around a fixed mean"""
        cfg = GanConfig(variant=Variant.PRB_V2, b1=1.0, b2=0.3, lambda_var=1.0, n_mc=4)
        losses = [
            gen_loss_v2(outputs([1.0 - s, 1.0 + s, 1.0 - s, 1.0 + s]), cfg).item()
            for s in np.linspace(0.0, 10.0, 41)
        ]
        assert np.all(np.diff(losses) < 0.0)

    def test_lambda_zero_matches_v1(self):
        """Test lambda = 0 reduces to the prb_v1 generator loss"""
        cfg = GanConfig(variant=Variant.PRB_V2, lambda_var=0.0, n_mc=3)
        fake = outputs([0.3, -2.0, 1.7], uncertainty=0.2)
        assert abs(gen_loss_v2(fake, cfg).item() - gen_loss_v1(fake, cfg).item()) < 1e-12

    def test_single_sample(self):
        """Test one discriminator sample is a configuration error"""
        cfg = GanConfig(variant=Variant.PRB_V2, n_mc=2)
        with pytest.raises(ConfigError):
            gen_loss_v2(outputs([0.0]), cfg)

    def test_config_rejects_single_sample(self):
        """Test prb_v2 with n_mc = 1 fails validation"""
        with pytest.raises(ValueError):
            GanConfig(variant=Variant.PRB_V2, n_mc=1)


class TestSlicedW:
    """Test the sliced Wasserstein distance"""

    def test_nonnegative_and_symmetric(self):
        """Test the distance is nonnegative, symmetric and zero only on matching sets"""
        rng = np.random.default_rng(11)
        for _ in range(30):
            n, d, k = (int(v) for v in (rng.integers(2, 33), rng.integers(1, 6), rng.integers(1, 9)))
            a, b = rng.normal(size=(n, d)), rng.normal(size=(n, d))
            omega = random_projections(d, k, rng)
            forward = sliced_w_distance(a, b, omega)
            assert forward > 0.0
            assert forward == sliced_w_distance(b, a, omega)
            assert sliced_w_distance(a, a[rng.permutation(n)], omega) < 1e-20


    def test_identical_sets(self):
        """Test identical feature sets are at distance 0"""
        rng = np.random.default_rng(0)
        features = rng.normal(size=(10, 3))
        assert sliced_w_distance(features, features, random_projections(3, 5, rng)) == 0.0

    def test_single_pair(self):
        """Test d = 1, omega = 1, {0} vs {1} gives 1"""
        assert sliced_w_distance(np.array([[0.0]]), np.array([[1.0]]), np.array([[1.0]])) == 1.0

    def test_row_mismatch(self):
        """Test unequal row counts are a contract error"""
        with pytest.raises(ContractError):
            sliced_w_distance(np.zeros((3, 2)), np.zeros((4, 2)), random_projections(2, 2, np.random.default_rng(0)))

    def test_non_unit_projection(self, caplog):
        """Test a non-unit projection is renormalised with a warning"""
        reset_non_unit_projection_count()
        with caplog.at_level(logging.WARNING):
            result = sliced_w_distance(np.array([[0.0]]), np.array([[1.0]]), np.array([[2.0]]))
        assert result == 1.0
        assert non_unit_projection_count() == 1
        assert "unit-norm" in caplog.text
        reset_non_unit_projection_count()

    def test_renormalisation_count_across_threads(self):
        """Test concurrent renormalisations are all counted"""
        reset_non_unit_projection_count()

        def run(_):
            for _ in range(50):
                sliced_w_distance(np.array([[0.0]]), np.array([[1.0]]), np.array([[2.0]]))

        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(run, range(8)))
        assert non_unit_projection_count() == 400
        reset_non_unit_projection_count()

    def test_random_projections_unit_norm(self):
        """Test drawn directions are unit vectors"""
        projections = random_projections(6, 40, np.random.default_rng(1))
        assert projections.shape == (6, 40)
        np.testing.assert_allclose(np.linalg.norm(projections, axis=0), 1.0, atol=1e-12)

    def test_assignment_oracle(self):
        """Test against an optimal-assignment computation of the 1-D transport cost"""
        rng = np.random.default_rng(2024)
        for _ in range(50):
            n, d, k = (int(v) for v in (rng.integers(1, 65), rng.integers(1, 9), rng.integers(1, 17)))
            real, fake = rng.normal(size=(n, d)), rng.normal(loc=0.5, size=(n, d))
            omega = random_projections(d, k, rng)

            total = 0.0
            for j in range(k):
                a, b = fake @ omega[:, j], real @ omega[:, j]
                cost = (a[:, None] - b[None, :]) ** 2
                rows, cols = linear_sum_assignment(cost)
                total += cost[rows, cols].sum()

            assert abs(sliced_w_distance(real, fake, omega) - total / (n * k)) < 1e-10


class TestGanObjective:
    """Test per-variant loss tables"""

    def test_least_squares_optimum(self):
        """Test LS losses vanish at their targets"""
        cfg = GanConfig(variant=Variant.VANILLA_LS)
        objective = GanObjective(Variant.VANILLA_LS)
        real = DiscOutput(logit=Node.constant([[1.0], [1.0]]))
        fake = DiscOutput(logit=Node.constant([[0.0], [0.0]]))
        assert objective.disc_loss(real, fake, cfg).item() == 0.0
        assert objective.gen_loss(real, cfg).item() == 0.0

    def test_sliced_has_no_pointwise_generator_loss(self):
        """Test sliced variants leave gen_loss unset"""
        assert GanObjective(Variant.SWGAN).gen_loss is None
        assert GanObjective(Variant.PRB).gen_loss is not None


if __name__ == "__main__":
    pytest.main([__file__])
