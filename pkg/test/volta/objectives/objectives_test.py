import math

import numpy as np
import pytest

from volta.latent import ContinuousTheta, DiscreteTheta
from volta.objectives import (LossParts, beta_at, qami_loss, qami_loss_from_logits, regularization_loss,
                              total_loss, vmim_loss)
from volta.objectives.losses import code_values
from volta.tensor import backward, ops, parameter
from volta.types.latent import LatentCodes
from volta.types.lossreport import LossWeights
from volta.util.exceptions import ContractError, NumericError

from test.volta.utils import BaseTestCase

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class TestSchedule(BaseTestCase):

    def test_linear_warmup(self):
        weights = LossWeights(beta_max=0.1, warmup_fraction=0.25)
        assert beta_at(0, 100, weights) == 0.0
        assert beta_at(10, 100, weights) == pytest.approx(0.04)
        assert beta_at(25, 100, weights) == pytest.approx(0.1)
        assert beta_at(100, 100, weights) == pytest.approx(0.1)

    def test_without_annealing(self):
        weights = LossWeights(beta_max=0.3, anneal=False)
        assert beta_at(0, 100, weights) == 0.3
        assert beta_at(0, 0, LossWeights(beta_max=0.2)) == 0.2

    def test_step_outside_the_run(self):
        with pytest.raises(ContractError):
            beta_at(101, 100, LossWeights())
        with pytest.raises(ContractError):
            beta_at(-1, 100, LossWeights())


class TestRegularization(BaseTestCase):

    def test_free_bits_hinge(self):
        assert regularization_loss([0.5, 2.0], None, lambda_fb=1.0).item() == pytest.approx(1.5)
        assert regularization_loss([0.5, 2.0], None, lambda_fb=0.0).item() == pytest.approx(1.25)

    def test_joint_and_separate_means(self):
        joint = regularization_loss([0.5, 2.0], [3.0], lambda_fb=1.0)
        separate = regularization_loss([0.5, 2.0], [3.0], lambda_fb=1.0, separate=True)
        assert joint.item() == pytest.approx(2.0)
        assert separate.item() == pytest.approx(4.5)

    def test_hinge_blocks_gradient_below_the_floor(self):
        kl = parameter([0.5, 2.0])
        backward(regularization_loss(kl, None, lambda_fb=1.0))
        self.assert_arrays_equal(kl.grad, [0.0, 0.5])

    def test_invalid_inputs(self):
        with pytest.raises(ContractError):
            regularization_loss([-0.5], None)
        with pytest.raises(ContractError):
            regularization_loss([0.5], None, lambda_fb=-1.0)
        assert regularization_loss(np.zeros(0), np.zeros(0)).item() == 0.0


class TestVmim(BaseTestCase):

    def test_perfect_continuous_recovery(self):
        thetas = [ContinuousTheta(parameter(0.2)), ContinuousTheta(parameter(-0.7))]
        assert vmim_loss(thetas, [0.2, -0.7]).item() == pytest.approx(HALF_LOG_2PI)

    def test_codes_in_head_order(self):
        codes = LatentCodes.from_indices([0.5], [2], 3)
        values = code_values(codes)
        assert values[0] == 0.5
        self.assert_arrays_equal(values[1], [0.0, 0.0, 1.0])
        thetas = [ContinuousTheta(parameter(0.5)), DiscreteTheta(parameter([0.0, 0.0, 0.0]))]
        expected = 0.5 * (HALF_LOG_2PI + math.log(3.0))
        assert vmim_loss(thetas, codes).item() == pytest.approx(expected)

    def test_head_count_must_match(self):
        with pytest.raises(ContractError):
            vmim_loss([ContinuousTheta(parameter(0.0))], [0.0, 1.0])
        assert vmim_loss([], LatentCodes.empty(3)).item() == 0.0


class TestQami(BaseTestCase):

    def test_chance_scores(self):
        expected = 2.0 * math.log(2.0)
        assert qami_loss([0.5], [0.5], [0.5]).item() == pytest.approx(expected)
        assert qami_loss_from_logits([0.0], [0.0], [0.0]).item() == pytest.approx(expected)

    def test_logit_and_probability_forms_agree(self):
        logits = [1.3, -0.4], [0.2, 2.0], [-1.1, 0.6]
        probs = [[1.0 / (1.0 + math.exp(-x)) for x in group] for group in logits]
        assert qami_loss_from_logits(*logits).item() == pytest.approx(qami_loss(*probs).item())

    def test_confident_discrimination_is_cheap(self):
        assert qami_loss_from_logits([20.0], [-20.0], [-20.0]).item() < 1e-6

    def test_scores_must_be_probabilities(self):
        with pytest.raises(ContractError):
            qami_loss([1.0], [0.5], [0.5])
        with pytest.raises(ContractError):
            qami_loss([0.5], [], [0.5])


class TestTotalLoss(BaseTestCase):

    def test_weighted_sum(self):
        parts = LossParts(ae=ops.constant(2.0), reg=ops.constant(3.0), vmim=ops.constant(0.5), qami=1.0,
                          kl_per_dim=np.array([0.1, 0.2]))
        weights = LossWeights(beta_max=0.2, gamma=2.0, qami_weight=0.5, anneal=False)
        loss, report = total_loss(parts, weights, step=4, total_steps=10)

        assert loss.item() == pytest.approx(2.0 + 0.2 * 3.0 + 2.0 * 0.5 + 0.5 * 1.0)
        assert report.total == pytest.approx(loss.item())
        assert report.total == pytest.approx(report.recomputed_total())
        assert report.beta_used == 0.2
        assert report.kl_per_dim == [0.1, 0.2]
        assert report.step == 4

    def test_gradient_flows_through_every_term(self):
        ae, reg = parameter(1.0), parameter(1.0)
        loss, _ = total_loss(LossParts(ae=ae, reg=reg), LossWeights(beta_max=0.5, anneal=False), 0, 1)
        backward(loss)
        assert float(ae.grad) == pytest.approx(1.0)
        assert float(reg.grad) == pytest.approx(0.5)

    def test_non_finite_term(self):
        parts = LossParts(ae=ops.constant(float('nan')))
        with pytest.raises(NumericError) as excinfo:
            total_loss(parts, LossWeights(), 0, 10)
        assert excinfo.value.term == 'ae'

    def test_non_scalar_term(self):
        with pytest.raises(ContractError):
            total_loss(LossParts(ae=ops.constant([1.0, 2.0])), LossWeights(), 0, 10)
