import numpy as np
import pytest

from volta.latent import (ContinuousTheta, DiscreteTheta, categorical_entropy, code_log_likelihood, fixed_codes,
                          gaussian_entropy, kl_categorical, kl_gaussian, sample_codes, sample_gaussian,
                          sample_gumbel_max, sample_gumbel_softmax)
from volta.tensor import backward, ops, parameter
from volta.types.latent import CategoricalPosterior, GaussianPosterior, LatentCodes, LatentSample
from volta.types.modelconfig import CodeDistribution
from volta.util.exceptions import ContractError, DimensionError, InfiniteDivergenceError

from test.volta.utils import BaseTestCase, rng

HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


class TestDivergence(BaseTestCase):

    def test_kl_gaussian_against_standard_prior(self):
        q = GaussianPosterior([1.0, 0.0, -2.0], [0.0, np.log(2.0), 0.0])
        kl = kl_gaussian(q, GaussianPosterior.standard(3)).data
        # ½(σ² + μ² − 1) − log σ
        expected = [0.5, 0.5 * (4.0 - 1.0) - np.log(2.0), 2.0]
        self.assert_arrays_close(kl, expected)

    def test_kl_gaussian_is_zero_for_equal_distributions(self):
        mu, log_sigma = rng().standard_normal(4), rng(1).standard_normal(4)
        kl = kl_gaussian(GaussianPosterior(mu, log_sigma), GaussianPosterior(mu.copy(), log_sigma.copy()))
        self.assert_arrays_close(kl.data, np.zeros(4))

    def test_kl_gaussian_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            kl_gaussian(GaussianPosterior.standard(2), GaussianPosterior.standard(3))

    def test_kl_categorical_values(self):
        q = CategoricalPosterior.from_probs([[0.5, 0.5], [1.0, 0.0]])
        p = CategoricalPosterior.standard(2, 2)
        kl = kl_categorical(q, p).data
        self.assert_arrays_close(kl, [0.0, np.log(2.0)])

    def test_kl_categorical_zero_prior_mass(self):
        q = CategoricalPosterior.from_probs([[0.5, 0.5]])
        p = CategoricalPosterior.from_probs([[1.0, 0.0]])
        with pytest.raises(InfiniteDivergenceError):
            kl_categorical(q, p)

    def test_kl_categorical_gradient_vanishes_at_the_prior(self):
        logits = parameter(np.zeros((2, 3)))
        backward(ops.sum(kl_categorical(CategoricalPosterior(logits), CategoricalPosterior.standard(2, 3))))
        self.assert_arrays_close(logits.grad, np.zeros((2, 3)))

    def test_empty_latents(self):
        assert kl_gaussian(GaussianPosterior.standard(0), GaussianPosterior.standard(0)).size == 0
        assert kl_categorical(CategoricalPosterior.standard(0, 4), CategoricalPosterior.standard(0, 4)).size == 0

    def test_entropies(self):
        self.assert_arrays_close(gaussian_entropy(GaussianPosterior.standard(2)), [0.5 + HALF_LOG_2PI] * 2)
        self.assert_arrays_close(categorical_entropy(CategoricalPosterior.standard(1, 4)), [np.log(4.0)])
        self.assert_arrays_close(categorical_entropy(CategoricalPosterior.from_probs([1.0, 0.0])), [0.0])


class TestSampling(BaseTestCase):

    def test_sample_gaussian_with_fixed_noise(self):
        post = GaussianPosterior(parameter([1.0, -1.0]), parameter([0.0, np.log(0.5)]))
        z = sample_gaussian(post, None, noise=[2.0, 2.0])
        self.assert_arrays_close(z.data, [3.0, 0.0])
        backward(ops.sum(z))
        self.assert_arrays_equal(post.mu.grad, [1.0, 1.0])
        self.assert_arrays_close(post.log_sigma.grad, [2.0, 1.0])

    def test_sample_gaussian_noise_shape(self):
        with pytest.raises(ContractError):
            sample_gaussian(GaussianPosterior.standard(2), None, noise=[0.0])

    def test_gumbel_softmax_rows_are_distributions(self):
        post = CategoricalPosterior(rng().standard_normal((3, 5)))
        y = sample_gumbel_softmax(post, 0.5, rng(1)).data
        assert y.shape == (3, 5)
        assert np.all(y >= 0)
        self.assert_arrays_close(y.sum(axis=1), np.ones(3))

    def test_gumbel_softmax_temperature(self):
        with pytest.raises(ContractError):
            sample_gumbel_softmax(CategoricalPosterior.standard(1, 3), 0.0, rng())

    def test_gumbel_max_is_one_hot_on_the_support(self):
        post = CategoricalPosterior.from_probs([[0.0, 0.3, 0.7], [1.0, 0.0, 0.0]])
        for i in range(20):
            one_hot = sample_gumbel_max(post, rng(i))
            self.assert_arrays_equal(one_hot.sum(axis=1), [1.0, 1.0])
            assert one_hot[0, 0] == 0.0
            assert one_hot[1, 0] == 1.0

    def test_sample_codes(self):
        codes = sample_codes(4, 3, 5, rng())
        assert codes.n_cg == 4 and codes.n_ca == 3 and codes.k == 5
        assert np.all(np.abs(codes.continuous) <= 1.0)
        self.assert_arrays_equal(codes.discrete.sum(axis=1), np.ones(3))
        again = sample_codes(4, 3, 5, rng())
        self.assert_arrays_equal(codes.continuous, again.continuous)
        assert codes.indices == again.indices

    def test_sample_gaussian_codes(self):
        codes = sample_codes(2000, 0, 2, rng(), CodeDistribution.GAUSSIAN)
        assert np.abs(codes.continuous).max() > 1.0
        assert abs(float(np.mean(codes.continuous))) < 0.1

    def test_fixed_codes(self):
        codes = fixed_codes(2, 3, 4)
        self.assert_arrays_equal(codes.continuous, [0.0, 0.0])
        assert codes.indices == [0, 0, 0]


class TestLatentTypes(BaseTestCase):

    def test_codes_must_be_one_hot(self):
        with pytest.raises(ContractError):
            LatentCodes([0.0], [[0.5, 0.5]])
        with pytest.raises(DimensionError):
            LatentCodes([0.0], [1.0, 0.0])

    def test_code_replacement(self):
        codes = LatentCodes.from_indices([0.1, 0.2], [1, 0], 3)
        swept = codes.with_continuous(1, -0.5).with_discrete(0, 2)
        self.assert_arrays_equal(swept.continuous, [0.1, -0.5])
        assert swept.indices == [2, 0]
        assert codes.indices == [1, 0]

    def test_hardened_sample(self):
        sample = LatentSample([0.5], [[0.2, 0.7, 0.1], [0.6, 0.3, 0.1]], 1.0)
        hard = sample.hardened()
        self.assert_arrays_equal(hard.z_a.data, [[0, 1, 0], [1, 0, 0]])
        assert not hard.z_g.requires_grad

    def test_posterior_shapes(self):
        with pytest.raises(DimensionError):
            GaussianPosterior([0.0, 1.0], [0.0])
        with pytest.raises(DimensionError):
            CategoricalPosterior([0.0, 1.0])


class TestCodeLikelihood(BaseTestCase):

    def test_continuous(self):
        value = code_log_likelihood(ContinuousTheta(parameter(0.3)), 0.3)
        assert value.item() == pytest.approx(-HALF_LOG_2PI)
        value = code_log_likelihood(ContinuousTheta(parameter(0.0)), 1.0)
        assert value.item() == pytest.approx(-HALF_LOG_2PI - 0.5)

    def test_discrete(self):
        logits = parameter([0.0, 0.0, np.log(2.0)])
        value = code_log_likelihood(DiscreteTheta(logits), [0.0, 0.0, 1.0])
        assert value.item() == pytest.approx(np.log(0.5))
        backward(value)
        self.assert_arrays_close(logits.grad, [-0.25, -0.25, 0.5])

    def test_family_mismatch(self):
        with pytest.raises(ContractError):
            code_log_likelihood(ContinuousTheta(parameter(0.0)), [1.0, 0.0])
        with pytest.raises(ContractError):
            code_log_likelihood(DiscreteTheta(parameter([0.0, 0.0])), 1.0)
        with pytest.raises(ContractError):
            code_log_likelihood(DiscreteTheta(parameter([0.0, 0.0])), [0.0, 0.0, 1.0])
        with pytest.raises(ContractError):
            code_log_likelihood(0.5, 1.0)
