import logging

import numpy as np

from volta.tensor import Tensor, ops
from volta.types.latent import CategoricalPosterior, GaussianPosterior, LatentCodes
from volta.types.modelconfig import CodeDistribution
from volta.util.exceptions import ContractError

log = logging.getLogger(__name__)

# keeps −log(−log U) finite at the ends of [0, 1)
_UNIFORM_FLOOR = np.finfo(np.float64).tiny


def _gumbel(shape, rng):
    u = np.clip(rng.random(shape), _UNIFORM_FLOOR, 1.0 - np.finfo(np.float64).eps)
    return -np.log(-np.log(u))


def sample_gaussian(post: GaussianPosterior, rng, noise=None) -> Tensor:
    """
    Reparametrized draw z = μ + σ·ε with ε ~ N(0, 1).

    ε enters as a constant, so gradients reach μ and log_sigma only. Passing `noise` freezes
    the draw.
    """
    if noise is None:
        noise = rng.standard_normal(post.size)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != post.mu.shape:
        raise ContractError('sample_gaussian(): noise shape %s does not match %s' % (noise.shape, post.mu.shape))
    return ops.add(post.mu, ops.multiply(ops.exp(post.log_sigma), ops.constant(noise)))


def sample_gumbel_softmax(post: CategoricalPosterior, temperature, rng, noise=None) -> Tensor:
    """
    Relaxed one-hot draws y = softmax((log π + G)/τ), one row per categorical variable.
    """
    if not temperature > 0:
        raise ContractError('sample_gumbel_softmax(): temperature must be positive, got %r' % (temperature,))
    if noise is None:
        noise = _gumbel(post.logits.shape, rng)
    if post.n_vars == 0:
        return Tensor(np.zeros(post.logits.shape))
    perturbed = ops.add(ops.log_softmax(post.logits, axis=1), ops.constant(noise))
    return ops.softmax(ops.scale(perturbed, 1.0 / temperature), axis=1)


def sample_gumbel_max(post: CategoricalPosterior, rng) -> np.ndarray:
    """Hard one-hot draws argmax_i (G_i + log π_i)"""
    one_hot = np.zeros(post.logits.shape)
    if post.n_vars == 0:
        return one_hot
    with np.errstate(divide='ignore'):
        scores = np.log(post.probs) + _gumbel(post.logits.shape, rng)
    one_hot[np.arange(post.n_vars), np.argmax(scores, axis=1)] = 1.0
    return one_hot


def sample_codes(n_cg, n_ca, k, rng, distribution=CodeDistribution.UNIFORM) -> LatentCodes:
    """
    Continuous codes i.i.d. Uniform(−1, 1) (or N(0, 1)) and discrete codes i.i.d. uniform over k.
    """
    if n_cg < 0 or n_ca < 0 or k <= 0:
        raise ContractError('sample_codes(): counts must be non-negative and k positive')
    if CodeDistribution(distribution) == CodeDistribution.GAUSSIAN:
        continuous = rng.standard_normal(n_cg)
    else:
        continuous = rng.uniform(-1.0, 1.0, n_cg)
    indices = rng.integers(0, k, n_ca)
    return LatentCodes.from_indices(continuous, indices, k)


def fixed_codes(n_cg, n_ca, k) -> LatentCodes:
    """c_g = 0 and every c_a on category 0"""
    return LatentCodes.from_indices(np.zeros(n_cg), [0] * n_ca, k)
