import logging

import numpy as np

from volta.tensor import Function, Tensor, ops
from volta.types.latent import CategoricalPosterior, GaussianPosterior
from volta.util.exceptions import DimensionError, InfiniteDivergenceError

log = logging.getLogger(__name__)


def kl_gaussian(q: GaussianPosterior, p: GaussianPosterior) -> Tensor:
    """
    Per-dimension KL(q‖p) between diagonal Gaussians:
    log(σ′/σ) + (σ² + (μ − μ′)²)/(2σ′²) − ½
    """
    if q.size != p.size:
        raise DimensionError('kl_gaussian(): %d dimensions against %d' % (q.size, p.size))
    if q.size == 0:
        return Tensor(np.zeros(0))
    diff = ops.subtract(q.mu, p.mu)
    # exp(−2·log σ′) = 1/σ′²
    inv_prior_var = ops.exp(ops.scale(p.log_sigma, -2.0))
    ratio = ops.multiply(
        ops.add(ops.exp(ops.scale(q.log_sigma, 2.0)), ops.multiply(diff, diff)),
        inv_prior_var)
    return ops.shift(ops.add(ops.subtract(p.log_sigma, q.log_sigma), ops.scale(ratio, 0.5)), -0.5)


class CategoricalKL(Function):
    """KL(π‖π′) per row from logits, with 0·log 0 = 0"""

    tag = 'kl_categorical'

    @staticmethod
    def _log_softmax(logits):
        shifted = logits - np.max(logits, axis=1, keepdims=True)
        return shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))

    def forward(self, q_logits, p_logits):
        log_q = self._log_softmax(q_logits)
        log_p = self._log_softmax(p_logits)
        q = np.exp(log_q)
        support = q > 0
        if np.any(support & np.isneginf(log_p)):
            raise InfiniteDivergenceError('kl_categorical(): prior assigns zero probability where the '
                                          'posterior does not')
        diff = np.where(support, log_q - np.where(support, log_p, 0.0), 0.0)
        self.q, self.p, self.diff = q, np.exp(log_p), diff
        self.kl = np.sum(q * diff, axis=1)
        return self.kl

    def backward(self, grad):
        g = grad[:, None]
        q_grad = g * self.q * (self.diff - self.kl[:, None])
        p_grad = g * (self.p - self.q)
        return q_grad, p_grad


def kl_categorical(q: CategoricalPosterior, p: CategoricalPosterior) -> Tensor:
    if q.logits.shape != p.logits.shape:
        raise DimensionError('kl_categorical(): shapes %s and %s do not match' % (q.logits.shape, p.logits.shape))
    if q.n_vars == 0:
        return Tensor(np.zeros(0))
    return CategoricalKL.apply(q.logits, p.logits)


def gaussian_entropy(post: GaussianPosterior) -> np.ndarray:
    """Per-dimension differential entropy ½(1 + log 2π) + log σ"""
    return 0.5 * (1.0 + np.log(2.0 * np.pi)) + post.log_sigma.data


def categorical_entropy(post: CategoricalPosterior) -> np.ndarray:
    probs = post.probs
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = np.where(probs > 0, probs * np.log(probs), 0.0)
    return -np.sum(terms, axis=1)


def gaussian_log_density(z, mu, log_sigma):
    """Log density of a diagonal Gaussian, summed over the last axis"""
    z, mu, log_sigma = np.asarray(z), np.asarray(mu), np.asarray(log_sigma)
    return np.sum(-0.5 * np.log(2.0 * np.pi) - log_sigma - 0.5 * ((z - mu) * np.exp(-log_sigma)) ** 2, axis=-1)
