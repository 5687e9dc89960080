import logging
import math

import numpy as np
from scipy.special import log_softmax, logsumexp

from volta.latent import sample_gumbel_max
from volta.latent.divergence import gaussian_log_density
from volta.tensor import no_grad
from volta.types.defaults import Defaults
from volta.types.latent import LatentSample, LatentState
from volta.util.exceptions import DegenerateInputError, VocabularyError

log = logging.getLogger(__name__)


def perplexity_from_log_likelihood(total_log_likelihood, n_tokens):
    if n_tokens <= 0:
        raise DegenerateInputError('perplexity(): no tokens to score')
    return math.exp(-total_log_likelihood / n_tokens)


def _check_vocabulary(ids, vocab_size):
    for token in ids:
        if not 0 <= token < vocab_size:
            raise VocabularyError('perplexity(): token id %d outside a vocabulary of %d' % (token, vocab_size))


def _sequence_log_likelihood(model, context, target, latent):
    logits = model.decoder_forward(context, target, latent).logits.data
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    gold = list(target) + [Defaults.eos_id]
    return float(np.sum(log_probs[np.arange(len(gold)), gold]))


def _importance_sample(model, context, target, rng):
    """One draw from q(z|x) with log q(z|x) and log p(z) of the drawn latents"""
    state = model.encode(context, target, rng)
    gaussian, categorical = state.posterior.gaussian, state.posterior.categorical
    z_g = gaussian.mu.data + gaussian.sigma * rng.standard_normal(gaussian.size)
    z_a = sample_gumbel_max(categorical, rng)
    prior = state.prior
    log_q = gaussian_log_density(z_g, gaussian.mu.data, gaussian.log_sigma.data)
    log_p = gaussian_log_density(z_g, prior.gaussian.mu.data, prior.gaussian.log_sigma.data)
    if z_a.size:
        with np.errstate(divide='ignore'):
            log_q += float(np.sum(z_a * np.log(categorical.probs)))
            log_p += float(np.sum(z_a * np.log(prior.categorical.probs)))
    latent = LatentState(state.posterior, prior, LatentSample(z_g, z_a, state.sample.temperature), state.codes)
    return latent, float(log_q), float(log_p)


def perplexity(model, examples, rng, samples=1):
    """
    exp of the mean token negative log-likelihood of (context, target) id sequences; the
    end-of-sequence token is scored.

    With samples == 1 the latents are one draw from the prior. With samples > 1 each sequence's
    likelihood is the importance-weighted estimate
    log (1/S) Σ_s p(x|z_s) p(z_s) / q(z_s|x) with z_s ~ q(z|x).
    """
    vocab_size = model.config.vocab_size
    total, n_tokens = 0.0, 0
    with no_grad():
        for context, target in examples:
            _check_vocabulary(list(context) + list(target), vocab_size)
            if samples <= 1:
                latent = model.sample_from_prior(context, rng)
                total += _sequence_log_likelihood(model, context, target, latent)
            else:
                weights = []
                for _ in range(samples):
                    latent, log_q, log_p = _importance_sample(model, context, target, rng)
                    weights.append(_sequence_log_likelihood(model, context, target, latent) + log_p - log_q)
                total += float(logsumexp(weights) - math.log(samples))
            n_tokens += len(target) + 1
    return perplexity_from_log_likelihood(total, n_tokens)


def active_units(means, threshold=Defaults.au_threshold):
    """Dimensions whose posterior mean varies across the dataset by more than `threshold`"""
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 2 or means.shape[0] < 2:
        raise DegenerateInputError('active_units(): needs at least two datapoints, got shape %s' % (means.shape,))
    return int(np.sum(np.var(means, axis=0) > threshold))


def mutual_information(mus, log_sigmas, rng, samples=Defaults.samples_per_context, logits=None):
    """
    Monte-Carlo estimate of E_{q(x,z)}[log q(z|x) − log q_agg(z)], where q_agg is the uniform
    mixture of the batch's posteriors.

    Parameters
    ----------
    mus, log_sigmas : array [N × n]
        Diagonal Gaussian posterior parameters for N datapoints
    logits : array [N × n_za × k], optional
        Categorical posterior logits; when given, z = (z_g, z_a) with q(z|x) = q(z_g|x)·q(z_a|x)
        and z_a drawn as hard categories
    """
    mus = np.asarray(mus, dtype=np.float64)
    log_sigmas = np.asarray(log_sigmas, dtype=np.float64)
    if mus.ndim != 2 or mus.shape != log_sigmas.shape or mus.shape[0] < 2:
        raise DegenerateInputError('mutual_information(): needs a batch of at least two posteriors, got %s'
                                   % (mus.shape,))
    if samples < 1:
        raise DegenerateInputError('mutual_information(): needs at least one sample per posterior')
    n = mus.shape[0]
    log_pi = None
    if logits is not None:
        logits = np.asarray(logits, dtype=np.float64)
        if logits.ndim != 3 or logits.shape[0] != n:
            raise DegenerateInputError('mutual_information(): expected logits of shape [%d × n_za × k], got %s'
                                       % (n, logits.shape))
        log_pi = log_softmax(logits, axis=2)
    estimates = []
    for i in range(n):
        z = mus[i] + np.exp(log_sigmas[i]) * rng.standard_normal((samples, mus.shape[1]))
        # [samples × N] log densities of every posterior at the draws of posterior i
        log_q_all = gaussian_log_density(z[:, None, :], mus[None, :, :], log_sigmas[None, :, :])
        if log_pi is not None and log_pi.shape[1]:
            gumbel = rng.gumbel(size=(samples,) + log_pi.shape[1:])
            categories = np.argmax(log_pi[i][None] + gumbel, axis=2)
            rows = np.arange(log_pi.shape[1])
            log_q_all = log_q_all + log_pi[:, rows[None, :], categories].sum(axis=2).T
        log_aggregate = logsumexp(log_q_all, axis=1) - math.log(n)
        estimates.append(np.mean(log_q_all[:, i] - log_aggregate))
    return float(np.mean(estimates))


def posterior_means(model, examples, rng):
    """Posterior means of the Gaussian latents, one row per (context, target)"""
    rows = []
    with no_grad():
        for context, target in examples:
            rows.append(model.encode(context, target, rng).posterior.gaussian.mu.data.copy())
    return np.array(rows).reshape(len(rows), model.config.n_zg)
