from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from volta.tensor import Tensor, as_tensor
from volta.util.exceptions import ContractError, DimensionError


@dataclass
class GaussianPosterior:
    """Diagonal Gaussian over the continuous latents; σ = exp(log_sigma)"""

    mu: Tensor
    log_sigma: Tensor

    def __post_init__(self):
        self.mu = as_tensor(self.mu)
        self.log_sigma = as_tensor(self.log_sigma)
        if self.mu.ndim != 1 or self.mu.shape != self.log_sigma.shape:
            raise DimensionError('GaussianPosterior: mu %s and log_sigma %s must be equal-length vectors'
                                 % (self.mu.shape, self.log_sigma.shape))

    @property
    def size(self):
        return self.mu.shape[0]

    @property
    def sigma(self):
        return np.exp(self.log_sigma.data)

    @staticmethod
    def standard(size):
        return GaussianPosterior(np.zeros(size), np.zeros(size))


@dataclass
class CategoricalPosterior:
    """One categorical per row; π_j = softmax(logits_j)"""

    logits: Tensor

    def __post_init__(self):
        self.logits = as_tensor(self.logits)
        if self.logits.ndim != 2:
            raise DimensionError('CategoricalPosterior: logits must be [n_vars × k], got %s'
                                 % (self.logits.shape,))

    @property
    def n_vars(self):
        return self.logits.shape[0]

    @property
    def k(self):
        return self.logits.shape[1]

    @property
    def probs(self):
        return special.softmax(self.logits.data, axis=1) if self.n_vars else np.zeros(self.logits.shape)

    @staticmethod
    def standard(n_vars, k):
        return CategoricalPosterior(np.zeros((n_vars, k)))

    @staticmethod
    def from_probs(probs):
        """Zero probabilities become −inf logits"""
        probs = np.asarray(probs, dtype=np.float64)
        if probs.ndim == 1:
            probs = probs.reshape(1, -1)
        with np.errstate(divide='ignore'):
            return CategoricalPosterior(np.log(probs))


@dataclass
class PosteriorSet:
    """Distribution parameters for every latent variable; a prior is a second instance"""

    gaussian: GaussianPosterior
    categorical: CategoricalPosterior

    @staticmethod
    def standard(n_zg, n_za, k):
        return PosteriorSet(GaussianPosterior.standard(n_zg), CategoricalPosterior.standard(n_za, k))


@dataclass
class LatentCodes:
    """
    Input-independent controls: continuous codes c_g and one-hot discrete codes c_a.
    """

    continuous: np.ndarray
    discrete: np.ndarray

    def __post_init__(self):
        self.continuous = np.asarray(self.continuous, dtype=np.float64).reshape(-1)
        self.discrete = np.asarray(self.discrete, dtype=np.float64)
        if self.discrete.ndim != 2:
            raise DimensionError('LatentCodes: discrete codes must be [n_ca × k], got %s'
                                 % (self.discrete.shape,))
        if self.discrete.size and not (np.all((self.discrete == 0) | (self.discrete == 1))
                                       and np.all(self.discrete.sum(axis=1) == 1)):
            raise ContractError('LatentCodes: every discrete code must be one-hot')

    @property
    def n_cg(self):
        return self.continuous.shape[0]

    @property
    def n_ca(self):
        return self.discrete.shape[0]

    @property
    def k(self):
        return self.discrete.shape[1]

    @property
    def indices(self):
        return [int(i) for i in np.argmax(self.discrete, axis=1)] if self.n_ca else []

    def with_continuous(self, index, value):
        continuous = self.continuous.copy()
        continuous[index] = value
        return LatentCodes(continuous, self.discrete.copy())

    def with_discrete(self, index, category):
        discrete = self.discrete.copy()
        discrete[index] = 0.0
        discrete[index, category] = 1.0
        return LatentCodes(self.continuous.copy(), discrete)

    @staticmethod
    def empty(k):
        return LatentCodes(np.zeros(0), np.zeros((0, k)))

    @staticmethod
    def from_indices(continuous, indices, k):
        discrete = np.zeros((len(indices), k))
        discrete[np.arange(len(indices)), list(indices)] = 1.0
        return LatentCodes(continuous, discrete)


@dataclass
class LatentSample:
    z_g: Tensor
    z_a: Tensor
    temperature: float

    def __post_init__(self):
        self.z_g = as_tensor(self.z_g)
        self.z_a = as_tensor(self.z_a)
        if self.z_g.ndim != 1 or self.z_a.ndim != 2:
            raise DimensionError('LatentSample: z_g must be a vector and z_a [n_za × k], got %s and %s'
                                 % (self.z_g.shape, self.z_a.shape))

    def hardened(self):
        """z_a replaced by the one-hot of its argmax; used at evaluation time"""
        hard = np.zeros(self.z_a.shape)
        if self.z_a.size:
            hard[np.arange(self.z_a.shape[0]), np.argmax(self.z_a.data, axis=1)] = 1.0
        return LatentSample(self.z_g.detach(), Tensor(hard), self.temperature)

    def detach(self):
        return LatentSample(self.z_g.detach(), self.z_a.detach(), self.temperature)


@dataclass
class LatentState:
    posterior: Optional[PosteriorSet]
    prior: Optional[PosteriorSet]
    sample: LatentSample
    codes: LatentCodes

    def with_codes(self, codes):
        return LatentState(self.posterior, self.prior, self.sample, codes)

    def with_sample(self, sample):
        return LatentState(self.posterior, self.prior, sample, self.codes)
