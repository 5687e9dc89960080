from volta.latent.sampling import (fixed_codes, sample_codes, sample_gaussian, sample_gumbel_max,
                                   sample_gumbel_softmax)
from volta.latent.divergence import categorical_entropy, gaussian_entropy, kl_categorical, kl_gaussian
from volta.latent.likelihood import ContinuousTheta, DiscreteTheta, code_log_likelihood
