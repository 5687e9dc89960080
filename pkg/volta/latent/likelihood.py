import logging
from dataclasses import dataclass

import numpy as np
from methoddispatch import SingleDispatch, singledispatch

from volta.tensor import Tensor, as_tensor, ops
from volta.util.exceptions import ContractError, DimensionError

log = logging.getLogger(__name__)

_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass
class ContinuousTheta:
    """Recovery head output for one continuous code: the mean of a unit-variance Gaussian"""

    mean: Tensor

    def __post_init__(self):
        self.mean = as_tensor(self.mean)
        if self.mean.size != 1:
            raise DimensionError('ContinuousTheta: mean must be a scalar, got shape %s' % (self.mean.shape,))


@dataclass
class DiscreteTheta:
    """Recovery head output for one discrete code: k logits"""

    logits: Tensor

    def __post_init__(self):
        self.logits = as_tensor(self.logits)
        if self.logits.ndim != 1:
            raise DimensionError('DiscreteTheta: logits must be a vector, got shape %s' % (self.logits.shape,))


class CodeLikelihood(SingleDispatch):
    """Log-likelihood of a code under its recovery head, dispatched on the head's family"""

    @singledispatch
    def log_likelihood(self, theta, code):
        raise ContractError('code_log_likelihood(): unsupported recovery parameters %s' % type(theta).__name__)

    @log_likelihood.register(ContinuousTheta)
    def continuous_log_likelihood(self, theta, code):
        if np.ndim(code) != 0:
            raise ContractError('code_log_likelihood(): continuous recovery head given a one-hot code')
        residual = ops.shift(ops.scale(ops.reshape(theta.mean, ()), -1.0), float(code))
        return ops.shift(ops.scale(ops.multiply(residual, residual), -0.5), -_HALF_LOG_2PI)

    @log_likelihood.register(DiscreteTheta)
    def discrete_log_likelihood(self, theta, code):
        code = np.asarray(code, dtype=np.float64)
        if code.ndim != 1:
            raise ContractError('code_log_likelihood(): discrete recovery head given a continuous code')
        if code.shape[0] != theta.logits.shape[0]:
            raise ContractError('code_log_likelihood(): %d categories against %d logits'
                                % (code.shape[0], theta.logits.shape[0]))
        return ops.slice(ops.log_softmax(theta.logits, axis=0), int(np.argmax(code)))


_likelihood = CodeLikelihood()


def code_log_likelihood(theta, code) -> Tensor:
    """
    log N(code; θ_mean, 1) for a continuous code, log π_θ[true category] for a one-hot code.
    """
    return _likelihood.log_likelihood(theta, code)
