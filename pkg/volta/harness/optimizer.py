import logging
from collections import OrderedDict

import numpy as np

from volta.types.runconfig import OptimizerKind, OptimizerOptions
from volta.util.exceptions import CheckpointError

log = logging.getLogger(__name__)


class Optimizer:
    """Updates every parameter of a ParameterStore in place from its accumulated `.grad`"""

    slots = ()

    def __init__(self, parameters, options: OptimizerOptions):
        self.parameters = parameters
        self.options = options
        self.iterations = 0
        self._state = {slot: OrderedDict((name, np.zeros(t.shape)) for name, t in parameters.items())
                       for slot in self.slots}

    def step(self):
        self.iterations += 1
        for name, tensor in self.parameters.items():
            if tensor.grad is None:
                continue
            tensor.data -= self._update(name, tensor.grad)

    def non_finite(self):
        """Name of the first parameter or optimizer array holding NaN or ±inf, else None"""
        for name, tensor in self.parameters.items():
            if not np.all(np.isfinite(tensor.data)):
                return name
        for slot in self.slots:
            for name, value in self._state[slot].items():
                if not np.all(np.isfinite(value)):
                    return '%s.%s' % (slot, name)
        return None

    def _update(self, name, grad):
        raise NotImplementedError

    def state(self):
        """Named optimizer arrays as `<slot>.<parameter>` plus the iteration count"""
        arrays = OrderedDict()
        for slot in self.slots:
            for name, value in self._state[slot].items():
                arrays['%s.%s' % (slot, name)] = value.copy()
        return {'kind': self.options.kind.value, 'iterations': self.iterations}, arrays

    def load_state(self, header, arrays):
        if header.get('kind') != self.options.kind.value:
            raise CheckpointError('optimizer kind %r does not match %r'
                                  % (header.get('kind'), self.options.kind.value),
                                  field='optimizer.kind')
        self.iterations = int(header.get('iterations', 0))
        for slot in self.slots:
            for name, value in self._state[slot].items():
                key = '%s.%s' % (slot, name)
                if key not in arrays:
                    raise CheckpointError('missing optimizer state %s' % key, field=key)
                data = np.asarray(arrays[key], dtype=np.float64)
                if data.shape != value.shape:
                    raise CheckpointError('optimizer state %s has shape %s, expected %s'
                                          % (key, data.shape, value.shape),
                                          field=key)
                value[...] = data


class SGD(Optimizer):
    """v ← μ·v + g; θ ← θ − lr·v"""

    slots = ('velocity',)

    def _update(self, name, grad):
        velocity = self._state['velocity'][name]
        velocity *= self.options.momentum
        velocity += grad
        return self.options.learning_rate * velocity


class Adam(Optimizer):
    slots = ('m', 'v')

    def _update(self, name, grad):
        beta1, beta2 = self.options.betas
        m, v = self._state['m'][name], self._state['v'][name]
        m *= beta1
        m += (1 - beta1) * grad
        v *= beta2
        v += (1 - beta2) * grad * grad
        m_hat = m / (1 - beta1 ** self.iterations)
        v_hat = v / (1 - beta2 ** self.iterations)
        return self.options.learning_rate * m_hat / (np.sqrt(v_hat) + self.options.eps)


_OPTIMIZERS = {OptimizerKind.SGD: SGD, OptimizerKind.ADAM: Adam}


def make_optimizer(parameters, options: OptimizerOptions) -> Optimizer:
    return _OPTIMIZERS[options.kind](parameters, options)
