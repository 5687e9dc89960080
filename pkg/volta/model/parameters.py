import logging
from collections import OrderedDict

import numpy as np

from volta.tensor import Tensor
from volta.util.exceptions import CheckpointError, ConfigError

log = logging.getLogger(__name__)


class ParameterStore:
    """
    Ordered name → Tensor registry.

    Creation order fixes both the initialization stream and the checkpoint layout, so the set
    of names and shapes is a pure function of the model configuration.
    """

    def __init__(self, rng, init_std):
        self.__rng = rng
        self.__init_std = init_std
        self.__tensors = OrderedDict()

    def __contains__(self, name):
        return name in self.__tensors

    def __getitem__(self, name):
        return self.__tensors[name]

    def __iter__(self):
        return iter(self.__tensors.values())

    def __len__(self):
        return len(self.__tensors)

    def names(self):
        return list(self.__tensors)

    def items(self):
        return list(self.__tensors.items())

    def create(self, name, shape, init='normal'):
        if name in self.__tensors:
            raise ConfigError('ParameterStore.create(): duplicate parameter %s' % name)
        shape = tuple(int(s) for s in shape)
        if init == 'normal':
            data = self.__rng.normal(0.0, self.__init_std, shape) if self.__init_std else np.zeros(shape)
        elif init == 'zeros':
            data = np.zeros(shape)
        elif init == 'ones':
            data = np.ones(shape)
        else:
            raise ConfigError('ParameterStore.create(): unknown initializer %s' % init)
        tensor = Tensor(data, requires_grad=True, name=name)
        self.__tensors[name] = tensor
        return tensor

    def count(self):
        return int(sum(t.size for t in self.__tensors.values()))

    def zero_grad(self):
        for tensor in self.__tensors.values():
            tensor.grad = None

    def state(self):
        return OrderedDict((name, t.data.copy()) for name, t in self.__tensors.items())

    def load_state(self, state):
        """Copy arrays in place; names and shapes must match exactly"""
        missing = [name for name in self.__tensors if name not in state]
        if missing:
            raise CheckpointError('missing parameter %s' % missing[0], field=missing[0])
        extra = [name for name in state if name not in self.__tensors]
        if extra:
            raise CheckpointError('unexpected parameter %s' % extra[0], field=extra[0])
        for name, tensor in self.__tensors.items():
            data = np.asarray(state[name], dtype=np.float64)
            if data.shape != tensor.shape:
                raise CheckpointError('parameter %s has shape %s, expected %s' % (name, data.shape, tensor.shape),
                                      field=name)
            tensor.data[...] = data
