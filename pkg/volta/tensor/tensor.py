import contextlib
import logging
import threading
from typing import Optional

import numpy as np

from volta.util.exceptions import ContractError

log = logging.getLogger(__name__)

_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, 'enabled', True)


@contextlib.contextmanager
def no_grad():
    """Evaluate without recording operations; confined to the calling thread"""
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


class Function:
    """
    Base class for differentiable operations.

    Subclasses implement `forward` over numpy arrays and `backward`, which maps the gradient of
    the output to one gradient per input (None where an input receives no gradient). Saved
    activations live on the instance, so a Function belongs to exactly one output.
    """

    tag = 'function'

    def __init__(self, *inputs):
        self.inputs = inputs

    def forward(self, *arrays, **kwargs):
        raise NotImplementedError("Forward pass not implemented for %s" % type(self).__name__)

    def backward(self, grad):
        raise NotImplementedError("Backward pass not implemented for %s" % type(self).__name__)

    @classmethod
    def apply(cls, *inputs, **kwargs):
        func = cls(*inputs)
        out = func.forward(*(t.data for t in inputs), **kwargs)
        requires_grad = is_grad_enabled() and any(t.requires_grad for t in inputs)
        return Tensor(out, requires_grad=requires_grad, creator=func if requires_grad else None)


class Tensor:
    """
    Dense float64 tensor, row-major, with an optional gradient of the same shape.

    A tensor produced by a recorded operation keeps a reference to the Function that created
    it; leaves (parameters, inputs) have no creator.
    """

    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, creator: Optional[Function] = None,
                 name: Optional[str] = None):
        self.data = np.asarray(data, dtype=np.float64, order='C')
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.creator = creator
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def is_leaf(self):
        return self.creator is None

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError('item() needs a single-element tensor, got shape %s' % (self.shape,))
        return float(self.data.reshape(-1)[0])

    def numpy(self):
        return self.data

    def detach(self):
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    def backward(self):
        from volta.tensor.record import backward
        return backward(self)

    def __repr__(self):
        label = ' name=%s' % self.name if self.name else ''
        return 'Tensor(shape=%s, requires_grad=%s%s)' % (self.shape, self.requires_grad, label)

    def __len__(self):
        return self.shape[0]

    # Operators delegate to volta.tensor.ops, which imports this module.

    def __add__(self, other):
        from volta.tensor import ops
        if isinstance(other, (int, float)):
            return ops.shift(self, other)
        return ops.add(self, other)

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        from volta.tensor import ops
        if isinstance(other, (int, float)):
            return ops.shift(self, -other)
        return ops.subtract(self, other)

    def __rsub__(self, other):
        from volta.tensor import ops
        return ops.shift(ops.scale(self, -1.0), other)

    def __mul__(self, other):
        from volta.tensor import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, other)
        return ops.multiply(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        from volta.tensor import ops
        if not isinstance(other, (int, float)):
            raise ContractError('division is only defined by a scalar')
        return ops.scale(self, 1.0 / other)

    def __neg__(self):
        from volta.tensor import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from volta.tensor import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from volta.tensor import ops
        return ops.slice(self, index)

    @property
    def T(self):
        from volta.tensor import ops
        return ops.transpose(self)

    def sum(self, axis=None):
        from volta.tensor import ops
        return ops.sum(self, axis)

    def mean(self, axis=None):
        from volta.tensor import ops
        return ops.mean(self, axis)

    def reshape(self, *shape):
        from volta.tensor import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def exp(self):
        from volta.tensor import ops
        return ops.exp(self)

    def log(self):
        from volta.tensor import ops
        return ops.log(self)


def as_tensor(value, requires_grad=False, name=None):
    if isinstance(value, Tensor):
        return value
    return Tensor(value, requires_grad=requires_grad, name=name)


def parameter(data, name=None):
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)
