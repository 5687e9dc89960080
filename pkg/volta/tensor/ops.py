"""
Differentiable operations over `Tensor`.

Shapes are checked eagerly: apart from bias-add (a row vector added to every row of a matrix)
and scalar scale/shift there is no broadcasting, so a mismatch raises DimensionError naming
both shapes.
"""
import logging

import numpy as np
from scipy import special

from volta.tensor.tensor import Function, Tensor, as_tensor
from volta.types.defaults import Defaults
from volta.util.exceptions import DegenerateInputError, DimensionError, TokenIndexError

log = logging.getLogger(__name__)

_SQRT_2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _normalize_axis(axis, ndim, op):
    if axis is None:
        return None
    if not -ndim <= axis < ndim:
        raise DimensionError('%s(): axis %d is invalid for a %d-dimensional tensor' % (op, axis, ndim))
    return axis % ndim


def _is_bias(a_shape, b_shape):
    return len(b_shape) == 1 and len(a_shape) >= 1 and a_shape[-1] == b_shape[0] and a_shape != b_shape


def _reduce_bias(grad, width):
    return grad.reshape(-1, width).sum(axis=0)


class Add(Function):
    tag = 'add'

    def forward(self, a, b):
        self.bias = _is_bias(a.shape, b.shape)
        return a + b

    def backward(self, grad):
        b_grad = _reduce_bias(grad, grad.shape[-1]) if self.bias else grad
        return grad, b_grad


class Subtract(Function):
    tag = 'subtract'

    def forward(self, a, b):
        self.bias = _is_bias(a.shape, b.shape)
        return a - b

    def backward(self, grad):
        b_grad = _reduce_bias(grad, grad.shape[-1]) if self.bias else grad
        return grad, -b_grad


class Multiply(Function):
    tag = 'multiply'

    def forward(self, a, b):
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class Scale(Function):
    tag = 'scale'

    def forward(self, x, factor):
        self.factor = factor
        return x * factor

    def backward(self, grad):
        return (grad * self.factor,)


class Shift(Function):
    tag = 'shift'

    def forward(self, x, offset):
        return x + offset

    def backward(self, grad):
        return (grad,)


class MatMul(Function):
    tag = 'matmul'

    def forward(self, a, b):
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ self.b.T, self.a.T @ grad


class Transpose(Function):
    tag = 'transpose'

    def forward(self, x, axes):
        self.axes = axes
        return np.transpose(x, axes)

    def backward(self, grad):
        return (np.transpose(grad, np.argsort(self.axes)),)


class Reshape(Function):
    tag = 'reshape'

    def forward(self, x, shape):
        self.input_shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.input_shape),)


class Concat(Function):
    tag = 'concat'

    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.sections = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        return np.concatenate(arrays, axis=axis)

    def backward(self, grad):
        return tuple(np.split(grad, self.sections, axis=self.axis))


class Slice(Function):
    tag = 'slice'

    def forward(self, x, index):
        self.index = index
        self.input_shape = x.shape
        return x[index]

    def backward(self, grad):
        x_grad = np.zeros(self.input_shape)
        np.add.at(x_grad, self.index, grad)
        return (x_grad,)


class Gather(Function):
    tag = 'gather'

    def forward(self, table, ids):
        self.ids = ids
        self.table_shape = table.shape
        return table[ids]

    def backward(self, grad):
        table_grad = np.zeros(self.table_shape)
        np.add.at(table_grad, self.ids, grad)
        return (table_grad,)


class Sum(Function):
    tag = 'sum'

    def forward(self, x, axis):
        self.axis = axis
        self.input_shape = x.shape
        return np.sum(x, axis=axis)

    def backward(self, grad):
        if self.axis is not None:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.input_shape).copy(),)


class Mean(Function):
    tag = 'mean'

    def forward(self, x, axis):
        self.axis = axis
        self.input_shape = x.shape
        self.count = x.size if axis is None else x.shape[axis]
        return np.mean(x, axis=axis)

    def backward(self, grad):
        if self.axis is not None:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad / self.count, self.input_shape).copy(),)


class Exp(Function):
    tag = 'exp'

    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Log(Function):
    tag = 'log'

    def forward(self, x):
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class Sigmoid(Function):
    tag = 'sigmoid'

    def forward(self, x):
        self.out = special.expit(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class LogSigmoid(Function):
    tag = 'log_sigmoid'

    def forward(self, x):
        self.x = x
        return special.log_expit(x)

    def backward(self, grad):
        return (grad * special.expit(-self.x),)


class Gelu(Function):
    """Exact GELU, x·Φ(x)"""

    tag = 'gelu'

    def forward(self, x):
        self.x = x
        self.cdf = 0.5 * (1.0 + special.erf(x / _SQRT_2))
        return x * self.cdf

    def backward(self, grad):
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * self.x * self.x)
        return (grad * (self.cdf + self.x * pdf),)


class ClampMin(Function):
    tag = 'clamp_min'

    def forward(self, x, floor):
        self.mask = x > floor
        return np.maximum(x, floor)

    def backward(self, grad):
        return (grad * self.mask,)


class Softmax(Function):
    tag = 'softmax'

    def forward(self, x, axis):
        self.axis = axis
        shifted = x - np.max(x, axis=axis, keepdims=True)
        e = np.exp(shifted)
        self.out = e / np.sum(e, axis=axis, keepdims=True)
        return self.out

    def backward(self, grad):
        y = self.out
        return (y * (grad - np.sum(grad * y, axis=self.axis, keepdims=True)),)


class LogSoftmax(Function):
    tag = 'log_softmax'

    def forward(self, x, axis):
        self.axis = axis
        shifted = x - np.max(x, axis=axis, keepdims=True)
        out = shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))
        self.probs = np.exp(out)
        return out

    def backward(self, grad):
        return (grad - self.probs * np.sum(grad, axis=self.axis, keepdims=True),)


class CrossEntropy(Function):
    tag = 'cross_entropy'

    def forward(self, logits, targets, keep):
        shifted = logits - np.max(logits, axis=1, keepdims=True)
        log_probs = shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
        rows = np.flatnonzero(keep)
        self.rows, self.cols = rows, targets[rows]
        self.probs = np.exp(log_probs)
        self.count = len(rows)
        return -np.sum(log_probs[self.rows, self.cols]) / self.count

    def backward(self, grad):
        logits_grad = np.zeros_like(self.probs)
        logits_grad[self.rows] = self.probs[self.rows]
        logits_grad[self.rows, self.cols] -= 1.0
        return (logits_grad * (grad / self.count),)


class LayerNorm(Function):
    tag = 'layer_norm'

    def forward(self, x, gamma, beta, eps):
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + eps)
        self.x_hat = (x - mu) * self.inv_std
        self.gamma = gamma
        return self.x_hat * gamma + beta

    def backward(self, grad):
        width = self.x_hat.shape[-1]
        d_hat = grad * self.gamma
        x_grad = (self.inv_std / width) * (
            width * d_hat
            - d_hat.sum(axis=-1, keepdims=True)
            - self.x_hat * (d_hat * self.x_hat).sum(axis=-1, keepdims=True))
        gamma_grad = (grad * self.x_hat).reshape(-1, width).sum(axis=0)
        beta_grad = grad.reshape(-1, width).sum(axis=0)
        return x_grad, gamma_grad, beta_grad


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and not _is_bias(a.shape, b.shape):
        raise DimensionError('add(): shapes %s and %s do not match' % (a.shape, b.shape))
    return Add.apply(a, b)


def subtract(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and not _is_bias(a.shape, b.shape):
        raise DimensionError('subtract(): shapes %s and %s do not match' % (a.shape, b.shape))
    return Subtract.apply(a, b)


def multiply(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise DimensionError('multiply(): shapes %s and %s do not match' % (a.shape, b.shape))
    return Multiply.apply(a, b)


def scale(x, factor):
    return Scale.apply(as_tensor(x), factor=float(factor))


def shift(x, offset):
    return Shift.apply(as_tensor(x), offset=float(offset))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError('matmul(): cannot multiply %s by %s' % (a.shape, b.shape))
    return MatMul.apply(a, b)


def transpose(x, axes=None):
    x = as_tensor(x)
    if axes is None:
        axes = tuple(reversed(range(x.ndim)))
    if sorted(axes) != list(range(x.ndim)):
        raise DimensionError('transpose(): axes %s are invalid for shape %s' % (axes, x.shape))
    return Transpose.apply(x, axes=tuple(axes))


def reshape(x, shape):
    x = as_tensor(x)
    shape = tuple(int(s) for s in shape)
    if int(np.prod(shape)) != x.size:
        raise DimensionError('reshape(): cannot reshape %s into %s' % (x.shape, shape))
    return Reshape.apply(x, shape=shape)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise DimensionError('concat(): nothing to concatenate')
    ndim = tensors[0].ndim
    axis = _normalize_axis(axis, ndim, 'concat')
    for t in tensors[1:]:
        if t.ndim != ndim or any(s != r for i, (s, r) in enumerate(zip(t.shape, tensors[0].shape)) if i != axis):
            raise DimensionError('concat(): shapes %s and %s do not match off axis %d'
                                 % (tensors[0].shape, t.shape, axis))
    return Concat.apply(*tensors, axis=axis)


def stack(tensors):
    """Stack equally shaped tensors along a new leading axis"""
    tensors = [as_tensor(t) for t in tensors]
    return concat([reshape(t, (1,) + t.shape) for t in tensors], axis=0)


def slice(x, index):
    x = as_tensor(x)
    if not isinstance(index, tuple):
        index = (index,)
    if len(index) > x.ndim:
        raise DimensionError('slice(): too many indices for shape %s' % (x.shape,))
    for i, item in enumerate(index):
        if isinstance(item, (int, np.integer)) and not -x.shape[i] <= item < x.shape[i]:
            raise DimensionError('slice(): index %d out of range for axis %d of shape %s' % (item, i, x.shape))
    return Slice.apply(x, index=index)


def gather(table, ids):
    """Embedding lookup: rows of `table` selected by `ids`"""
    table = as_tensor(table)
    ids = np.asarray(ids, dtype=np.int64)
    if table.ndim != 2:
        raise DimensionError('gather(): table must be 2-dimensional, got %s' % (table.shape,))
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise TokenIndexError('gather(): id out of range for a table of %d rows' % table.shape[0])
    return Gather.apply(table, ids=ids)


def sum(x, axis=None):
    x = as_tensor(x)
    return Sum.apply(x, axis=_normalize_axis(axis, x.ndim, 'sum'))


def mean(x, axis=None):
    x = as_tensor(x)
    axis = _normalize_axis(axis, x.ndim, 'mean')
    if (x.size if axis is None else x.shape[axis]) == 0:
        raise DegenerateInputError('mean(): empty reduction over shape %s' % (x.shape,))
    return Mean.apply(x, axis=axis)


def exp(x):
    return Exp.apply(as_tensor(x))


def log(x):
    return Log.apply(as_tensor(x))


def sigmoid(x):
    return Sigmoid.apply(as_tensor(x))


def log_sigmoid(x):
    return LogSigmoid.apply(as_tensor(x))


def gelu(x):
    return Gelu.apply(as_tensor(x))


def clamp_min(x, floor):
    return ClampMin.apply(as_tensor(x), floor=float(floor))


def softmax(x, axis=-1):
    x = as_tensor(x)
    return Softmax.apply(x, axis=_normalize_axis(axis, x.ndim, 'softmax'))


def log_softmax(x, axis=-1):
    x = as_tensor(x)
    return LogSoftmax.apply(x, axis=_normalize_axis(axis, x.ndim, 'log_softmax'))


def cross_entropy(logits, targets, ignore_id=Defaults.pad_id):
    """
    Mean over non-ignored positions of −log softmax(logits)[target].

    Parameters
    ----------
    logits : Tensor
        Shape [n × V]
    targets : sequence of int
        Length n
    ignore_id : int, optional
        Positions holding this id are excluded from the mean; None keeps every position
    """
    logits = as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64).reshape(-1)
    if logits.ndim != 2 or logits.shape[0] != len(targets):
        raise DimensionError('cross_entropy(): logits %s do not match %d targets' % (logits.shape, len(targets)))
    keep = np.ones(len(targets), dtype=bool) if ignore_id is None else targets != ignore_id
    if not keep.any():
        raise DegenerateInputError('cross_entropy(): every position is ignored')
    bad = [int(t) for t in targets[keep] if not 0 <= t < logits.shape[1]]
    if bad:
        raise TokenIndexError('cross_entropy(): target id %d outside vocabulary of %d' % (bad[0], logits.shape[1]))
    return CrossEntropy.apply(logits, targets=targets, keep=keep)


def layer_norm(x, gamma, beta, eps=Defaults.layer_norm_eps):
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    width = x.shape[-1]
    if gamma.shape != (width,) or beta.shape != (width,):
        raise DimensionError('layer_norm(): gain %s and bias %s do not match width %d'
                             % (gamma.shape, beta.shape, width))
    return LayerNorm.apply(x, gamma, beta, eps=eps)


def square_sum(x):
    x = as_tensor(x)
    return sum(multiply(x, x))


def constant(value):
    return Tensor(np.array(value, dtype=np.float64))


def zeros(*shape):
    return Tensor(np.zeros(shape))


