import logging
import math

import numpy as np

from volta.tensor import Tensor, ops
from volta.types.defaults import Defaults
from volta.util.exceptions import DimensionError

log = logging.getLogger(__name__)


def causal_mask(length):
    """Additive mask: 0 on and below the diagonal, −inf above"""
    mask = np.zeros((length, length))
    mask[np.triu_indices(length, k=1)] = -np.inf
    return Tensor(mask)


def attention(q, k, v, n_heads, mask=None, memory_slot=None):
    """
    Multi-head scaled dot-product attention over already projected q [t×d], k [s×d], v [s×d]:
    softmax(q_h k_hᵀ/√d_k)·v_h per head, heads concatenated.

    `memory_slot` is one projected (key, value) pair of shape [1×d] attended in its own
    partition: each query adds σ(q_h k_mᵀ/√d_k)·v_m to its head output, so a zero value is a no-op.
    """
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2 or q.shape[1] != k.shape[1] or k.shape != v.shape:
        raise DimensionError('attention(): incompatible shapes q %s, k %s, v %s' % (q.shape, k.shape, v.shape))
    d_model = q.shape[1]
    if d_model % n_heads:
        raise DimensionError('attention(): width %d is not divisible by %d heads' % (d_model, n_heads))
    d_k = d_model // n_heads
    heads = []
    for h in range(n_heads):
        cols = slice(h * d_k, (h + 1) * d_k)
        q_h, k_h, v_h = q[:, cols], k[:, cols], v[:, cols]
        scores = ops.scale(ops.matmul(q_h, ops.transpose(k_h)), 1.0 / math.sqrt(d_k))
        if mask is not None:
            scores = ops.add(scores, mask)
        head = ops.matmul(ops.softmax(scores, axis=1), v_h)
        if memory_slot is not None:
            k_m, v_m = memory_slot[0][:, cols], memory_slot[1][:, cols]
            gate = ops.sigmoid(ops.scale(ops.matmul(q_h, ops.transpose(k_m)), 1.0 / math.sqrt(d_k)))
            head = ops.add(head, ops.matmul(gate, v_m))
        heads.append(head)
    return heads[0] if n_heads == 1 else ops.concat(heads, axis=1)


class Linear:
    def __init__(self, store, name, d_in, d_out, bias=True):
        self.d_in, self.d_out = d_in, d_out
        self.weight = store.create(name + '.weight', (d_in, d_out))
        self.bias = store.create(name + '.bias', (d_out,), init='zeros') if bias else None

    def __call__(self, x):
        vector = x.ndim == 1
        if vector:
            x = ops.reshape(x, (1, x.shape[0]))
        if x.shape[1] != self.d_in:
            raise DimensionError('Linear: expected width %d, got %s' % (self.d_in, x.shape))
        out = ops.matmul(x, self.weight)
        if self.bias is not None:
            out = ops.add(out, self.bias)
        return ops.reshape(out, (self.d_out,)) if vector else out


class LayerNorm:
    def __init__(self, store, name, width):
        self.gain = store.create(name + '.gain', (width,), init='ones')
        self.bias = store.create(name + '.bias', (width,), init='zeros')

    def __call__(self, x):
        return ops.layer_norm(x, self.gain, self.bias, Defaults.layer_norm_eps)


class Attention:
    """
    Projected multi-head attention.

    Self-attention when `memory` is None. `extra_kv` appends already projected key/value rows
    after the projected memory; `memory_slot` is a single (key, value) pair attended in its own
    partition of every head.
    """

    def __init__(self, store, name, d_model, n_heads):
        self.n_heads = n_heads
        self.query = Linear(store, name + '.query', d_model, d_model)
        self.key = Linear(store, name + '.key', d_model, d_model)
        self.value = Linear(store, name + '.value', d_model, d_model)
        self.output = Linear(store, name + '.output', d_model, d_model)

    def __call__(self, x, memory=None, mask=None, extra_kv=None, memory_slot=None):
        source = x if memory is None else memory
        q = self.query(x)
        k, v = self.key(source), self.value(source)
        if extra_kv is not None:
            k = ops.concat([k, extra_kv[0]], axis=0)
            v = ops.concat([v, extra_kv[1]], axis=0)
        return self.output(attention(q, k, v, self.n_heads, mask, memory_slot))


class TransformerBlock:
    """Pre-LN block: self-attention, optional cross-attention, GELU MLP, each residual"""

    def __init__(self, store, name, d_model, n_heads, cross=False):
        self.norm_attention = LayerNorm(store, name + '.ln_attention', d_model)
        self.self_attention = Attention(store, name + '.attention', d_model, n_heads)
        self.norm_cross = LayerNorm(store, name + '.ln_cross', d_model) if cross else None
        self.cross_attention = Attention(store, name + '.cross', d_model, n_heads) if cross else None
        self.norm_mlp = LayerNorm(store, name + '.ln_mlp', d_model)
        self.mlp_in = Linear(store, name + '.mlp.in', d_model, 4 * d_model)
        self.mlp_out = Linear(store, name + '.mlp.out', 4 * d_model, d_model)

    def __call__(self, x, mask=None, memory_slot=None, cross_memory=None, cross_kv=None):
        x = ops.add(x, self.self_attention(self.norm_attention(x), mask=mask, memory_slot=memory_slot))
        if self.cross_attention is not None and cross_memory is not None:
            x = ops.add(x, self.cross_attention(self.norm_cross(x), memory=cross_memory, extra_kv=cross_kv))
        return ops.add(x, self.mlp_out(ops.gelu(self.mlp_in(self.norm_mlp(x)))))
