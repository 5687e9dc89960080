import logging
from dataclasses import dataclass

import numpy as np
from methoddispatch import SingleDispatch, singledispatch
from scipy import special

from volta.tensor import Tensor, no_grad
from volta.types.defaults import Defaults
from volta.types.latent import LatentSample
from volta.util.exceptions import ContractError, DimensionError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Greedy:
    pass


@dataclass(frozen=True)
class Sample:
    temperature: float = 1.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise ContractError('Sample: temperature must be positive, got %r' % (self.temperature,))


class TokenPicker(SingleDispatch):

    @singledispatch
    def pick(self, strategy, logits, rng):
        raise ContractError('generate(): unknown decoding strategy %s' % type(strategy).__name__)

    @pick.register(Greedy)
    def pick_greedy(self, strategy, logits, rng):
        return int(np.argmax(logits))

    @pick.register(Sample)
    def pick_sample(self, strategy, logits, rng):
        if rng is None:
            raise ContractError('generate(): sampling needs a random stream')
        probs = special.softmax(np.asarray(logits) / strategy.temperature)
        return int(rng.choice(len(probs), p=probs))


_picker = TokenPicker()


def generate(model, context, latent, max_len=Defaults.max_generation_length, strategy=Greedy(), rng=None):
    """
    Autoregressive decoding from the start token until EOS or `max_len` tokens.

    Returns the body without the EOS token. Decoding also stops when the prefix would no
    longer fit `max_seq`. No computation record is built.
    """
    if max_len < 1:
        raise ContractError('generate(): max_len must be at least 1, got %r' % (max_len,))
    body = []
    capacity = model.prefix_capacity(context)
    with no_grad():
        while len(body) < max_len and len(body) < capacity:
            out = model.decoder_forward(context, body, latent)
            token = _picker.pick(strategy, out.logits.data[-1], rng)
            if token == Defaults.eos_id:
                break
            body.append(token)
    log.debug(f'generate(): {len(body)} tokens for a context of {len(context)}')
    return body


def _interpolate(a, b, alpha):
    if alpha == 0.0:
        return a.copy()
    if alpha == 1.0:
        return b.copy()
    return (1.0 - alpha) * a + alpha * b


def interpolate_latents(z1, z2, alpha):
    """
    (1−α)·z1 + α·z2; categorical rows are mixed on the simplex and renormalized.

    Accepts LatentSamples or plain Gaussian latent vectors. The endpoints are returned exactly.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ContractError('interpolate_latents(): alpha must be in [0, 1], got %r' % (alpha,))
    if not isinstance(z1, LatentSample):
        a, b = np.asarray(z1, dtype=np.float64), np.asarray(z2, dtype=np.float64)
        if a.shape != b.shape:
            raise DimensionError('interpolate_latents(): shapes %s and %s differ' % (a.shape, b.shape))
        return _interpolate(a, b, alpha)

    if z1.z_g.shape != z2.z_g.shape or z1.z_a.shape != z2.z_a.shape:
        raise DimensionError('interpolate_latents(): latent shapes differ')
    z_g = _interpolate(z1.z_g.data, z2.z_g.data, alpha)
    z_a = _interpolate(z1.z_a.data, z2.z_a.data, alpha)
    if 0.0 < alpha < 1.0 and z_a.size:
        z_a = z_a / z_a.sum(axis=1, keepdims=True)
    return LatentSample(Tensor(z_g), Tensor(z_a), z1.temperature)
