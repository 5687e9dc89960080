import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy import special

from volta.latent import ContinuousTheta, DiscreteTheta, sample_codes, sample_gaussian, sample_gumbel_softmax
from volta.model.layers import LayerNorm, Linear, TransformerBlock, attention, causal_mask
from volta.model.parameters import ParameterStore
from volta.tensor import Tensor, ops
from volta.types.defaults import Defaults
from volta.types.latent import (CategoricalPosterior, GaussianPosterior, LatentCodes, LatentSample, LatentState,
                                PosteriorSet)
from volta.types.modelconfig import ModelConfig, PriorKind
from volta.util.exceptions import DegenerateInputError, DimensionError, LengthError, ModeError
from volta.util.helper import make_rng

log = logging.getLogger(__name__)


class Channel(str, Enum):
    """Generation channel [z_g; c_g] feeds the token decoder, answer channel [z_a; c_a] the span heads"""

    GENERATION = 'generation'
    ANSWER = 'answer'


@dataclass
class DecoderOutput:
    """Row j holds the distribution of target token j+1 given the first j prefix tokens"""

    logits: Tensor
    hidden: Tensor

    @property
    def token_states(self):
        """Hidden states at the prefix tokens themselves (all rows but the start row)"""
        return self.hidden[1:]


@dataclass
class MemoryConnection:
    past: List[Tuple[Tensor, Tensor]]
    offset: Tensor


@dataclass
class SpanPrediction:
    start: int
    end: int
    start_probs: np.ndarray
    end_probs: np.ndarray

    @property
    def valid(self):
        return self.start <= self.end

    def answer(self, context):
        return list(context[self.start - 1:self.end]) if self.valid else []


@dataclass
class RecoveredCodes:
    continuous: Tensor
    discrete: Tensor

    def thetas(self):
        thetas = [ContinuousTheta(self.continuous[i]) for i in range(self.continuous.shape[0])]
        thetas.extend(DiscreteTheta(self.discrete[j]) for j in range(self.discrete.shape[0]))
        return thetas


class _LatentHeads:
    def __init__(self, store, prefix, config):
        d = config.d_model
        self.n_za, self.k = config.n_za, config.k
        self.mu = Linear(store, prefix + '.mu', d, config.n_zg) if config.n_zg else None
        self.log_sigma = Linear(store, prefix + '.log_sigma', d, config.n_zg) if config.n_zg else None
        self.pi = Linear(store, prefix + '.pi', d, config.n_za * config.k) if config.n_za else None

    def __call__(self, pooled):
        if self.mu is not None:
            gaussian = GaussianPosterior(self.mu(pooled), self.log_sigma(pooled))
        else:
            gaussian = GaussianPosterior.standard(0)
        if self.pi is not None:
            categorical = CategoricalPosterior(ops.reshape(self.pi(pooled), (self.n_za, self.k)))
        else:
            categorical = CategoricalPosterior.standard(0, self.k)
        return PosteriorSet(gaussian, categorical)


class VoltaModel:
    """
    Transformer VAE with latent codes.

    In decoder-only mode one stack of blocks serves as both encoder (bidirectional) and
    decoder (causal), and latents enter through the memory/embedding connection. In
    encoder-decoder mode the decoder has its own blocks with cross-attention, and latents enter
    as key/value slots appended to the encoder memory.
    """

    def __init__(self, config: ModelConfig, seed=0):
        config.validate()
        self.config = config
        self.parameters = ParameterStore(make_rng(seed, 0), config.init_std)
        self.__build()
        log.debug(f'VoltaModel(): {config.mode.value} with {self.parameters.count()} parameters')

    def __build(self):
        c, store, d = self.config, self.parameters, self.config.d_model
        self.token_embedding = store.create('embedding.token', (c.vocab_size, d))
        self.position_embedding = store.create('embedding.position', (c.max_seq, d))

        self.encoder_blocks = [TransformerBlock(store, 'encoder.%d' % i, d, c.n_heads) for i in range(c.n_layers)]
        self.encoder_norm = LayerNorm(store, 'encoder.ln_final', d)
        if c.is_decoder_only:
            self.decoder_blocks = self.encoder_blocks
            self.decoder_norm = self.encoder_norm
        else:
            self.decoder_blocks = [TransformerBlock(store, 'decoder.%d' % i, d, c.n_heads, cross=True)
                                   for i in range(c.n_layers)]
            self.decoder_norm = LayerNorm(store, 'decoder.ln_final', d)
        self.lm_head = Linear(store, 'lm_head', d, c.vocab_size)

        self.posterior_heads = _LatentHeads(store, 'latent', c)
        self.prior_heads = _LatentHeads(store, 'prior', c) if c.prior == PriorKind.CONTEXT else None

        self.__memory_embedding, self.__memory_past, self.__latent_kv = {}, {}, {}
        for channel, width in ((Channel.GENERATION, c.n_generation), (Channel.ANSWER, c.n_answer)):
            if width == 0:
                continue
            name = channel.value
            if c.is_decoder_only:
                self.__memory_embedding[channel] = Linear(store, 'memory.%s.embedding' % name, width, d)
                self.__memory_past[channel] = Linear(store, 'memory.%s.past' % name, width, c.n_layers * 2 * d)
            elif c.share_latent_kv:
                shared = (Linear(store, 'latent_kv.%s.key' % name, width, c.n_latent_slots * d),
                          Linear(store, 'latent_kv.%s.value' % name, width, c.n_latent_slots * d))
                self.__latent_kv[channel] = [shared] * c.n_layers
            else:
                self.__latent_kv[channel] = [
                    (Linear(store, 'latent_kv.%s.%d.key' % (name, i), width, c.n_latent_slots * d),
                     Linear(store, 'latent_kv.%s.%d.value' % (name, i), width, c.n_latent_slots * d))
                    for i in range(c.n_layers)]

        self.span_start = Linear(store, 'span.start', d, 1)
        self.span_end = Linear(store, 'span.end', d, 1)
        self.recover_cg = Linear(store, 'recover.cg', d, c.n_cg) if c.n_cg else None
        self.recover_ca = Linear(store, 'recover.ca', d, c.n_ca * c.k) if c.n_ca else None
        self.qami_w = store.create('qami.W', (d, d))

    # sequences

    def _check_length(self, ids, op):
        if len(ids) > self.config.max_seq:
            raise LengthError('%s(): sequence of %d tokens exceeds max_seq %d'
                              % (op, len(ids), self.config.max_seq))

    def _embed(self, ids, offset=None):
        x = ops.add(ops.gather(self.token_embedding, ids), ops.gather(self.position_embedding, range(len(ids))))
        return x if offset is None else ops.add(x, offset)

    def _encode_sequence(self, ids):
        x = self._embed(ids)
        for block in self.encoder_blocks:
            x = block(x)
        return self.encoder_norm(x)

    @staticmethod
    def posterior_input(context, target):
        return [Defaults.bos_id] + list(context) + [Defaults.sep_id] + list(target) + [Defaults.eos_id]

    @staticmethod
    def context_input(context):
        return [Defaults.bos_id] + list(context) + [Defaults.sep_id]

    def prefix_capacity(self, context):
        """Longest prefix decoder_forward accepts for this context"""
        if self.config.is_decoder_only:
            return self.config.max_seq - len(context) - 2
        return self.config.max_seq - 1

    # latent space

    def _sample(self, posterior, rng, temperature):
        if not self.config.variational:
            return LatentSample(posterior.gaussian.mu, ops.softmax(posterior.categorical.logits, axis=1)
                                if posterior.categorical.n_vars else Tensor(np.zeros((0, self.config.k))),
                                temperature)
        z_g = sample_gaussian(posterior.gaussian, rng)
        z_a = sample_gumbel_softmax(posterior.categorical, temperature, rng)
        return LatentSample(z_g, z_a, temperature)

    def _codes(self, rng):
        c = self.config
        return sample_codes(c.n_cg, c.n_ca, c.k, rng, c.code_distribution)

    def encode(self, context, target, rng, codes: Optional[LatentCodes] = None, temperature=None) -> LatentState:
        """
        Posterior over (context, target), a reparametrized sample and the latent codes.

        Noise is drawn from `rng` in a fixed order (Gaussian, Gumbel, codes), so equal seeds give
        equal states.
        """
        ids = self.posterior_input(context, target)
        self._check_length(ids, 'encode')
        temperature = self.config.gumbel_temperature if temperature is None else temperature
        pooled = ops.mean(self._encode_sequence(ids), axis=0)
        posterior = self.posterior_heads(pooled)
        prior = self.prior_for(context)
        sample = self._sample(posterior, rng, temperature)
        if codes is None:
            codes = self._codes(rng)
        return LatentState(posterior, prior, sample, codes)

    def prior_from_context(self, context) -> PosteriorSet:
        if len(context) == 0:
            raise DegenerateInputError('prior_from_context(): empty context')
        if self.prior_heads is None:
            raise ModeError('prior_from_context(): model was built with the standard prior')
        ids = self.context_input(context)
        self._check_length(ids, 'prior_from_context')
        return self.prior_heads(ops.mean(self._encode_sequence(ids), axis=0))

    def prior_for(self, context) -> PosteriorSet:
        c = self.config
        if c.prior == PriorKind.STANDARD:
            return PosteriorSet.standard(c.n_zg, c.n_za, c.k)
        return self.prior_from_context(context)

    def sample_from_prior(self, context, rng, codes: Optional[LatentCodes] = None,
                          temperature=None) -> LatentState:
        """Generation-time latents: a prior draw with hard one-hot categoricals"""
        temperature = self.config.gumbel_temperature if temperature is None else temperature
        prior = self.prior_for(context)
        sample = self._sample(prior, rng, temperature).hardened()
        if codes is None:
            codes = self._codes(rng)
        return LatentState(None, prior, sample, codes)

    def channel_vector(self, latent: LatentState, channel=Channel.GENERATION) -> Optional[Tensor]:
        c = self.config
        if Channel(channel) == Channel.GENERATION:
            parts, expected = [latent.sample.z_g, ops.constant(latent.codes.continuous)], c.n_generation
        else:
            parts = [ops.reshape(latent.sample.z_a, (latent.sample.z_a.size,)),
                     ops.constant(latent.codes.discrete.reshape(-1))]
            expected = c.n_answer
        parts = [p for p in parts if p.size]
        width = sum(p.size for p in parts)
        if width != expected:
            raise DimensionError('channel_vector(): %s channel has width %d, expected %d'
                                 % (Channel(channel).value, width, expected))
        if not parts:
            return None
        return parts[0] if len(parts) == 1 else ops.concat(parts, axis=0)

    def latent_kv(self, vector: Tensor, channel=Channel.GENERATION, layer=0) -> Tuple[Tensor, Tensor]:
        """K_latent = FC_k([z; c]), V_latent = FC_v([z; c]), each reshaped to [n_latent_slots × d_model]"""
        c = self.config
        channel = Channel(channel)
        if channel not in self.__latent_kv:
            raise ModeError('latent_kv(): no latent key/value projection for the %s channel' % channel.value)
        key, value = self.__latent_kv[channel][layer]
        if vector.shape != (key.d_in,):
            raise DimensionError('latent_kv(): expected a vector of %d, got %s' % (key.d_in, vector.shape))
        shape = (c.n_latent_slots, c.d_model)
        return ops.reshape(key(vector), shape), ops.reshape(value(vector), shape)

    def latent_attention(self, queries: Tensor, k_latent: Tensor, v_latent: Tensor) -> Tensor:
        """Attention(Q, K_latent, V_latent) = softmax(Q K_latentᵀ/√d_k)·V_latent per head"""
        return attention(queries, k_latent, v_latent, self.config.n_heads)

    def memory_embedding_connection(self, vector: Tensor, channel=Channel.GENERATION) -> MemoryConnection:
        """
        Embedding offset added to every token embedding and, per decoder layer, one key/value
        slot of width d_model.
        """
        c = self.config
        channel = Channel(channel)
        if not c.is_decoder_only:
            raise ModeError('memory_embedding_connection(): only available in decoder-only mode')
        if channel not in self.__memory_past:
            raise ModeError('memory_embedding_connection(): the %s channel is empty' % channel.value)
        embedding, past = self.__memory_embedding[channel], self.__memory_past[channel]
        if vector.shape != (embedding.d_in,):
            raise DimensionError('memory_embedding_connection(): expected a vector of %d, got %s'
                                 % (embedding.d_in, vector.shape))
        flat, d = past(vector), c.d_model
        slots = []
        for i in range(c.n_layers):
            base = 2 * i * d
            key, value = flat[base:base + d], flat[base + d:base + 2 * d]
            slots.append((ops.reshape(key, (1, d)), ops.reshape(value, (1, d))))
        return MemoryConnection(slots, embedding(vector))

    # decoding

    def decoder_forward(self, context, prefix, latent: Optional[LatentState], channel=Channel.GENERATION):
        """
        Next-token logits for every position of `prefix` plus one; rows are causal in the prefix.
        """
        vector = self.channel_vector(latent, channel) if latent is not None else None
        hidden = self._decode(context, prefix, vector, channel, 'decoder_forward')
        if self.config.is_decoder_only:
            hidden = hidden[len(context) + 1:]
        return DecoderOutput(self.lm_head(hidden), hidden)

    def _decode(self, context, prefix, vector, channel, op):
        c = self.config
        if c.is_decoder_only:
            ids = [Defaults.bos_id] + list(context) + [Defaults.sep_id] + list(prefix)
            self._check_length(ids, op)
            return self._decode_causal(ids, vector, channel)

        ids = [Defaults.bos_id] + list(prefix)
        self._check_length(ids, op)
        memory_ids = self.context_input(context)
        self._check_length(memory_ids, op)
        memory = self._encode_sequence(memory_ids)
        x = self._embed(ids)
        mask = causal_mask(len(ids))
        for i, block in enumerate(self.decoder_blocks):
            kv = self.latent_kv(vector, channel, i) if vector is not None else None
            x = block(x, mask=mask, cross_memory=memory, cross_kv=kv)
        return self.decoder_norm(x)

    def _decode_causal(self, ids, vector, channel):
        c = self.config
        slots, offset = [None] * c.n_layers, None
        if vector is not None:
            connection = self.memory_embedding_connection(vector, channel)
            slots = connection.past
            offset = connection.offset
        x = self._embed(ids, offset)
        mask = causal_mask(len(ids))
        for block, slot in zip(self.decoder_blocks, slots):
            x = block(x, mask=mask, memory_slot=slot)
        return self.decoder_norm(x)

    def answer_states(self, context, latent: Optional[LatentState]) -> Tensor:
        """Answer-channel hidden states h_{a,1:m}, one row per context token"""
        if len(context) == 0:
            raise DegenerateInputError('answer_states(): empty context')
        vector = self.channel_vector(latent, Channel.ANSWER) if latent is not None else None
        if self.config.is_decoder_only:
            ids = [Defaults.bos_id] + list(context)
            self._check_length(ids, 'answer_states')
            return self._decode_causal(ids, vector, Channel.ANSWER)[1:]
        return self._decode(context, context, vector, Channel.ANSWER, 'answer_states')[1:]

    def span_logits(self, hidden_a: Tensor) -> Tuple[Tensor, Tensor]:
        m = hidden_a.shape[0]
        return ops.reshape(self.span_start(hidden_a), (m,)), ops.reshape(self.span_end(hidden_a), (m,))

    def predict_span(self, context, latent: Optional[LatentState], constrained=False) -> SpanPrediction:
        """
        Independent argmax of the start and end distributions, 1-based, ties to the lowest index.

        With `constrained`, the pair maximizing p(s)·p(e) subject to s ≤ e is returned instead.
        """
        start_logits, end_logits = self.span_logits(self.answer_states(context, latent))
        return self.span_from_logits(start_logits.data, end_logits.data, constrained)

    @staticmethod
    def span_from_logits(start_logits, end_logits, constrained=False) -> SpanPrediction:
        start_probs = special.softmax(np.asarray(start_logits, dtype=np.float64))
        end_probs = special.softmax(np.asarray(end_logits, dtype=np.float64))
        if not constrained:
            return SpanPrediction(int(np.argmax(start_probs)) + 1, int(np.argmax(end_probs)) + 1,
                                  start_probs, end_probs)
        joint = np.triu(np.outer(start_probs, end_probs)) - np.tril(np.ones((len(start_probs),) * 2), k=-1)
        s, e = np.unravel_index(int(np.argmax(joint)), joint.shape)
        return SpanPrediction(int(s) + 1, int(e) + 1, start_probs, end_probs)

    # auxiliary heads

    def recover_codes(self, hidden_g: Tensor, hidden_a: Optional[Tensor] = None) -> RecoveredCodes:
        """
        θ for every latent code from mean-pooled decoder states: a mean per continuous code
        (from `hidden_g`) and k logits per discrete code (from `hidden_a` when given).
        """
        c = self.config
        if hidden_g.shape[0] == 0 or (hidden_a is not None and hidden_a.shape[0] == 0):
            raise DegenerateInputError('recover_codes(): no generated-token hidden states')
        pooled_g = ops.mean(hidden_g, axis=0)
        pooled_a = pooled_g if hidden_a is None else ops.mean(hidden_a, axis=0)
        continuous = self.recover_cg(pooled_g) if self.recover_cg is not None else Tensor(np.zeros(0))
        if self.recover_ca is not None:
            discrete = ops.reshape(self.recover_ca(pooled_a), (c.n_ca, c.k))
        else:
            discrete = Tensor(np.zeros((0, c.k)))
        return RecoveredCodes(continuous, discrete)

    def qami_logit(self, hidden_q: Tensor, hidden_a: Tensor) -> Tensor:
        if hidden_q.shape[0] == 0 or hidden_a.shape[0] == 0:
            raise DegenerateInputError('qami_score(): empty question or answer span')
        d = self.config.d_model
        h_q = ops.reshape(ops.mean(hidden_q, axis=0), (1, d))
        h_a = ops.reshape(ops.mean(hidden_a, axis=0), (d, 1))
        return ops.reshape(ops.matmul(ops.matmul(h_q, self.qami_w), h_a), ())

    def qami_score(self, hidden_q: Tensor, hidden_a: Tensor) -> Tensor:
        """g(q, a) = sigmoid(h_qᵀ W h_a) over mean-pooled question and answer states"""
        return ops.sigmoid(self.qami_logit(hidden_q, hidden_a))
