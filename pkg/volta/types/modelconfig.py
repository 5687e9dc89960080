from dataclasses import dataclass
from enum import Enum

from volta.types.defaults import Defaults
from volta.types.mixins import DictMixin
from volta.util.exceptions import ConfigError


class ModelMode(str, Enum):
    DECODER_ONLY = 'decoder-only'
    ENCODER_DECODER = 'encoder-decoder'


class PriorKind(str, Enum):
    CONTEXT = 'context'
    STANDARD = 'standard'


class CodeDistribution(str, Enum):
    UNIFORM = 'uniform'
    GAUSSIAN = 'gaussian'


@dataclass
class ModelConfig(DictMixin):
    mode: ModelMode = ModelMode.DECODER_ONLY
    vocab_size: int = 64
    d_model: int = Defaults.d_model
    n_heads: int = Defaults.n_heads
    n_layers: int = Defaults.n_layers
    max_seq: int = Defaults.max_seq
    n_zg: int = Defaults.n_zg
    n_cg: int = Defaults.n_cg
    n_za: int = Defaults.n_za
    n_ca: int = Defaults.n_ca
    k: int = Defaults.categories
    n_latent_slots: int = Defaults.n_latent_slots
    share_latent_kv: bool = False
    variational: bool = True
    prior: PriorKind = PriorKind.CONTEXT
    code_distribution: CodeDistribution = CodeDistribution.UNIFORM
    gumbel_temperature: float = Defaults.gumbel_temperature
    init_std: float = Defaults.init_std

    def __post_init__(self):
        try:
            self.mode = ModelMode(self.mode)
            self.prior = PriorKind(self.prior)
            self.code_distribution = CodeDistribution(self.code_distribution)
        except ValueError as e:
            raise ConfigError('ModelConfig: %s' % e, cause=e)
        self.validate()

    @property
    def d_k(self):
        return self.d_model // self.n_heads

    @property
    def n_generation(self):
        """Width of the generation channel [z_g; c_g]"""
        return self.n_zg + self.n_cg

    @property
    def n_answer(self):
        """Width of the flattened answer channel [z_a; c_a]"""
        return (self.n_za + self.n_ca) * self.k

    @property
    def is_decoder_only(self):
        return self.mode == ModelMode.DECODER_ONLY

    def validate(self):
        for name in ('vocab_size', 'd_model', 'n_heads', 'n_layers', 'max_seq', 'k', 'n_latent_slots'):
            if not isinstance(getattr(self, name), int) or getattr(self, name) <= 0:
                raise ConfigError('ModelConfig: %s must be a positive integer, got %r'
                                  % (name, getattr(self, name)))
        for name in ('n_zg', 'n_cg', 'n_za', 'n_ca'):
            if not isinstance(getattr(self, name), int) or getattr(self, name) < 0:
                raise ConfigError('ModelConfig: %s must be a non-negative integer, got %r'
                                  % (name, getattr(self, name)))
        if self.d_model % self.n_heads:
            raise ConfigError('ModelConfig: d_model %d is not divisible by n_heads %d'
                              % (self.d_model, self.n_heads))
        if self.vocab_size <= Defaults.unk_id:
            raise ConfigError('ModelConfig: vocab_size must exceed the %d reserved ids'
                              % len(Defaults.special_tokens))
        if self.gumbel_temperature <= 0:
            raise ConfigError('ModelConfig: gumbel_temperature must be positive')
        if self.init_std < 0:
            raise ConfigError('ModelConfig: init_std must be non-negative')
