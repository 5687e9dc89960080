import math
from dataclasses import dataclass, field
from typing import List

from volta.types.defaults import Defaults
from volta.types.mixins import DictMixin
from volta.util.exceptions import ConfigError


@dataclass
class LossWeights(DictMixin):
    beta_max: float = Defaults.beta_max
    warmup_fraction: float = Defaults.warmup_fraction
    gamma: float = Defaults.gamma
    lambda_fb: float = Defaults.lambda_fb
    qami_weight: float = 0.0
    anneal: bool = True
    separate_reg_mean: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ('beta_max', 'gamma', 'lambda_fb', 'qami_weight'):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
                raise ConfigError('LossWeights: %s must be a finite non-negative number, got %r' % (name, value))
        if not 0 < self.warmup_fraction <= 1:
            raise ConfigError('LossWeights: warmup_fraction must be in (0, 1], got %r' % self.warmup_fraction)


@dataclass
class LossReport(DictMixin):
    """
    Per-term values of one step's loss.

    `total` satisfies total = ae + beta_used·reg + gamma·vmim + qami_weight·qami.
    """

    ae: float = 0.0
    reg: float = 0.0
    vmim: float = 0.0
    qami: float = 0.0
    total: float = 0.0
    beta_used: float = 0.0
    gamma: float = 0.0
    qami_weight: float = 0.0
    kl_per_dim: List[float] = field(default_factory=list)
    step: int = 0

    def recomputed_total(self):
        return self.ae + self.beta_used * self.reg + self.gamma * self.vmim + self.qami_weight * self.qami

    def summary(self):
        return 'total=%.4f ae=%.4f reg=%.4f vmim=%.4f qami=%.4f beta=%.4f' % (
            self.total, self.ae, self.reg, self.vmim, self.qami, self.beta_used)
