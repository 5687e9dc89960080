import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from volta.types.corpus import SyntheticSpec, Task
from volta.types.defaults import Defaults
from volta.types.lossreport import LossWeights
from volta.types.mixins import DictMixin
from volta.types.modelconfig import ModelConfig, PriorKind
from volta.util.exceptions import ConfigError

log = logging.getLogger(__name__)


class OptimizerKind(str, Enum):
    SGD = 'sgd'
    ADAM = 'adam'


class QagPipeline(str, Enum):
    SPAN_FIRST = 'span-first'
    INDEPENDENT = 'independent'


@dataclass
class OptimizerOptions(DictMixin):
    kind: OptimizerKind = OptimizerKind.SGD
    learning_rate: float = Defaults.learning_rate
    momentum: float = Defaults.momentum
    betas: tuple = Defaults.adam_betas
    eps: float = Defaults.adam_eps

    def __post_init__(self):
        try:
            self.kind = OptimizerKind(self.kind)
        except ValueError as e:
            raise ConfigError('OptimizerOptions: %s' % e, cause=e)
        self.betas = tuple(float(b) for b in self.betas)
        if self.learning_rate <= 0 or not math.isfinite(self.learning_rate):
            raise ConfigError('OptimizerOptions: learning_rate must be positive, got %r' % self.learning_rate)
        if not 0 <= self.momentum < 1:
            raise ConfigError('OptimizerOptions: momentum must be in [0, 1), got %r' % self.momentum)
        if len(self.betas) != 2 or not all(0 <= b < 1 for b in self.betas):
            raise ConfigError('OptimizerOptions: betas must be two values in [0, 1)')


@dataclass
class RunConfig(DictMixin):
    """
    Everything a run depends on. Two runs from equal RunConfigs are bit-identical.

    The corpus is either generated from `synthetic` or read from `corpus_path` (one sentence per
    line; a JSON list of {context, question, s, e} records for qag). When `epochs` is set it
    overrides `steps` with epochs·ceil(corpus size / batch size).
    """

    task: Task = Task.LM
    model: ModelConfig = field(default_factory=ModelConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    synthetic: Optional[SyntheticSpec] = field(default_factory=SyntheticSpec)
    corpus_path: Optional[str] = None
    steps: int = 100
    epochs: Optional[int] = None
    batch_size: int = Defaults.batch_size
    seed: int = 0
    checkpoint_interval: int = Defaults.checkpoint_interval
    fixed_codes: bool = False
    qag_pipeline: QagPipeline = QagPipeline.SPAN_FIRST
    held_out: int = 0

    def __post_init__(self):
        try:
            self.task = Task(self.task)
            self.qag_pipeline = QagPipeline(self.qag_pipeline)
        except ValueError as e:
            raise ConfigError('RunConfig: %s' % e, cause=e)
        self.validate()

    @classmethod
    def _convert_fields(cls, obj):
        if isinstance(obj.get('model'), dict):
            obj['model'] = ModelConfig.from_dict(obj['model'])
        if isinstance(obj.get('weights'), dict):
            obj['weights'] = LossWeights.from_dict(obj['weights'])
        if isinstance(obj.get('optimizer'), dict):
            obj['optimizer'] = OptimizerOptions.from_dict(obj['optimizer'])
        if isinstance(obj.get('synthetic'), dict):
            obj['synthetic'] = SyntheticSpec.from_dict(obj['synthetic'])
        return obj

    def validate(self):
        if not isinstance(self.steps, int) or self.steps < 0:
            raise ConfigError('RunConfig: steps must be a non-negative integer, got %r' % self.steps)
        if self.epochs is not None and (not isinstance(self.epochs, int) or self.epochs < 0):
            raise ConfigError('RunConfig: epochs must be a non-negative integer, got %r' % self.epochs)
        if not isinstance(self.batch_size, int) or self.batch_size <= 0:
            raise ConfigError('RunConfig: batch_size must be a positive integer, got %r' % self.batch_size)
        if self.checkpoint_interval < 0:
            raise ConfigError('RunConfig: checkpoint_interval must be non-negative')
        if self.held_out < 0:
            raise ConfigError('RunConfig: held_out must be non-negative')
        if self.synthetic is None and self.corpus_path is None:
            raise ConfigError('RunConfig: either synthetic or corpus_path is required')
        if self.synthetic is not None and self.synthetic.task != self.task:
            raise ConfigError('RunConfig: synthetic task %s does not match run task %s'
                              % (self.synthetic.task.value, self.task.value))
        if self.task != Task.QAG and (self.model.n_za or self.model.n_ca):
            log.debug('RunConfig.validate(): categorical latents are unused outside qag')

    def steps_for(self, corpus_size):
        if self.epochs is None:
            return self.steps
        return self.epochs * math.ceil(corpus_size / self.batch_size)

    @staticmethod
    def for_task(task, **overrides):
        """
        Presets per task: lm and dialog use continuous latents only and no QAMI, lm samples from
        the standard prior since it has no context, qag enables every head with qami_weight 1.
        """
        task = Task(task)
        model = dict(overrides.pop('model', {}))
        weights = dict(overrides.pop('weights', {}))
        synthetic = overrides.pop('synthetic', {})
        if task in (Task.LM, Task.DIALOG):
            model.setdefault('n_za', 0)
            model.setdefault('n_ca', 0)
            weights.setdefault('qami_weight', 0.0)
        if task == Task.LM:
            model.setdefault('prior', PriorKind.STANDARD)
        if task == Task.QAG:
            weights.setdefault('qami_weight', 1.0)
        if synthetic is not None:
            synthetic = SyntheticSpec(**{'task': task, **synthetic})
        return RunConfig(task=task, model=ModelConfig(**model), weights=LossWeights(**weights),
                         synthetic=synthetic, **overrides)
