from volta.tensor import Tensor, backward, grad_check, no_grad
from volta.model import VoltaModel, generate, interpolate_latents
from volta.objectives import total_loss
from volta.metrics import MetricsReport
from volta.harness import (Checkpoint, Tokenizer, Trainer, load_checkpoint, make_synthetic_corpus, save_checkpoint,
                           train)
from volta.types.corpus import SyntheticSpec, Task
from volta.types.lossreport import LossReport, LossWeights
from volta.types.modelconfig import ModelConfig, ModelMode
from volta.types.runconfig import RunConfig
from volta.util.exceptions import VoltaException

import logging

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

lib_version = '0.1.0'
