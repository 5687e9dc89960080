import dataclasses
import logging
import os
import shutil
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from volta.harness.checkpoint import Checkpoint, save_checkpoint
from volta.harness.lossstream import LossStreamWriter
from volta.harness.optimizer import make_optimizer
from volta.harness.synthetic import load_corpus, make_synthetic_corpus
from volta.harness.tokenizer import Tokenizer
from volta.latent import fixed_codes, kl_categorical, kl_gaussian
from volta.model import VoltaModel
from volta.objectives import LossParts, qami_loss_from_logits, reconstruction_loss, regularization_loss, total_loss
from volta.objectives import vmim_loss
from volta.tensor import backward, ops
from volta.types.corpus import ExampleSet, Task
from volta.types.defaults import Defaults
from volta.types.lossreport import LossReport
from volta.types.modelconfig import PriorKind
from volta.types.runconfig import QagPipeline, RunConfig
from volta.util.eventemitter import EventEmitter
from volta.util.exceptions import ConfigError, DivergenceError, NumericError
from volta.util.helper import make_rng

log = logging.getLogger(__name__)

# stream keys for make_rng(seed, key, ...)
_SHUFFLE_STREAM = 1
_STEP_STREAM = 2


@dataclass
class EncodedExample:
    """An Example as token ids; start and end stay 1-based word positions"""

    context: List[int]
    target: List[int]
    start: Optional[int] = None
    end: Optional[int] = None
    group: int = 0

    @property
    def answer(self):
        return self.context[self.start - 1:self.end] if self.start is not None else []


def encode_examples(examples: ExampleSet, tokenizer: Tokenizer):
    return [EncodedExample(tokenizer.encode_words(e.context), tokenizer.encode_words(e.target), e.start, e.end,
                           e.group) for e in examples]


def question_context(context, answer, pipeline=QagPipeline.SPAN_FIRST):
    """Context the question decoder sees: the passage, followed by the answer in the span-first pipeline"""
    if QagPipeline(pipeline) == QagPipeline.SPAN_FIRST and answer:
        return list(context) + [Defaults.sep_id] + list(answer)
    return list(context)


def load_examples(config: RunConfig) -> ExampleSet:
    if config.corpus_path is not None:
        return load_corpus(config.corpus_path, config.task)
    return make_synthetic_corpus(config.synthetic)


@dataclass
class TrainingResult:
    checkpoint: Checkpoint
    reports: List[LossReport]
    model: VoltaModel
    tokenizer: Tokenizer
    train_set: ExampleSet
    held_out_set: ExampleSet


class Trainer(EventEmitter):
    """
    Sequential training loop.

    Events: `step` (LossReport), `checkpoint` (path, step), `diverged` (DivergenceError) and
    `finished` (Checkpoint). Batches, latent noise and QAMI negatives come from streams keyed by
    (seed, step), so two trainers built from equal RunConfigs produce identical trajectories.
    """

    def __init__(self, config: RunConfig, out_dir=None, examples: Optional[ExampleSet] = None):
        super().__init__()
        examples = examples if examples is not None else load_examples(config)
        if len(examples) == 0:
            raise ConfigError('Trainer: empty corpus')
        self.tokenizer = Tokenizer.build(examples.words())
        model_config = dataclasses.replace(config.model, vocab_size=len(self.tokenizer))
        self.config = dataclasses.replace(config, model=model_config)
        if config.task == Task.LM and model_config.prior == PriorKind.CONTEXT:
            raise ConfigError('Trainer: lm examples have no context; use the standard prior')

        self.train_set, self.held_out_set = examples.split(config.held_out)
        if len(self.train_set) == 0:
            raise ConfigError('Trainer: held_out leaves no training examples')
        self.encoded = encode_examples(self.train_set, self.tokenizer)
        self.model = VoltaModel(model_config, seed=config.seed)
        self.optimizer = make_optimizer(self.model.parameters, config.optimizer)
        self.total_steps = config.steps_for(len(self.encoded))
        self.out_dir = out_dir
        self.step = 0
        self.__permutations = {}
        self.__warned_qami = False

    def _path(self, name):
        return os.path.join(self.out_dir, name)

    def batch(self, step):
        """Examples of a step: consecutive positions of a per-epoch shuffle"""
        n, size = len(self.encoded), self.config.batch_size
        indices = []
        for position in range(step * size, (step + 1) * size):
            epoch, offset = divmod(position, n)
            if epoch not in self.__permutations:
                self.__permutations[epoch] = make_rng(self.config.seed, _SHUFFLE_STREAM, epoch).permutation(n)
            indices.append(int(self.__permutations[epoch][offset]))
            if len(indices) == n:
                break
        return [self.encoded[i] for i in indices]

    def decoder_context(self, example: EncodedExample):
        if example.start is None:
            return example.context
        return question_context(example.context, example.answer, self.config.qag_pipeline)

    def _example_terms(self, example, rng):
        model, c = self.model, self.model.config
        codes = fixed_codes(c.n_cg, c.n_ca, c.k) if self.config.fixed_codes else None
        latent = model.encode(example.context, example.target, rng, codes)
        out = model.decoder_forward(self.decoder_context(example), example.target, latent)
        ae = reconstruction_loss(out.logits, list(example.target) + [Defaults.eos_id])

        hidden_a = None
        if example.start is not None:
            hidden_a = model.answer_states(example.context, latent)
            start_logits, end_logits = model.span_logits(hidden_a)
            m = len(example.context)
            start_loss = ops.cross_entropy(ops.reshape(start_logits, (1, m)), [example.start - 1], ignore_id=None)
            end_loss = ops.cross_entropy(ops.reshape(end_logits, (1, m)), [example.end - 1], ignore_id=None)
            ae = ops.add(ae, ops.add(start_loss, end_loss))

        kl_g = kl_gaussian(latent.posterior.gaussian, latent.prior.gaussian)
        kl_c = kl_categorical(latent.posterior.categorical, latent.prior.categorical)
        if c.variational:
            weights = self.config.weights
            reg = regularization_loss(kl_g, kl_c, weights.lambda_fb, weights.separate_reg_mean)
        else:
            reg = ops.constant(0.0)
        vmim = vmim_loss(model.recover_codes(out.token_states, hidden_a).thetas(), latent.codes)

        answer_states = hidden_a[example.start - 1:example.end] if hidden_a is not None else None
        kl = np.concatenate([kl_g.data.reshape(-1), kl_c.data.reshape(-1)])
        return ae, reg, vmim, (out.token_states, answer_states), kl

    def _qami(self, pairs, rng):
        if self.config.weights.qami_weight == 0 or any(a is None for _, a in pairs):
            return 0.0
        if len(pairs) < 2:
            if not self.__warned_qami:
                log.warning('Trainer._qami(): batch of one has no negatives; QAMI skipped')
                self.__warned_qami = True
            return 0.0
        offset = 1 + int(rng.integers(len(pairs) - 1))
        n, model = len(pairs), self.model
        positive = [model.qami_logit(q, a) for q, a in pairs]
        negative_q = [model.qami_logit(pairs[(i + offset) % n][0], pairs[i][1]) for i in range(n)]
        negative_a = [model.qami_logit(pairs[i][0], pairs[(i + offset) % n][1]) for i in range(n)]
        return qami_loss_from_logits(positive, negative_q, negative_a)

    def loss(self, step, batch=None):
        """Training loss of one step as (Tensor, LossReport) without updating parameters"""
        rng = make_rng(self.config.seed, _STEP_STREAM, step)
        batch = self.batch(step) if batch is None else batch
        aes, regs, vmims, pairs, kls = [], [], [], [], []
        for example in batch:
            ae, reg, vmim, pair, kl = self._example_terms(example, rng)
            aes.append(ae)
            regs.append(reg)
            vmims.append(vmim)
            pairs.append(pair)
            kls.append(kl)
        parts = LossParts(ae=ops.mean(ops.stack(aes)), reg=ops.mean(ops.stack(regs)),
                          vmim=ops.mean(ops.stack(vmims)), qami=self._qami(pairs, rng),
                          kl_per_dim=np.mean(kls, axis=0))
        return total_loss(parts, self.config.weights, step, max(self.total_steps, step + 1))

    def checkpoint(self):
        return Checkpoint.capture(self.config, self.tokenizer, self.model, self.optimizer, self.step)

    def _save(self, checkpoint):
        path = save_checkpoint(checkpoint, self._path(Defaults.checkpoint_file))
        shutil.copyfile(path, self._path(Defaults.last_good_checkpoint_file))
        log.info(f'Trainer._save(): checkpoint at step {checkpoint.step} written to {path}')
        self._emit('checkpoint', path, checkpoint.step)

    def train(self) -> TrainingResult:
        log.info(f'Trainer.train(): {self.config.task.value} run of {self.total_steps} steps, '
                 f'{self.model.parameters.count()} parameters')
        reports = []
        writer = None
        if self.out_dir is not None:
            os.makedirs(self.out_dir, exist_ok=True)
            writer = LossStreamWriter(self._path(Defaults.loss_stream_file))
            self._save(self.checkpoint())
        interval = self.config.checkpoint_interval
        try:
            while self.step < self.total_steps:
                self.model.parameters.zero_grad()
                try:
                    loss, report = self.loss(self.step)
                except NumericError as e:
                    self._diverge(e)
                backward(loss)
                self.optimizer.step()
                poisoned = self.optimizer.non_finite()
                if poisoned is not None:
                    self._diverge(NumericError('update left %s non-finite' % poisoned, term=poisoned))
                reports.append(report)
                if writer is not None:
                    writer.write(report)
                log.debug(f'Trainer.train(): step {self.step + 1}/{self.total_steps} {report.summary()}')
                self._emit('step', report)
                self.step += 1
                if self.out_dir is not None and interval and self.step % interval == 0:
                    self._save(self.checkpoint())
        finally:
            if writer is not None:
                writer.close()

        checkpoint = self.checkpoint()
        if self.out_dir is not None:
            self._save(checkpoint)
        self._emit('finished', checkpoint)
        return TrainingResult(checkpoint, reports, self.model, self.tokenizer, self.train_set, self.held_out_set)

    def _diverge(self, cause):
        last_good = None
        if self.out_dir is not None:
            last_good = self._path(Defaults.last_good_checkpoint_file)
        error = DivergenceError('training diverged at step %d: %s' % (self.step, cause.message), step=self.step,
                                last_good_checkpoint=last_good, cause=cause)
        log.warning(f'Trainer.train(): {error.message}; last good checkpoint {last_good}')
        self._emit('diverged', error)
        raise error


def train(config: RunConfig, out_dir=None, examples=None) -> TrainingResult:
    return Trainer(config, out_dir, examples).train()
