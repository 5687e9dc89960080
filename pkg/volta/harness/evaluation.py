"""
Generation, latent traversal and metric evaluation over a trained model.

Contexts fan out over a thread pool; context i always draws from make_rng(seed, stream, i), so
results do not depend on the number of workers.
"""
import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from volta.harness.trainer import EncodedExample, question_context
from volta.latent import fixed_codes
from volta.metrics import MetricsReport, active_units, bleu_precision_recall, distinct_k, mutual_information
from volta.metrics import perplexity, self_bleu
from volta.metrics.likelihood import posterior_means
from volta.model import Greedy, interpolate_latents
from volta.model.generation import generate
from volta.tensor import no_grad
from volta.types.defaults import Defaults
from volta.types.latent import LatentSample, LatentState
from volta.types.runconfig import QagPipeline
from volta.util.exceptions import ContractError, DegenerateInputError
from volta.util.helper import make_rng

log = logging.getLogger(__name__)

_GENERATE_STREAM = 3
_SWEEP_STREAM = 4
_EVAL_STREAM = 5


@dataclass
class Generation:
    """One decoded output; qag outputs also carry the predicted 1-based answer span"""

    tokens: List[int]
    span: Optional[Tuple[int, int]] = None
    answer: List[int] = field(default_factory=list)
    label: Optional[str] = None

    def as_record(self, tokenizer):
        record = {'text': tokenizer.detokenize(self.tokens)}
        if self.span is not None:
            record['span'] = list(self.span)
            record['answer'] = tokenizer.detokenize(self.answer)
        if self.label is not None:
            record['label'] = self.label
        return record


class Generator:
    """
    Decodes outputs for a context under given latents. For qag the answer span is predicted
    from the answer channel; in the span-first pipeline the question decoder is then conditioned
    on the predicted answer.
    """

    def __init__(self, model, qag=False, pipeline=QagPipeline.SPAN_FIRST, constrained_span=False,
                 max_len=Defaults.max_generation_length, strategy=Greedy(), fixed_codes=False):
        self.model = model
        self.fixed_codes = fixed_codes
        self.qag = qag
        self.pipeline = QagPipeline(pipeline)
        self.constrained_span = constrained_span
        self.max_len = max_len
        self.strategy = strategy

    def decode(self, context, latent, rng=None, label=None) -> Generation:
        with no_grad():
            if not self.qag:
                return Generation(generate(self.model, context, latent, self.max_len, self.strategy, rng),
                                  label=label)
            span = self.model.predict_span(context, latent, self.constrained_span)
            answer = span.answer(context)
            tokens = generate(self.model, question_context(context, answer, self.pipeline), latent, self.max_len,
                              self.strategy, rng)
            return Generation(tokens, (span.start, span.end), answer, label)

    def codes(self):
        """Codes for prior sampling; None draws fresh ones"""
        c = self.model.config
        return fixed_codes(c.n_cg, c.n_ca, c.k) if self.fixed_codes else None

    def prior_mean_latent(self, context) -> LatentState:
        """Deterministic latents: the prior mean, the prior's most likely categories and fixed codes"""
        c = self.model.config
        with no_grad():
            prior = self.model.prior_for(context)
        sample = LatentSample(prior.gaussian.mu.detach(), prior.categorical.logits.data, c.gumbel_temperature)
        return LatentState(None, prior, sample.hardened(), fixed_codes(c.n_cg, c.n_ca, c.k))

    def samples(self, context, n, rng, deterministic=False) -> List[Generation]:
        """`n` outputs re-drawing z and c from the prior each time, or `n` prior-mean outputs"""
        outputs = []
        for _ in range(n):
            if deterministic:
                latent = self.prior_mean_latent(context)
            else:
                with no_grad():
                    latent = self.model.sample_from_prior(context, rng, self.codes())
            outputs.append(self.decode(context, latent, rng))
        return outputs


def fan_out(fn, items, workers=1):
    """[fn(i, item)] in item order, over a thread pool when workers > 1"""
    if workers <= 1 or len(items) <= 1:
        return [fn(i, item) for i, item in enumerate(items)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(len(items)), items))


def distinct_contexts(examples: List[EncodedExample]):
    """One (group, context, references) triple per context group, in first-seen order"""
    grouped = {}
    for example in examples:
        entry = grouped.setdefault(example.group, (example.group, example.context, []))
        entry[2].append(example.target)
    return list(grouped.values())


def generate_samples(generator: Generator, contexts, samples=Defaults.samples_per_context, seed=0, workers=1,
                     deterministic=False):
    """Per context, `samples` generations; context i uses the stream (seed, i)"""
    def run(i, context):
        return generator.samples(context, samples, make_rng(seed, _GENERATE_STREAM, i), deterministic)

    return fan_out(run, list(contexts), workers)


def code_count(config):
    return config.n_cg + config.n_ca


def sweep_code(generator: Generator, context, code_index, grid=None, seed=0, latent=None):
    """
    Outputs with every latent held fixed except one code. Indices 0..n_cg-1 select a continuous
    code, scanned over `grid`; the following n_ca indices select a discrete code, scanned over
    all k categories.
    """
    c = generator.model.config
    if not 0 <= code_index < code_count(c):
        raise ContractError('sweep_code(): code index %d outside the %d codes of this model'
                            % (code_index, code_count(c)))
    rng = make_rng(seed, _SWEEP_STREAM)
    if latent is None:
        with no_grad():
            latent = generator.model.sample_from_prior(context, rng)
    outputs = []
    if code_index < c.n_cg:
        grid = list(grid) if grid is not None else list(np.linspace(-1.0, 1.0, 5))
        if not grid:
            raise ContractError('sweep_code(): empty grid')
        for value in grid:
            swept = latent.with_codes(latent.codes.with_continuous(code_index, value))
            outputs.append(generator.decode(context, swept, label='c_g[%d]=%g' % (code_index, value)))
    else:
        j = code_index - c.n_cg
        for category in range(c.k):
            swept = latent.with_codes(latent.codes.with_discrete(j, category))
            outputs.append(generator.decode(context, swept, label='c_a[%d]=%d' % (j, category)))
    return outputs


def posterior_mean_latent(model, context, target, rng) -> LatentState:
    """Latents of an encoded input: z_g = μ and the most likely category of each z_a"""
    with no_grad():
        state = model.encode(context, target, rng)
    sample = LatentSample(state.posterior.gaussian.mu.detach(), state.posterior.categorical.logits.data,
                          state.sample.temperature)
    c = model.config
    return LatentState(state.posterior, state.prior, sample.hardened(), fixed_codes(c.n_cg, c.n_ca, c.k))


def interpolate(generator: Generator, context, first, second, grid=(0.0, 0.5, 1.0), seed=0):
    """Outputs along (1−α)·z1 + α·z2 between the latents of two encoded targets"""
    rng = make_rng(seed, _SWEEP_STREAM)
    model = generator.model
    start = posterior_mean_latent(model, context, first, rng)
    end = posterior_mean_latent(model, context, second, rng)
    outputs = []
    for alpha in grid:
        sample = interpolate_latents(start.sample, end.sample, float(alpha))
        outputs.append(generator.decode(context, start.with_sample(sample), label='alpha=%g' % alpha))
    return outputs


def _safe(metric, *args):
    try:
        return metric(*args)
    except DegenerateInputError as e:
        log.warning(f'evaluate(): {e.message}')
        return 0.0


def evaluate(generator: Generator, examples: List[EncodedExample], decoder_contexts,
             samples=Defaults.samples_per_context, seed=0, workers=1):
    """
    Held-out metrics: prior-sampled perplexity, generation diversity (Distinct-1/2, Self-BLEU),
    BLEU precision/recall against the references of each context, and the active units and
    mutual information of the Gaussian posterior.
    """
    model = generator.model
    report = MetricsReport()
    rng = make_rng(seed, _EVAL_STREAM)
    report['ppl'] = perplexity(model, [(ctx, e.target) for ctx, e in zip(decoder_contexts, examples)], rng)

    groups = distinct_contexts(examples)
    generations = generate_samples(generator, [context for _, context, _ in groups], samples, seed, workers)
    hypotheses = [[g.tokens for g in outputs] for outputs in generations]
    everything = [h for hyps in hypotheses for h in hyps]
    report['distinct_1'] = _safe(distinct_k, everything, 1)
    report['distinct_2'] = _safe(distinct_k, everything, 2)
    if samples > 1:
        report['self_bleu'] = float(np.mean([_safe(self_bleu, hyps) for hyps in hypotheses]))
    precision, recall, f1 = bleu_precision_recall(hypotheses, [refs for _, _, refs in groups])
    report['bleu_precision'], report['bleu_recall'], report['bleu_f1'] = precision, recall, f1

    if len(examples) >= 2 and model.config.n_zg:
        pairs = [(e.context, e.target) for e in examples]
        report['au'] = active_units(posterior_means(model, pairs, rng))
        mus, log_sigmas, logits = [], [], []
        with no_grad():
            for context, target in pairs:
                posterior = model.encode(context, target, rng).posterior
                mus.append(posterior.gaussian.mu.data.copy())
                log_sigmas.append(posterior.gaussian.log_sigma.data.copy())
                logits.append(posterior.categorical.logits.data.copy())
        report['mi'] = mutual_information(np.array(mus), np.array(log_sigmas), rng,
                                          logits=np.array(logits) if model.config.n_za else None)
    log.info(f'evaluate(): {len(examples)} examples, {len(groups)} contexts, ppl={report["ppl"]:.3f}')
    return report


def export_latents(model, examples: List[EncodedExample], path, seed=0):
    """CSV of posterior means: a header row, then index, group, mu_0..mu_{n_zg-1} per example"""
    rng = make_rng(seed, _EVAL_STREAM)
    means = posterior_means(model, [(e.context, e.target) for e in examples], rng)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['index', 'group'] + ['mu_%d' % i for i in range(model.config.n_zg)])
        for i, (example, row) in enumerate(zip(examples, means)):
            writer.writerow([i, example.group] + [repr(float(v)) for v in row])
    log.info(f'export_latents(): {len(examples)} rows written to {path}')
    return means
