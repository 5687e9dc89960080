"""
Directional reproductions of the latent-machinery ablations at desk scale.

Each experiment trains small models from scratch and returns the measured quantities; the
thresholds they are compared against live with the callers.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from volta.harness.evaluation import Generator, distinct_contexts, posterior_mean_latent, sweep_code
from volta.harness.trainer import encode_examples, question_context, train
from volta.metrics import active_units, distinct_k, self_bleu
from volta.metrics.likelihood import posterior_means
from volta.tensor import no_grad
from volta.types.corpus import Task
from volta.types.defaults import Defaults
from volta.types.runconfig import OptimizerOptions, RunConfig
from volta.util.helper import make_rng

log = logging.getLogger(__name__)

_EXPERIMENT_STREAM = 6

FAST_OPTIMIZER = {'kind': 'adam', 'learning_rate': 1e-3}

# Adam step of the code recovery runs
VMIM_LEARNING_RATE = 3e-3


@dataclass
class ExperimentResult:
    name: str
    values: Dict[str, float] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]


def _config(task, steps, seed, model=None, weights=None, synthetic=None, learning_rate=None, **overrides):
    optimizer = dict(FAST_OPTIMIZER)
    if learning_rate is not None:
        optimizer['learning_rate'] = learning_rate
    return RunConfig.for_task(task, steps=steps, seed=seed, model=model or {}, weights=weights or {},
                              synthetic=synthetic or {}, optimizer=OptimizerOptions(**optimizer), **overrides)


def code_recovery(model, contexts, seed=0, pipeline='span-first'):
    """
    Fraction of discrete codes recovered from the model's own outputs: codes are drawn, a span
    and question are generated under them, and the recovery head reads the codes back.
    """
    c = model.config
    generator = Generator(model, qag=True, pipeline=pipeline)
    hits, total = 0, 0
    for i, context in enumerate(contexts):
        rng = make_rng(seed, _EXPERIMENT_STREAM, i)
        with no_grad():
            latent = model.sample_from_prior(context, rng)
            output = generator.decode(context, latent)
            decoder_context = question_context(context, output.answer, pipeline)
            out = model.decoder_forward(decoder_context, output.tokens, latent)
            recovered = model.recover_codes(out.token_states if output.tokens else out.hidden,
                                            model.answer_states(context, latent))
        predicted = np.argmax(recovered.discrete.data, axis=1)
        hits += int(np.sum(predicted == latent.codes.indices))
        total += c.n_ca
    return hits / total if total else 0.0


def span_variation(model, contexts, seed=0):
    """Fraction of contexts whose predicted span changes while the first discrete code is swept"""
    c = model.config
    generator = Generator(model, qag=True)
    varied = 0
    for i, context in enumerate(contexts):
        outputs = sweep_code(generator, context, c.n_cg, seed=seed + i)
        if len({o.span for o in outputs}) > 1:
            varied += 1
    return varied / len(contexts)


def vmim_effect(gamma=1.0, fixed_codes=False, steps=500, seed=0, n_contexts=200, held_out=20,
                learning_rate=VMIM_LEARNING_RATE):
    """
    Discrete code recovery accuracy and span variation under code sweeps on held-out QAG
    contexts, for a run with VMIM weight `gamma` and random or fixed codes.
    """
    config = _config(Task.QAG, steps, seed, weights={'gamma': gamma},
                     synthetic={'n_contexts': n_contexts, 'spans_per_context': 4, 'seed': seed},
                     learning_rate=learning_rate, fixed_codes=fixed_codes, held_out=held_out)
    result = train(config)
    held = encode_examples(result.held_out_set, result.tokenizer)
    contexts = [context for _, context, _ in distinct_contexts(held)]
    values = {'recovery_accuracy': code_recovery(result.model, contexts, seed),
              'span_variation': span_variation(result.model, contexts, seed)}
    log.info(f'vmim_effect(): gamma={gamma} fixed_codes={fixed_codes} {values}')
    return ExperimentResult('vmim_effect', values)


def posterior_collapse(free_bits=True, steps=300, seed=0, n_contexts=32):
    """Active units of a toy LM trained with free bits and annealing, or with a large fixed β"""
    if free_bits:
        weights = {'lambda_fb': 1.0, 'anneal': True}
    else:
        weights = {'beta_max': 10.0, 'lambda_fb': 0.0, 'anneal': False}
    config = _config(Task.LM, steps, seed, weights=weights, synthetic={'n_contexts': n_contexts, 'seed': seed})
    result = train(config)
    encoded = encode_examples(result.train_set, result.tokenizer)
    rng = make_rng(seed, _EXPERIMENT_STREAM)
    means = posterior_means(result.model, [(e.context, e.target) for e in encoded], rng)
    values = {'au': float(active_units(means)), 'n_zg': float(result.model.config.n_zg)}
    log.info(f'posterior_collapse(): free_bits={free_bits} {values}')
    return ExperimentResult('posterior_collapse', values)


def _per_context_diversity(generator, contexts, seed, samples, deterministic):
    scores = []
    for i, context in enumerate(contexts):
        outputs = generator.samples(context, samples, make_rng(seed, _EXPERIMENT_STREAM, i), deterministic)
        sentences = [o.tokens for o in outputs]
        scores.append((self_bleu(sentences) if any(sentences) else 100.0,
                       distinct_k(sentences, 2) if sum(map(len, sentences)) else 0.0))
    return scores


def diversity_direction(steps=300, seed=0, n_contexts=40, held_out=10, samples=Defaults.samples_per_context):
    """
    Share of held-out dialog contexts where prior-sampled generations are more diverse than the
    greedy prior-mean baseline on both Self-BLEU and Distinct-2.
    """
    config = _config(Task.DIALOG, steps, seed, synthetic={'n_contexts': n_contexts, 'seed': seed},
                     held_out=held_out)
    result = train(config)
    held = encode_examples(result.held_out_set, result.tokenizer)
    contexts = [context for _, context, _ in distinct_contexts(held)]
    generator = Generator(result.model)
    sampled = _per_context_diversity(generator, contexts, seed, samples, deterministic=False)
    baseline = _per_context_diversity(generator, contexts, seed, samples, deterministic=True)
    better = [s[0] < b[0] and s[1] > b[1] for s, b in zip(sampled, baseline)]
    values = {'share_more_diverse': float(np.mean(better)),
              'self_bleu': float(np.mean([s[0] for s in sampled])),
              'baseline_self_bleu': float(np.mean([b[0] for b in baseline])),
              'distinct_2': float(np.mean([s[1] for s in sampled])),
              'baseline_distinct_2': float(np.mean([b[1] for b in baseline]))}
    log.info(f'diversity_direction(): {values}')
    return ExperimentResult('diversity_direction', values)


def deterministic_ablation(steps=300, seed=0, n_contexts=40, held_out=10, samples=Defaults.samples_per_context):
    """Self-BLEU of prior samples with variational sampling disabled and codes fixed"""
    config = _config(Task.DIALOG, steps, seed, model={'variational': False},
                     synthetic={'n_contexts': n_contexts, 'seed': seed}, fixed_codes=True, held_out=held_out)
    result = train(config)
    held = encode_examples(result.held_out_set, result.tokenizer)
    contexts = [context for _, context, _ in distinct_contexts(held)]
    generator = Generator(result.model, fixed_codes=True)
    scores = _per_context_diversity(generator, contexts, seed, samples, deterministic=False)
    values = {'self_bleu': float(np.mean([s[0] for s in scores]))}
    log.info(f'deterministic_ablation(): {values}')
    return ExperimentResult('deterministic_ablation', values)


def next_token_accuracy(model, encoded, seed=0):
    """Teacher-forced argmax accuracy under each example's own posterior-mean latents"""
    rng = make_rng(seed, _EXPERIMENT_STREAM)
    hits, total = 0, 0
    with no_grad():
        for example in encoded:
            latent = posterior_mean_latent(model, example.context, example.target, rng)
            logits = model.decoder_forward(example.context, example.target, latent).logits.data
            gold = np.array(list(example.target) + [Defaults.eos_id])
            hits += int(np.sum(np.argmax(logits, axis=1) == gold))
            total += len(gold)
    return hits / total


def lm_overfit(steps=3000, seed=0, n_contexts=32):
    """Next-token accuracy of a deterministic autoencoder trained on a small LM corpus"""
    config = _config(Task.LM, steps, seed, model={'variational': False},
                     synthetic={'n_contexts': n_contexts, 'seed': seed}, fixed_codes=True)
    result = train(config)
    accuracy = next_token_accuracy(result.model, encode_examples(result.train_set, result.tokenizer), seed)
    log.info(f'lm_overfit(): accuracy={accuracy:.4f} after {steps} steps')
    return ExperimentResult('lm_overfit', {'accuracy': accuracy})
