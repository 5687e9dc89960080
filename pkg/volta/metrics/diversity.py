import logging
from enum import Enum

import numpy as np
from nltk.util import ngrams

from volta.metrics.bleu import as_tokens, sentence_bleu
from volta.types.corpus import Corpus
from volta.types.defaults import Defaults
from volta.util.exceptions import ContractError, DegenerateInputError

log = logging.getLogger(__name__)


class DistinctDenominator(str, Enum):
    WORDS = 'words'
    NGRAMS = 'ngrams'


def _sentences(corpus):
    if isinstance(corpus, Corpus):
        return corpus.sentences
    return [as_tokens(s) for s in corpus]


def distinct_k(sentences, k, denominator=DistinctDenominator.WORDS):
    """
    Unique k-grams across all sentences divided by the total number of words (or, with
    denominator='ngrams', by the total number of k-grams).
    """
    if k < 1:
        raise ContractError('distinct_k(): k must be at least 1, got %r' % (k,))
    sentences = _sentences(sentences)
    if not sentences:
        raise DegenerateInputError('distinct_k(): empty corpus')
    grams = [gram for s in sentences if len(s) >= k for gram in ngrams(s, k)]
    if DistinctDenominator(denominator) == DistinctDenominator.WORDS:
        total = sum(len(s) for s in sentences)
    else:
        total = len(grams)
    if total == 0:
        raise DegenerateInputError('distinct_k(): nothing to count')
    return len(set(grams)) / total


def self_bleu(sentences, max_n=Defaults.bleu_max_n):
    """Mean BLEU of each sentence against all the others, on a 0–100 scale"""
    sentences = _sentences(sentences)
    if len(sentences) < 2:
        raise DegenerateInputError('self_bleu(): needs at least two sentences, got %d' % len(sentences))
    scores = [sentence_bleu(s, sentences[:i] + sentences[i + 1:], max_n) for i, s in enumerate(sentences)]
    return 100.0 * float(np.mean(scores))


def bleu_precision_recall(hypotheses, references, max_n=Defaults.bleu_max_n):
    """
    Per context, BLEU(hypothesis, reference) for every pair: precision averages each hypothesis'
    best score, recall each reference's best score. Returns (precision, recall, F1) averaged over
    contexts; F1 is the harmonic mean of the two averages.

    Parameters
    ----------
    hypotheses, references : list of list of sentences
        One list per context
    """
    if len(hypotheses) != len(references) or not hypotheses:
        raise DegenerateInputError('bleu_precision_recall(): %d hypothesis groups for %d reference groups'
                                   % (len(hypotheses), len(references)))
    precisions, recalls = [], []
    for hyps, refs in zip(hypotheses, references):
        hyps, refs = _sentences(hyps), _sentences(refs)
        if not hyps or not refs:
            raise DegenerateInputError('bleu_precision_recall(): empty hypothesis or reference side')
        scores = np.array([[sentence_bleu(h, [r], max_n) for r in refs] for h in hyps])
        precisions.append(scores.max(axis=1).mean())
        recalls.append(scores.max(axis=0).mean())
    precision, recall = float(np.mean(precisions)), float(np.mean(recalls))
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def per_context_diversity(corpus: Corpus, max_n=Defaults.bleu_max_n):
    """
    Self-BLEU and Distinct-2 per group of a grouped corpus.

    Self-BLEU needs at least two sentences; it is None for a group with a single sentence.
    """
    result = {}
    for group, sentences in corpus.by_group().items():
        result[group] = {
            'self_bleu': self_bleu(sentences, max_n) if len(sentences) > 1 else None,
            'distinct_2': distinct_k(sentences, 2),
        }
    return result
