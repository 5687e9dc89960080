import math
from collections import Counter

from nltk.util import ngrams

from volta.types.defaults import Defaults


def as_tokens(sentence):
    return sentence.split() if isinstance(sentence, str) else list(sentence)


def _ngram_counts(tokens, n):
    return Counter(ngrams(tokens, n)) if len(tokens) >= n else Counter()


def _closest_reference_length(hypothesis_length, references):
    # ties go to the shorter reference
    return min((abs(len(r) - hypothesis_length), len(r)) for r in references)[1]


def modified_precision(hypothesis, references, n):
    """(clipped matches, total hypothesis n-grams) for one order"""
    counts = _ngram_counts(hypothesis, n)
    max_reference = Counter()
    for reference in references:
        for gram, count in _ngram_counts(reference, n).items():
            if count > max_reference[gram]:
                max_reference[gram] = count
    clipped = sum(min(count, max_reference[gram]) for gram, count in counts.items())
    return clipped, sum(counts.values())


def sentence_bleu(hypothesis, references, max_n=Defaults.bleu_max_n):
    """
    BLEU in [0, 1] of one hypothesis against one or more references.

    Unigram precision is unsmoothed, orders n > 1 use (matches + 1)/(total + 1), and the
    brevity penalty uses the closest reference length. No unigram match gives 0.
    """
    hypothesis = as_tokens(hypothesis)
    references = [as_tokens(r) for r in references]
    if not hypothesis or not references:
        return 0.0

    log_precisions = []
    for n in range(1, max_n + 1):
        clipped, total = modified_precision(hypothesis, references, n)
        if n == 1:
            if clipped == 0:
                return 0.0
            precision = clipped / total
        else:
            precision = (clipped + 1) / (total + 1)
        log_precisions.append(math.log(precision) / max_n)

    c = len(hypothesis)
    r = _closest_reference_length(c, references)
    brevity = 1.0 if c > r else math.exp(1.0 - r / c)
    return brevity * math.exp(math.fsum(log_precisions))
