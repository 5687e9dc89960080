"""
Generated stand-in corpora.

Every corpus is a pure function of its SyntheticSpec: all randomness comes from one stream
seeded by `SyntheticSpec.seed`, and the lexicon is built deterministically from syllables.
"""
import json
import logging

from volta.harness.tokenizer import SEP_TOKEN
from volta.types.corpus import Example, ExampleSet, SyntheticSpec, Task
from volta.util.exceptions import SpecError
from volta.util.helper import make_rng

log = logging.getLogger(__name__)

_CONSONANTS = 'bdfgklmnprstvz'
_VOWELS = 'aeiou'

LM_TEMPLATES = [
    ['the', 'ADJ', 'NOUN', 'VERB', 'the', 'NOUN'],
    ['a', 'NOUN', 'VERB'],
    ['the', 'NOUN', 'VERB', 'a', 'ADJ', 'NOUN'],
    ['NOUN', 'and', 'NOUN', 'VERB'],
]

DIALOG_TURNS = [
    ['i', 'like', 'the', 'NOUN'],
    ['do', 'you', 'VERB', '?'],
    ['the', 'NOUN', 'is', 'ADJ'],
]

DIALOG_RESPONSES = [
    ['yes', 'the', 'TOPIC', 'is', 'ADJ'],
    ['no', 'i', 'VERB', 'the', 'TOPIC'],
    ['the', 'TOPIC', 'VERB', 'a', 'NOUN'],
]

QUESTION_WORD = 'what'
QUESTION_MARK = '?'


def syllable_word(index, syllables=2):
    """Deterministic consonant-vowel pseudo-word for a non-negative index"""
    letters = []
    base = len(_CONSONANTS) * len(_VOWELS)
    for _ in range(syllables):
        index, digit = divmod(index, base)
        letters.append(_CONSONANTS[digit // len(_VOWELS)] + _VOWELS[digit % len(_VOWELS)])
    if index:
        letters.append(syllable_word(index, 1))
    return ''.join(letters)


class _Lexicon:
    def __init__(self, spec):
        counter = iter(range(10 ** 6))
        size = max(1, spec.n_words // 3)
        self.nouns = [syllable_word(next(counter)) for _ in range(size)]
        self.verbs = [syllable_word(next(counter)) for _ in range(size)]
        self.adjectives = [syllable_word(next(counter)) for _ in range(size)]
        self.fillers = [syllable_word(next(counter)) for _ in range(spec.n_words)]
        self.relations = [syllable_word(next(counter), 3) for _ in range(spec.n_relations)]
        self.entities = [syllable_word(next(counter), 3) for _ in range(spec.n_entities)]

    def fill(self, template, rng, topic=None):
        pools = {'NOUN': self.nouns, 'VERB': self.verbs, 'ADJ': self.adjectives}
        words = []
        for slot in template:
            if slot == 'TOPIC':
                words.append(topic)
            elif slot in pools:
                pool = pools[slot]
                words.append(pool[int(rng.integers(len(pool)))])
            else:
                words.append(slot)
        return words


def _lm(spec, lexicon, rng):
    examples = []
    for i in range(spec.n_contexts):
        template = LM_TEMPLATES[int(rng.integers(len(LM_TEMPLATES)))]
        examples.append(Example([], lexicon.fill(template, rng), group=i))
    return examples


def _dialog(spec, lexicon, rng):
    examples = []
    for i in range(spec.n_contexts):
        context = []
        topic = None
        for turn in range(spec.turns):
            words = lexicon.fill(DIALOG_TURNS[int(rng.integers(len(DIALOG_TURNS)))], rng)
            topic = next((w for w in words if w in lexicon.nouns), topic)
            if turn:
                context.append(SEP_TOKEN)
            context.extend(words)
        topic = topic or lexicon.nouns[0]
        response = lexicon.fill(DIALOG_RESPONSES[int(rng.integers(len(DIALOG_RESPONSES)))], rng, topic)
        examples.append(Example(context, response, group=i))
    return examples


def _qag(spec, lexicon, rng):
    examples = []
    fact_length = spec.span_length + 1
    n_fillers = spec.context_length - spec.spans_per_context * fact_length
    for i in range(spec.n_contexts):
        relations = [lexicon.relations[j] for j in rng.choice(spec.n_relations, spec.spans_per_context,
                                                                replace=False)]
        gaps = [0] * (spec.spans_per_context + 1)
        for _ in range(n_fillers):
            gaps[int(rng.integers(len(gaps)))] += 1

        context, spans = [], []
        for gap, relation in zip(gaps, relations):
            context.extend(lexicon.fillers[int(rng.integers(len(lexicon.fillers)))] for _ in range(gap))
            context.append(relation)
            start = len(context) + 1
            context.extend(lexicon.entities[int(rng.integers(len(lexicon.entities)))]
                           for _ in range(spec.span_length))
            spans.append((relation, start, len(context)))
        context.extend(lexicon.fillers[int(rng.integers(len(lexicon.fillers)))] for _ in range(gaps[-1]))

        for relation, start, end in spans:
            examples.append(Example(list(context), [QUESTION_WORD, relation, QUESTION_MARK], start, end, group=i))
    return examples


_BUILDERS = {Task.LM: _lm, Task.DIALOG: _dialog, Task.QAG: _qag}


def make_synthetic_corpus(spec: SyntheticSpec) -> ExampleSet:
    spec.validate()
    rng = make_rng(spec.seed)
    examples = _BUILDERS[spec.task](spec, _Lexicon(spec), rng)
    log.debug(f'make_synthetic_corpus(): {len(examples)} {spec.task.value} examples')
    return ExampleSet(spec.task, examples)


def load_corpus(path, task) -> ExampleSet:
    """
    Plain-text corpora: one sentence per line for lm; for dialog, turns and the response on one
    line separated by <sep>; for qag, a JSON list of {context, question, s, e} records.
    """
    task = Task(task)
    with open(path, encoding='utf-8') as f:
        text = f.read()
    examples = []
    if task == Task.QAG:
        try:
            records = json.loads(text)
            for i, record in enumerate(records):
                examples.append(Example(record['context'].split(), record['question'].split(),
                                        int(record['s']), int(record['e']), group=i))
        except (ValueError, KeyError, TypeError, AttributeError) as e:
            raise SpecError('load_corpus(): malformed qag record file %s: %s' % (path, e), cause=e)
        return ExampleSet(task, examples)

    for i, line in enumerate(l for l in text.splitlines() if l.strip()):
        words = line.split()
        if task == Task.DIALOG:
            if SEP_TOKEN not in words:
                raise SpecError('load_corpus(): dialog line %d has no %s before the response' % (i + 1, SEP_TOKEN))
            cut = len(words) - 1 - words[::-1].index(SEP_TOKEN)
            examples.append(Example(words[:cut], words[cut + 1:], group=i))
        else:
            examples.append(Example([], words, group=i))
    return ExampleSet(task, examples)


def write_corpus(examples: ExampleSet, path):
    with open(path, 'w', encoding='utf-8') as f:
        if examples.task == Task.QAG:
            json.dump([e.as_record() for e in examples], f, indent=1)
            return
        for example in examples:
            if examples.task == Task.DIALOG:
                f.write(' '.join(example.context + [SEP_TOKEN] + example.target) + '\n')
            else:
                f.write(' '.join(example.target) + '\n')
