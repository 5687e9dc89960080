from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

from volta.types.mixins import DictMixin
from volta.util.exceptions import DegenerateInputError, SpecError


class Task(str, Enum):
    LM = 'lm'
    DIALOG = 'dialog'
    QAG = 'qag'


@dataclass
class Corpus:
    """Sentences as token lists with an optional grouping key per sentence (e.g. a context id)"""

    sentences: List[List[str]]
    groups: Optional[List[int]] = None

    def __post_init__(self):
        self.sentences = [list(s) for s in self.sentences]
        if any(len(s) == 0 for s in self.sentences):
            raise DegenerateInputError('Corpus: empty sentence')
        if self.groups is not None and len(self.groups) != len(self.sentences):
            raise DegenerateInputError('Corpus: %d groups for %d sentences'
                                       % (len(self.groups), len(self.sentences)))

    def __len__(self):
        return len(self.sentences)

    def by_group(self):
        grouped = {}
        keys = self.groups if self.groups is not None else [0] * len(self.sentences)
        for key, sentence in zip(keys, self.sentences):
            grouped.setdefault(key, []).append(sentence)
        return grouped

    @staticmethod
    def from_lines(lines, groups=None):
        return Corpus([line.split() for line in lines if line.strip()], groups)


@dataclass
class Example:
    """
    One training datum: a (possibly empty) context and a target sequence.

    QAG examples carry the 1-based answer span (start, end) inside the context, and the
    target is the question.
    """

    context: List[str]
    target: List[str]
    start: Optional[int] = None
    end: Optional[int] = None
    group: int = 0

    @property
    def has_span(self):
        return self.start is not None

    @property
    def answer(self):
        if not self.has_span:
            return []
        return self.context[self.start - 1:self.end]

    def validate(self):
        if not self.target:
            raise SpecError('Example: empty target')
        if self.has_span and not 1 <= self.start <= self.end <= len(self.context):
            raise SpecError('Example: span (%d, %d) outside a context of %d tokens'
                            % (self.start, self.end, len(self.context)))

    def as_record(self):
        key = 'question' if self.has_span else 'target'
        record = {'context': ' '.join(self.context), key: ' '.join(self.target)}
        if self.has_span:
            record['s'] = self.start
            record['e'] = self.end
        return record


@dataclass
class ExampleSet:
    task: Task
    examples: List[Example] = field(default_factory=list)

    def __post_init__(self):
        self.task = Task(self.task)
        for example in self.examples:
            example.validate()

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, index):
        return self.examples[index]

    def words(self):
        seen = []
        for example in self.examples:
            seen.extend(example.context)
            seen.extend(example.target)
        return seen

    def split(self, held_out):
        """Last `held_out` distinct groups become the evaluation split"""
        groups = sorted({e.group for e in self.examples})
        cut = set(groups[len(groups) - held_out:]) if held_out else set()
        train = [e for e in self.examples if e.group not in cut]
        test = [e for e in self.examples if e.group in cut]
        return ExampleSet(self.task, train), ExampleSet(self.task, test)


@dataclass
class SyntheticSpec(DictMixin):
    """
    Parameters of a generated stand-in corpus.

    `n_words` sizes the filler lexicon; `n_relations` the pool of relation words a qag context
    draws its facts from.
    """

    error_class = SpecError

    task: Task = Task.LM
    n_words: int = 24
    n_contexts: int = 32
    context_length: int = 16
    spans_per_context: int = 4
    span_length: int = 1
    n_relations: int = 8
    n_entities: int = 20
    turns: int = 2
    seed: int = 0

    def __post_init__(self):
        try:
            self.task = Task(self.task)
        except ValueError as e:
            raise SpecError('SyntheticSpec: %s' % e, cause=e)
        self.validate()

    def validate(self):
        for name in ('n_words', 'n_contexts', 'context_length', 'spans_per_context', 'span_length',
                     'n_relations', 'n_entities', 'turns'):
            if not isinstance(getattr(self, name), int) or getattr(self, name) <= 0:
                raise SpecError('SyntheticSpec: %s must be a positive integer, got %r'
                                % (name, getattr(self, name)))
        if self.task == Task.QAG:
            if self.spans_per_context * (self.span_length + 1) > self.context_length:
                raise SpecError('SyntheticSpec: %d spans of length %d (plus a relation word each) do not fit '
                                'a context of %d tokens' % (self.spans_per_context, self.span_length,
                                                            self.context_length))
            if self.spans_per_context > self.n_relations:
                raise SpecError('SyntheticSpec: %d spans per context need at least as many relations, got %d'
                                % (self.spans_per_context, self.n_relations))
