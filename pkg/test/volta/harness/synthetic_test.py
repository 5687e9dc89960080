import json

import pytest

from volta.harness.synthetic import load_corpus, make_synthetic_corpus, syllable_word, write_corpus
from volta.harness.tokenizer import SEP_TOKEN
from volta.types.corpus import SyntheticSpec, Task
from volta.util.exceptions import SpecError

from test.volta.utils import BaseTestCase


def records(examples):
    return [(e.context, e.target, e.start, e.end) for e in examples]


class TestSyntheticCorpus(BaseTestCase):

    def test_same_spec_same_corpus(self):
        for task in Task:
            spec = SyntheticSpec(task=task, n_contexts=8, seed=3)
            assert records(make_synthetic_corpus(spec)) == records(make_synthetic_corpus(spec))

    def test_seed_changes_the_corpus(self):
        first = make_synthetic_corpus(SyntheticSpec(task='qag', seed=0))
        second = make_synthetic_corpus(SyntheticSpec(task='qag', seed=1))
        assert records(first) != records(second)

    def test_qag_annotations(self):
        spec = SyntheticSpec(task='qag')
        examples = make_synthetic_corpus(spec)
        assert len(examples) == spec.n_contexts * spec.spans_per_context
        groups = {}
        for example in examples:
            groups.setdefault(example.group, []).append(example)
            assert len(example.context) == spec.context_length
            assert example.end - example.start + 1 == spec.span_length
            # the question names the relation word right before its answer
            assert example.target[1] == example.context[example.start - 2]
        assert len(groups) == spec.n_contexts
        assert all(len(g) == spec.spans_per_context for g in groups.values())
        for group in groups.values():
            assert len({(e.start, e.end) for e in group}) == spec.spans_per_context
            assert len({e.target[1] for e in group}) == spec.spans_per_context

    def test_lm_examples_have_no_context(self):
        examples = make_synthetic_corpus(SyntheticSpec(task='lm', n_contexts=5))
        assert len(examples) == 5
        assert all(e.context == [] and e.target for e in examples)

    def test_dialog_turns(self):
        examples = make_synthetic_corpus(SyntheticSpec(task='dialog', n_contexts=5, turns=3))
        for example in examples:
            assert example.context.count(SEP_TOKEN) == 2
            assert SEP_TOKEN not in example.target

    def test_impossible_specs(self):
        with pytest.raises(SpecError):
            SyntheticSpec(task='qag', context_length=6, spans_per_context=4)
        with pytest.raises(SpecError):
            SyntheticSpec(task='qag', spans_per_context=5, n_relations=4)
        with pytest.raises(SpecError):
            SyntheticSpec(n_contexts=0)
        with pytest.raises(SpecError):
            SyntheticSpec(task='translation')

    def test_syllable_words_are_distinct(self):
        words = [syllable_word(i) for i in range(500)]
        assert len(set(words)) == 500
        assert syllable_word(0) == 'baba'


class TestCorpusFiles(BaseTestCase):

    @pytest.fixture(autouse=True)
    def tmp(self, tmp_path):
        self.tmp_path = tmp_path

    def test_files_keep_every_example(self):
        for task, name in ((Task.LM, 'lm.txt'), (Task.DIALOG, 'dialog.txt'), (Task.QAG, 'qag.json')):
            examples = make_synthetic_corpus(SyntheticSpec(task=task, n_contexts=4))
            path = self.tmp_path / name
            write_corpus(examples, str(path))
            assert records(load_corpus(str(path), task)) == records(examples)

    def test_dialog_line_without_separator(self):
        path = self.tmp_path / 'dialog.txt'
        path.write_text('hello there\n')
        with pytest.raises(SpecError):
            load_corpus(str(path), 'dialog')

    def test_malformed_qag_records(self):
        path = self.tmp_path / 'qag.json'
        path.write_text(json.dumps([{'context': 'a b c', 'question': 'what ?'}]))
        with pytest.raises(SpecError):
            load_corpus(str(path), 'qag')
        path.write_text(json.dumps([{'context': 'a b c', 'question': 'what ?', 's': 3, 'e': 5}]))
        with pytest.raises(SpecError):
            load_corpus(str(path), 'qag')
