import pytest

from volta.harness.evaluation import distinct_contexts
from volta.harness.experiments import (code_recovery, deterministic_ablation, diversity_direction, lm_overfit,
                                       next_token_accuracy, posterior_collapse, span_variation, vmim_effect)
from volta.harness.experiments import FAST_OPTIMIZER, VMIM_LEARNING_RATE, _config
from volta.harness.trainer import encode_examples, train
from volta.types.corpus import Task

from test.volta.utils import BaseTestCase, tiny_run_config


class TestMeasurements(BaseTestCase):

    @classmethod
    def setUpClass(cls):
        cls.result = train(tiny_run_config(steps=2))
        cls.examples = encode_examples(cls.result.train_set, cls.result.tokenizer)
        cls.contexts = [context for _, context, _ in distinct_contexts(cls.examples)]

    def test_code_recovery(self):
        accuracy = code_recovery(self.result.model, self.contexts, seed=0)
        assert 0.0 <= accuracy <= 1.0
        assert accuracy == code_recovery(self.result.model, self.contexts, seed=0)

    def test_span_variation(self):
        share = span_variation(self.result.model, self.contexts)
        assert share * len(self.contexts) == int(round(share * len(self.contexts)))
        assert 0.0 <= share <= 1.0

    def test_next_token_accuracy(self):
        accuracy = next_token_accuracy(self.result.model, self.examples)
        assert 0.0 <= accuracy <= 1.0

    def test_code_recovery_runs_use_their_own_step_size(self):
        default = _config(Task.QAG, 5, 0)
        recovery = _config(Task.QAG, 5, 0, learning_rate=VMIM_LEARNING_RATE)
        assert default.optimizer.learning_rate == FAST_OPTIMIZER['learning_rate']
        assert recovery.optimizer.learning_rate == VMIM_LEARNING_RATE > default.optimizer.learning_rate
        assert recovery.optimizer.kind == default.optimizer.kind


@pytest.mark.slow
class TestExperiments(BaseTestCase):

    def test_deterministic_generation_has_no_diversity(self):
        result = deterministic_ablation(steps=3, n_contexts=6, held_out=2, samples=3)
        assert result['self_bleu'] == pytest.approx(100.0)

    def test_posterior_collapse_reports_active_units(self):
        result = posterior_collapse(steps=3, n_contexts=6)
        assert 0 <= result['au'] <= result['n_zg']

    def test_diversity_direction(self):
        result = diversity_direction(steps=3, n_contexts=6, held_out=2, samples=3)
        assert 0.0 <= result['share_more_diverse'] <= 1.0
        assert result['baseline_self_bleu'] == pytest.approx(100.0)


@pytest.mark.slow
class TestDeskScaleReproductions(BaseTestCase):

    @pytest.mark.timeout(1500)
    def test_vmim_makes_codes_recoverable(self):
        trained = vmim_effect(gamma=1.0)
        assert trained['recovery_accuracy'] >= 0.8
        assert trained['span_variation'] >= 0.5
        ablated = vmim_effect(gamma=0.0, fixed_codes=True)
        assert ablated['recovery_accuracy'] <= 0.4
        assert ablated['span_variation'] < trained['span_variation']

    @pytest.mark.timeout(1500)
    def test_free_bits_prevent_posterior_collapse(self):
        assert posterior_collapse(free_bits=True)['au'] >= 8
        assert posterior_collapse(free_bits=False)['au'] <= 2

    @pytest.mark.timeout(900)
    def test_prior_samples_beat_the_greedy_baseline(self):
        result = diversity_direction()
        assert result['share_more_diverse'] >= 0.9
        assert result['self_bleu'] < result['baseline_self_bleu']
        assert result['distinct_2'] > result['baseline_distinct_2']

    @pytest.mark.timeout(900)
    def test_deterministic_ablation_is_near_deterministic(self):
        assert deterministic_ablation()['self_bleu'] >= 99.0

    @pytest.mark.timeout(3600)
    def test_deterministic_autoencoder_overfits_a_small_corpus(self):
        assert lm_overfit()['accuracy'] >= 0.99
