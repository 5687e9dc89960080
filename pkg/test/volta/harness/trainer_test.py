import os

import mock
import numpy as np
import pytest

from volta.harness.checkpoint import load_checkpoint
from volta.harness.lossstream import LossStreamWriter, read_loss_stream
from volta.harness.trainer import Trainer, question_context, train
from volta.types.defaults import Defaults
from volta.types.lossreport import LossReport
from volta.types.runconfig import QagPipeline
from volta.util.exceptions import ConfigError, DivergenceError, NumericError

from test.volta.utils import BaseTestCase, tiny_run_config


def trajectory(result):
    return [report.as_dict() for report in result.reports]


class TestTrainer(BaseTestCase):

    @pytest.fixture(autouse=True)
    def tmp(self, tmp_path):
        self.tmp_path = tmp_path

    def test_equal_configs_equal_trajectories(self):
        for task in ('lm', 'dialog', 'qag'):
            config = tiny_run_config(task, steps=3)
            assert trajectory(train(config)) == trajectory(train(config))

    def test_seed_changes_the_trajectory(self):
        assert trajectory(train(tiny_run_config(seed=0))) != trajectory(train(tiny_run_config(seed=1)))

    def test_reports_are_consistent(self):
        result = train(tiny_run_config(steps=3))
        config = result.checkpoint.run_config
        assert [r.step for r in result.reports] == [0, 1, 2]
        for report in result.reports:
            assert report.total == pytest.approx(report.recomputed_total())
            assert len(report.kl_per_dim) == config.model.n_zg + config.model.n_za
        assert result.reports[0].beta_used == 0.0

    def test_vocabulary_comes_from_the_corpus(self):
        trainer = Trainer(tiny_run_config())
        assert trainer.model.config.vocab_size == len(trainer.tokenizer)
        assert trainer.config.model.vocab_size == len(trainer.tokenizer)

    def test_batches_cover_every_example_each_epoch(self):
        trainer = Trainer(tiny_run_config(batch_size=2))
        n = len(trainer.encoded)
        seen = [id(e) for step in range(n // 2) for e in trainer.batch(step)]
        assert sorted(seen) == sorted(id(e) for e in trainer.encoded)

    def test_out_dir(self):
        trainer = Trainer(tiny_run_config(steps=3), out_dir=str(self.tmp_path))
        steps, saved = [], []
        trainer.on('step', lambda report: steps.append(report.step))
        trainer.on('checkpoint', lambda path, step: saved.append(step))
        result = trainer.train()

        assert steps == [0, 1, 2]
        assert saved == [0, 3]
        for name in (Defaults.checkpoint_file, Defaults.last_good_checkpoint_file, Defaults.loss_stream_file):
            assert os.path.exists(self.tmp_path / name)
        stream = read_loss_stream(str(self.tmp_path / Defaults.loss_stream_file))
        assert [r.as_dict() for r in stream] == trajectory(result)

    def test_checkpoint_interval(self):
        trainer = Trainer(tiny_run_config(steps=4, checkpoint_interval=2), out_dir=str(self.tmp_path))
        saved = []
        trainer.on('checkpoint', lambda path, step: saved.append(step))
        trainer.train()
        assert saved == [0, 2, 4, 4]

    def test_divergence(self):
        trainer = Trainer(tiny_run_config(), out_dir=str(self.tmp_path))
        diverged = []
        trainer.on('diverged', lambda error: diverged.append(error))
        with mock.patch.object(Trainer, 'loss', side_effect=NumericError('loss is nan', term='ae')):
            with pytest.raises(DivergenceError) as excinfo:
                trainer.train()
        error = excinfo.value
        assert error.step == 0
        assert error.last_good_checkpoint == os.path.join(str(self.tmp_path), Defaults.last_good_checkpoint_file)
        assert os.path.exists(error.last_good_checkpoint)
        assert isinstance(error.cause, NumericError)
        assert diverged == [error]

    def test_non_finite_update_is_never_promoted(self):
        trainer = Trainer(tiny_run_config(steps=4, checkpoint_interval=2), out_dir=str(self.tmp_path))
        saved = []
        trainer.on('checkpoint', lambda path, step: saved.append(step))
        update = trainer.optimizer.step

        def nan_on_second_update():
            update()
            if trainer.optimizer.iterations == 2:
                trainer.model.token_embedding.data[0, 0] = np.nan

        with mock.patch.object(trainer.optimizer, 'step', side_effect=nan_on_second_update):
            with pytest.raises(DivergenceError) as excinfo:
                trainer.train()
        error = excinfo.value
        assert error.step == 1
        assert error.cause.term == 'embedding.token'
        assert saved == [0]
        last_good = load_checkpoint(error.last_good_checkpoint)
        assert last_good.step == 0
        assert all(np.all(np.isfinite(value)) for value in last_good.parameters.values())

    def test_invalid_runs(self):
        with pytest.raises(ConfigError):
            Trainer(tiny_run_config('lm', model={'prior': 'context'}))
        with pytest.raises(ConfigError):
            Trainer(tiny_run_config(held_out=3))

    def test_held_out_contexts(self):
        trainer = Trainer(tiny_run_config(held_out=1))
        assert len(trainer.held_out_set) == 2
        train_groups = {e.group for e in trainer.train_set}
        assert not train_groups & {e.group for e in trainer.held_out_set}

    def test_batch_of_one_skips_qami_once(self):
        with mock.patch('volta.harness.trainer.log') as log:
            result = train(tiny_run_config(batch_size=1, steps=3))
        assert log.warning.call_count == 1
        assert all(report.qami == 0.0 for report in result.reports)

    def test_qami_is_scored_for_larger_batches(self):
        result = train(tiny_run_config(batch_size=3, steps=1))
        assert result.reports[0].qami > 0.0
        assert result.reports[0].qami_weight == 1.0


class TestHelpers(BaseTestCase):

    def test_question_context(self):
        context, answer = [5, 6, 7], [6]
        assert question_context(context, answer) == [5, 6, 7, Defaults.sep_id, 6]
        assert question_context(context, answer, QagPipeline.INDEPENDENT) == context
        assert question_context(context, []) == context

    def test_loss_stream(self):
        path = os.path.join(self.tmp_path, 'losses.msgpack')
        with LossStreamWriter(path) as writer:
            writer.write(LossReport(ae=1.5, total=1.5, kl_per_dim=[0.25], step=0))
            writer.write(LossReport(ae=1.0, total=1.0, step=1))
        reports = read_loss_stream(path)
        assert [r.step for r in reports] == [0, 1]
        assert reports[0].kl_per_dim == [0.25]

    @pytest.fixture(autouse=True)
    def tmp(self, tmp_path):
        self.tmp_path = str(tmp_path)
