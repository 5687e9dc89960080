import dataclasses

import pytest

from volta.harness.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from volta.harness.trainer import Trainer
from volta.types.runconfig import OptimizerOptions
from volta.util.exceptions import CheckpointError

from test.volta.utils import BaseTestCase, tiny_run_config


class TestCheckpoint(BaseTestCase):

    @pytest.fixture(autouse=True)
    def tmp(self, tmp_path):
        self.tmp_path = tmp_path

    def trained(self, steps=2, **overrides):
        return Trainer(tiny_run_config(steps=steps, **overrides)).train()

    def test_zero_steps_keeps_the_initialization(self):
        result = self.trained(steps=0)
        model, tokenizer = result.checkpoint.restore()
        initial = Trainer(tiny_run_config(steps=0)).model.parameters.state()
        assert list(model.parameters.state()) == list(initial)
        for name, value in initial.items():
            self.assert_arrays_equal(model.parameters[name].data, value)
        assert tokenizer.vocabulary == result.tokenizer.vocabulary

    def test_equal_runs_write_equal_bytes(self):
        assert self.trained().checkpoint.to_bytes() == self.trained().checkpoint.to_bytes()
        assert self.trained().checkpoint.to_bytes() != self.trained(seed=1).checkpoint.to_bytes()

    def test_file_round_trip(self):
        result = self.trained()
        path = save_checkpoint(result.checkpoint, str(self.tmp_path / 'run.ckpt'))
        loaded = load_checkpoint(path)
        assert loaded.step == 2
        assert loaded.run_config == result.checkpoint.run_config
        model, _ = loaded.restore()
        for name, tensor in result.model.parameters.items():
            self.assert_arrays_equal(model.parameters[name].data, tensor.data)

    def test_optimizer_state_is_restored(self):
        result = self.trained(optimizer=OptimizerOptions(kind='adam', learning_rate=1e-3))
        fresh = Trainer(result.checkpoint.run_config)
        result.checkpoint.restore(fresh.optimizer)
        assert fresh.optimizer.iterations == 2
        _, restored = fresh.optimizer.state()
        assert sorted(restored) == sorted(result.checkpoint.optimizer_state)
        for key, value in result.checkpoint.optimizer_state.items():
            self.assert_arrays_equal(restored[key], value)

    def test_truncated_files(self):
        data = self.trained(steps=0).checkpoint.to_bytes()
        with pytest.raises(CheckpointError) as excinfo:
            Checkpoint.from_bytes(data[:-8])
        assert excinfo.value.field == 'payload'
        with pytest.raises(CheckpointError) as excinfo:
            Checkpoint.from_bytes(data[:4])
        assert excinfo.value.field == 'header'
        with pytest.raises(CheckpointError) as excinfo:
            Checkpoint.from_bytes(data[:20])
        assert excinfo.value.field == 'header'

    def test_unknown_format_version(self):
        checkpoint = self.trained(steps=0).checkpoint
        checkpoint.version = 2
        with pytest.raises(CheckpointError) as excinfo:
            Checkpoint.from_bytes(checkpoint.to_bytes())
        assert excinfo.value.field == 'format_version'

    def test_configuration_must_match_the_tensors(self):
        checkpoint = self.trained(steps=0).checkpoint
        config = checkpoint.run_config
        checkpoint.run_config = dataclasses.replace(config, model=dataclasses.replace(config.model, n_zg=4))
        with pytest.raises(CheckpointError) as excinfo:
            checkpoint.restore()
        assert excinfo.value.field in checkpoint.parameters
