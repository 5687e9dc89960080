import pytest

from volta.types.corpus import SyntheticSpec
from volta.types.lossreport import LossReport, LossWeights
from volta.types.modelconfig import ModelConfig, ModelMode, PriorKind
from volta.types.runconfig import OptimizerKind, OptimizerOptions, RunConfig
from volta.util.exceptions import ConfigError, SpecError


def test_run_config_json():
    config = RunConfig.for_task('qag', seed=3, steps=10, model={'mode': 'encoder-decoder', 'd_model': 16},
                                optimizer=OptimizerOptions(kind='adam', learning_rate=1e-3))
    restored = RunConfig.from_json(config.to_json())

    assert restored == config
    assert restored.model.mode is ModelMode.ENCODER_DECODER
    assert restored.optimizer.kind is OptimizerKind.ADAM
    assert restored.optimizer.betas == (0.9, 0.999)


def test_as_dict_writes_enum_values():
    obj = ModelConfig(prior='standard').as_dict()
    assert obj['prior'] == 'standard'
    assert obj['mode'] == 'decoder-only'


def test_from_dict_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({'d_modle': 16})
    with pytest.raises(SpecError):
        SyntheticSpec.from_dict({'n_sentences': 4})


def test_from_json_rejects_invalid_json():
    with pytest.raises(ConfigError):
        RunConfig.from_json('{"steps": ')
    with pytest.raises(ConfigError):
        RunConfig.from_dict(['steps'])


def test_from_dict_validates_values():
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({'d_model': 10, 'n_heads': 4})
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({'prior': 'learned'})
    with pytest.raises(ConfigError):
        LossWeights.from_dict({'gamma': -1.0})
    with pytest.raises(ConfigError):
        OptimizerOptions.from_dict({'learning_rate': 0.0})


def test_task_presets():
    lm = RunConfig.for_task('lm')
    assert lm.model.prior is PriorKind.STANDARD
    assert lm.model.n_za == 0 and lm.model.n_ca == 0
    assert lm.weights.qami_weight == 0.0

    qag = RunConfig.for_task('qag')
    assert qag.model.prior is PriorKind.CONTEXT
    assert qag.weights.qami_weight == 1.0
    assert qag.synthetic.task == qag.task


def test_steps_from_epochs():
    config = RunConfig(steps=100, epochs=3, batch_size=8)
    assert config.steps_for(20) == 9
    assert RunConfig(steps=100).steps_for(20) == 100


def test_loss_report_round_trip():
    report = LossReport(ae=2.0, reg=1.0, vmim=0.5, qami=0.25, beta_used=0.1, gamma=1.0, qami_weight=1.0,
                        kl_per_dim=[0.5, 1.5], step=4)
    report.total = report.recomputed_total()

    assert LossReport.from_dict(report.as_dict()) == report
    assert report.total == pytest.approx(2.0 + 0.1 + 0.5 + 0.25)
