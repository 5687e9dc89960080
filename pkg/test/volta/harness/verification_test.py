import pytest

from volta.harness.verification import (MODEL_TOLERANCE, OP_TOLERANCE, CheckResult, run_verification,
                                        verification_config, verify_ops)
from volta.types.corpus import Task

from test.volta.utils import BaseTestCase


class TestVerification(BaseTestCase):

    def test_every_operation_passes(self):
        results = verify_ops(seed=0)
        assert len(results) == 27
        assert len({r.name for r in results}) == 27
        failed = [r.line() for r in results if not r.passed]
        assert failed == []
        assert all(r.tolerance == OP_TOLERANCE for r in results)

    def test_ops_under_another_seed(self):
        assert all(r.passed for r in verify_ops(seed=5))

    def test_check_result(self):
        assert CheckResult('exp', 1e-9, 1e-4).passed
        assert not CheckResult('exp', 1e-3, 1e-4).passed
        assert CheckResult('exp', 1e-3, 1e-4).line().endswith('FAIL')
        assert CheckResult('exp', 0.0, 1e-4).line().startswith('exp ')

    def test_verification_config(self):
        config = verification_config(seed=2)
        assert config.task == Task.QAG
        assert config.weights.qami_weight > 0
        assert config.synthetic.seed == 2

    def test_ops_only(self):
        assert len(run_verification(include_model=False)) == 27

    @pytest.mark.slow
    def test_full_model(self):
        results = run_verification(seed=0)
        model_results = results[27:]
        assert [r.name for r in model_results] == ['decoder-only model', 'encoder-decoder model']
        assert all(r.tolerance == MODEL_TOLERANCE for r in model_results)
        assert all(r.passed for r in results)
