import unittest

import numpy as np

from volta.model import VoltaModel
from volta.types.modelconfig import ModelConfig, ModelMode
from volta.types.runconfig import RunConfig
from volta.util.helper import make_rng

MODES = (ModelMode.DECODER_ONLY, ModelMode.ENCODER_DECODER)

# first id above the reserved tokens
FIRST_WORD_ID = 5

TINY_CORPORA = {
    'lm': {'n_contexts': 6, 'n_words': 6},
    'dialog': {'n_contexts': 4, 'n_words': 6},
    'qag': {'n_contexts': 3, 'context_length': 6, 'spans_per_context': 2, 'n_words': 6, 'n_relations': 3,
            'n_entities': 4},
}


def tiny_model_config(mode=ModelMode.DECODER_ONLY, **overrides):
    values = dict(mode=mode, vocab_size=20, d_model=8, n_heads=2, n_layers=1, max_seq=32, n_zg=3, n_cg=2, n_za=2,
                  n_ca=1, k=3, n_latent_slots=2, init_std=0.3)
    values.update(overrides)
    return ModelConfig(**values)


def tiny_model(mode=ModelMode.DECODER_ONLY, seed=0, **overrides):
    return VoltaModel(tiny_model_config(mode, **overrides), seed=seed)


def tiny_run_config(task='qag', mode=ModelMode.DECODER_ONLY, **overrides):
    """A d_model=8 run over a handful of synthetic examples"""
    model = {'mode': mode, 'd_model': 8, 'n_heads': 2, 'n_layers': 1, 'max_seq': 40, 'n_zg': 3, 'n_cg': 2,
             'n_latent_slots': 2, 'init_std': 0.3}
    if task == 'qag':
        model.update(n_za=2, n_ca=1, k=3)
    model.update(overrides.pop('model', {}))
    synthetic = dict(TINY_CORPORA[task])
    synthetic.update(overrides.pop('synthetic', {}))
    overrides.setdefault('steps', 2)
    overrides.setdefault('batch_size', 2)
    return RunConfig.for_task(task, model=model, synthetic=synthetic, **overrides)


def context_ids(length=5, offset=0):
    return [FIRST_WORD_ID + (offset + i) % 10 for i in range(length)]


def rng(*keys):
    return make_rng(1234, *keys)


class BaseTestCase(unittest.TestCase):

    def assert_arrays_equal(self, a, b):
        np.testing.assert_array_equal(np.asarray(a), np.asarray(b))

    def assert_arrays_close(self, a, b, atol=1e-10):
        np.testing.assert_allclose(np.asarray(a), np.asarray(b), rtol=0, atol=atol)


class VaryByModeTestsMetaclass(type):
    """
    Metaclass to run tests against both model modes.
    Usage:
        * set this as metaclass of the TestCase class
        * create the following method:
        def per_mode_setup(self, mode):
            # build whatever the test needs for this ModelMode
        * every test now runs once per mode, per_mode_setup being called first
        * exclude tests with the @dont_vary_mode decorator
    """

    def __new__(cls, clsname, bases, dct):
        for key, value in tuple(dct.items()):
            if key.startswith('test') and not getattr(value, 'dont_vary_mode', False):
                for mode in MODES:
                    wrapper = cls.wrap_as(mode, key, value)
                    dct[wrapper.__name__] = wrapper
                del dct[key]

        return super().__new__(cls, clsname, bases, dct)

    @staticmethod
    def wrap_as(mode, old_name, old_func):
        def wrapper(self):
            if hasattr(self, 'per_mode_setup'):
                self.per_mode_setup(mode)
            old_func(self)

        wrapper.__name__ = '%s_%s' % (old_name, mode.value.replace('-', '_'))
        return wrapper


def dont_vary_mode(func):
    func.dont_vary_mode = True
    return func
