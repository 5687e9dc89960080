import numpy as np
import pytest

from volta.harness.optimizer import SGD, Adam, make_optimizer
from volta.model.parameters import ParameterStore
from volta.types.runconfig import OptimizerOptions
from volta.util.exceptions import CheckpointError, ConfigError

from test.volta.utils import BaseTestCase, rng


def store_with(*shapes):
    store = ParameterStore(rng(), 0.0)
    for i, shape in enumerate(shapes):
        store.create('p%d' % i, shape, init='ones')
    return store


class TestOptimizers(BaseTestCase):

    def test_sgd_with_momentum(self):
        store = store_with((1,))
        optimizer = SGD(store, OptimizerOptions(learning_rate=0.1, momentum=0.9))
        for _ in range(2):
            store['p0'].grad = np.array([0.5])
            optimizer.step()
        # v1 = 0.5, v2 = 0.9·0.5 + 0.5
        self.assert_arrays_close(store['p0'].data, [1.0 - 0.05 - 0.095])
        assert optimizer.iterations == 2

    def test_adam_first_step_is_learning_rate_sized(self):
        store = store_with((3,))
        optimizer = Adam(store, OptimizerOptions(kind='adam', learning_rate=0.01))
        store['p0'].grad = np.array([0.5, -2.0, 1e-3])
        optimizer.step()
        self.assert_arrays_close(store['p0'].data, [0.99, 1.01, 0.99], atol=1e-6)

    def test_parameters_without_gradient_are_untouched(self):
        store = store_with((2,), (2,))
        optimizer = make_optimizer(store, OptimizerOptions(learning_rate=1.0))
        store['p0'].grad = np.array([1.0, 1.0])
        optimizer.step()
        self.assert_arrays_equal(store['p0'].data, [0.0, 0.0])
        self.assert_arrays_equal(store['p1'].data, [1.0, 1.0])

    def test_non_finite_reports_parameters_then_state(self):
        store = store_with((2,), (2,))
        optimizer = make_optimizer(store, OptimizerOptions(learning_rate=0.1))
        assert optimizer.non_finite() is None
        optimizer._state['velocity']['p0'][1] = np.inf
        assert optimizer.non_finite() == 'velocity.p0'
        store['p1'].data[0] = np.nan
        assert optimizer.non_finite() == 'p1'

    def test_make_optimizer(self):
        store = store_with((2,))
        assert isinstance(make_optimizer(store, OptimizerOptions(kind='adam')), Adam)
        assert isinstance(make_optimizer(store, OptimizerOptions()), SGD)
        with pytest.raises(ConfigError):
            OptimizerOptions(kind='rmsprop')

    def test_state_restores_the_trajectory(self):
        options = OptimizerOptions(kind='adam', learning_rate=0.01)
        store = store_with((2, 2))
        optimizer = Adam(store, options)
        for step in range(3):
            store['p0'].grad = np.full((2, 2), step + 1.0)
            optimizer.step()
        header, arrays = optimizer.state()
        assert header == {'kind': 'adam', 'iterations': 3}
        assert sorted(arrays) == ['m.p0', 'v.p0']

        copy_store = store_with((2, 2))
        copy_store['p0'].data[...] = store['p0'].data
        restored = Adam(copy_store, options)
        restored.load_state(header, arrays)
        for s in (store, copy_store):
            s['p0'].grad = np.full((2, 2), -1.0)
        optimizer.step()
        restored.step()
        self.assert_arrays_equal(copy_store['p0'].data, store['p0'].data)

    def test_load_state_checks_kind_and_shapes(self):
        store = store_with((2,))
        header, arrays = SGD(store, OptimizerOptions()).state()
        with pytest.raises(CheckpointError) as excinfo:
            Adam(store, OptimizerOptions(kind='adam')).load_state(header, arrays)
        assert excinfo.value.field == 'optimizer.kind'

        with pytest.raises(CheckpointError) as excinfo:
            SGD(store_with((3,)), OptimizerOptions()).load_state(header, arrays)
        assert excinfo.value.field == 'velocity.p0'

        with pytest.raises(CheckpointError) as excinfo:
            SGD(store, OptimizerOptions()).load_state(header, {})
        assert excinfo.value.field == 'velocity.p0'
