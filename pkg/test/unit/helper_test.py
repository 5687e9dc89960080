import numpy as np

from volta.util.helper import is_callable, make_rng


def test_make_rng_is_reproducible():
    a = make_rng(7, 2, 3).standard_normal(5)
    b = make_rng(7, 2, 3).standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_make_rng_streams_are_independent():
    base = make_rng(7).standard_normal(5)
    assert not np.array_equal(base, make_rng(7, 1).standard_normal(5))
    assert not np.array_equal(make_rng(7, 1).standard_normal(5), make_rng(7, 2).standard_normal(5))
    assert not np.array_equal(base, make_rng(8).standard_normal(5))


def test_is_callable():
    class Listener:
        def __call__(self):
            pass

        def method(self):
            pass

    assert is_callable(lambda: None)
    assert is_callable(Listener())
    assert is_callable(Listener().method)
    assert not is_callable('step')
