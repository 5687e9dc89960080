import pytest

from volta.util.exceptions import (CheckpointError, DimensionError, DivergenceError, NumericError, UsageError,
                                   VoltaException, catch_all)


def test_str_includes_code_and_cause():
    cause = ValueError('bad value')
    e = VoltaException('something failed', cause=cause)
    assert str(e) == '50000 something failed (cause: bad value)'


def test_subclass_codes_are_distinct():
    assert DimensionError('x').code == 40001
    assert UsageError('x').code == 40015
    assert VoltaException('x', code=40100).code == 40100


def test_one_line_collapses_whitespace():
    e = DimensionError('shapes (2, 3)\n   and (3, 2)')
    assert e.one_line() == 'error 40001 DimensionError: shapes (2, 3) and (3, 2)'
    assert '\n' not in e.one_line()


def test_from_exception_wraps_foreign_errors():
    original = KeyError('missing')
    wrapped = VoltaException.from_exception(original)
    assert wrapped.code == 50000
    assert wrapped.cause is original

    own = NumericError('nan', term='ae')
    assert VoltaException.from_exception(own) is own


def test_catch_all_converts_unexpected_exceptions():
    @catch_all
    def broken():
        raise ZeroDivisionError('division by zero')

    with pytest.raises(VoltaException) as excinfo:
        broken()
    assert isinstance(excinfo.value.cause, ZeroDivisionError)


def test_catch_all_keeps_volta_exceptions():
    @catch_all
    def failing():
        raise UsageError('bad flag')

    with pytest.raises(UsageError):
        failing()


def test_error_attributes():
    assert CheckpointError('truncated', field='payload').field == 'payload'
    e = DivergenceError('diverged', step=3, last_good_checkpoint='run/last_good.ckpt')
    assert e.step == 3
    assert e.last_good_checkpoint == 'run/last_good.ckpt'
    assert NumericError('inf', term='reg').term == 'reg'
