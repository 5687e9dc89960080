import functools
import logging


log = logging.getLogger(__name__)


class VoltaException(Exception):
    code = 50000

    def __init__(self, message, code=None, cause=None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.cause = cause

    def __str__(self):
        str = '%s %s' % (self.code, self.message)
        if self.cause is not None:
            str += ' (cause: %s)' % self.cause
        return str

    def one_line(self):
        """Single machine-parsable line used by the command line surface"""
        message = ' '.join(str(self.message).split())
        return 'error %d %s: %s' % (self.code, type(self).__name__, message)

    @staticmethod
    def from_exception(e):
        if isinstance(e, VoltaException):
            return e
        return VoltaException("Unexpected exception: %s" % e, 50000, cause=e)


def catch_all(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except VoltaException:
            raise
        except Exception as e:
            log.debug(f'catch_all(): {func.__name__} raised {e!r}', exc_info=True)
            raise VoltaException.from_exception(e)

    return wrapper


class DimensionError(VoltaException):
    code = 40001


class ContractError(VoltaException):
    code = 40002


class DegenerateInputError(VoltaException):
    code = 40003


class TokenIndexError(VoltaException):
    code = 40004


class InfiniteDivergenceError(VoltaException):
    code = 40005


class NumericError(VoltaException):
    code = 40006

    def __init__(self, message, term=None, code=None, cause=None):
        super().__init__(message, code, cause)
        self.term = term


class LengthError(VoltaException):
    code = 40007


class ModeError(VoltaException):
    code = 40008


class VocabularyError(VoltaException):
    code = 40009


class SpecError(VoltaException):
    code = 40010


class ConfigError(VoltaException):
    code = 40011


class CheckpointError(VoltaException):
    code = 40012

    def __init__(self, message, field=None, code=None, cause=None):
        super().__init__(message, code, cause)
        self.field = field


class VerificationError(VoltaException):
    code = 40013


class DivergenceError(VoltaException):
    code = 40014

    def __init__(self, message, step=None, last_good_checkpoint=None, code=None, cause=None):
        super().__init__(message, code, cause)
        self.step = step
        self.last_good_checkpoint = last_good_checkpoint


class UsageError(VoltaException):
    code = 40015
