import dataclasses
import json
import logging
from enum import Enum

from volta.util.exceptions import ConfigError

log = logging.getLogger(__name__)


class DictMixin:
    """
    JSON round trip for configuration dataclasses.

    Unknown keys are rejected so a misspelt field in a config file fails loudly; enum fields
    are written as their values and nested dataclasses recurse.
    """

    error_class = ConfigError

    def as_dict(self):
        result = {}
        for field in dataclasses.fields(self):
            value = getattr(self, field.name)
            if isinstance(value, DictMixin):
                value = value.as_dict()
            elif isinstance(value, Enum):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            result[field.name] = value
        return result

    @classmethod
    def from_dict(cls, obj):
        if obj is None:
            obj = {}
        if not isinstance(obj, dict):
            raise cls.error_class('%s.from_dict(): expected an object, got %s'
                                  % (cls.__name__, type(obj).__name__))
        names = {field.name for field in dataclasses.fields(cls)}
        unknown = sorted(set(obj) - names)
        if unknown:
            raise cls.error_class('%s.from_dict(): unknown field(s) %s' % (cls.__name__, ', '.join(unknown)))
        return cls(**cls._convert_fields(dict(obj)))

    @classmethod
    def _convert_fields(cls, obj):
        return obj

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, data):
        if isinstance(data, (bytes, bytearray)):
            data = data.decode()
        try:
            obj = json.loads(data)
        except json.JSONDecodeError as e:
            raise cls.error_class('%s.from_json(): invalid JSON: %s' % (cls.__name__, e), cause=e)
        return cls.from_dict(obj)
