"""
Checkpoint files.

Layout: an 8-byte little-endian header length, a UTF-8 JSON header with sorted keys, then every
tensor as contiguous little-endian float64 in header order. Offsets in the header count float64
elements from the start of the payload.
"""
import json
import logging
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from volta.harness.tokenizer import Tokenizer
from volta.model import VoltaModel
from volta.types.defaults import Defaults
from volta.types.runconfig import RunConfig
from volta.util.exceptions import CheckpointError, ConfigError

log = logging.getLogger(__name__)

_HEADER_LENGTH = struct.Struct('<Q')
_FLOAT = np.dtype('<f8')


@dataclass
class Checkpoint:
    run_config: RunConfig
    vocabulary: List[str]
    parameters: Dict[str, np.ndarray]
    optimizer: dict = field(default_factory=dict)
    optimizer_state: Dict[str, np.ndarray] = field(default_factory=OrderedDict)
    step: int = 0
    version: int = Defaults.checkpoint_format_version

    @staticmethod
    def capture(run_config, tokenizer, model, optimizer=None, step=0):
        optimizer_header, optimizer_state = optimizer.state() if optimizer is not None else ({}, OrderedDict())
        return Checkpoint(run_config, tokenizer.vocabulary, model.parameters.state(), optimizer_header,
                          optimizer_state, step)

    def restore(self, optimizer=None):
        """Model and tokenizer rebuilt from the snapshot; parameter shapes are checked against the config"""
        model = VoltaModel(self.run_config.model, seed=self.run_config.seed)
        model.parameters.load_state(self.parameters)
        if optimizer is not None:
            optimizer.load_state(self.optimizer, self.optimizer_state)
        return model, Tokenizer(self.vocabulary)

    def _directory(self):
        entries, arrays, offset = [], [], 0
        for section, tensors in (('parameters', self.parameters), ('optimizer_state', self.optimizer_state)):
            for name, value in tensors.items():
                value = np.asarray(value, dtype=np.float64)
                entries.append({'section': section, 'name': name, 'shape': list(value.shape), 'offset': offset})
                arrays.append(value)
                offset += value.size
        return entries, arrays, offset

    def to_bytes(self):
        entries, arrays, _ = self._directory()
        header = {
            'format_version': self.version,
            'run_config': self.run_config.as_dict(),
            'vocabulary': list(self.vocabulary),
            'tensors': entries,
            'optimizer': self.optimizer,
            'step': self.step,
        }
        encoded = json.dumps(header, sort_keys=True).encode('utf-8')
        payload = b''.join(np.ascontiguousarray(a, dtype=_FLOAT).tobytes() for a in arrays)
        return _HEADER_LENGTH.pack(len(encoded)) + encoded + payload

    @staticmethod
    def from_bytes(data):
        if len(data) < _HEADER_LENGTH.size:
            raise CheckpointError('truncated header length', field='header')
        (length,) = _HEADER_LENGTH.unpack_from(data)
        if len(data) < _HEADER_LENGTH.size + length:
            raise CheckpointError('truncated header: %d bytes declared' % length, field='header')
        try:
            header = json.loads(data[_HEADER_LENGTH.size:_HEADER_LENGTH.size + length].decode('utf-8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError('unreadable header: %s' % e, field='header', cause=e)

        version = header.get('format_version')
        if version != Defaults.checkpoint_format_version:
            raise CheckpointError('format_version %r, expected %d' % (version, Defaults.checkpoint_format_version),
                                  field='format_version')
        try:
            run_config = RunConfig.from_dict(header['run_config'])
        except (KeyError, ConfigError) as e:
            raise CheckpointError('invalid run_config: %s' % e, field='run_config', cause=e)

        payload = data[_HEADER_LENGTH.size + length:]
        entries = header.get('tensors', [])
        expected = sum(int(np.prod(e['shape'], dtype=np.int64)) for e in entries) * _FLOAT.itemsize
        if len(payload) != expected:
            raise CheckpointError('truncated payload: %d bytes, expected %d' % (len(payload), expected),
                                  field='payload')
        values = np.frombuffer(payload, dtype=_FLOAT)
        sections = {'parameters': OrderedDict(), 'optimizer_state': OrderedDict()}
        for entry in entries:
            shape = tuple(entry['shape'])
            size = int(np.prod(shape, dtype=np.int64))
            start = entry['offset']
            array = values[start:start + size].reshape(shape).astype(np.float64)
            sections[entry['section']][entry['name']] = array
        return Checkpoint(run_config, header.get('vocabulary', []), sections['parameters'],
                          header.get('optimizer', {}), sections['optimizer_state'], header.get('step', 0), version)


def save_checkpoint(checkpoint: Checkpoint, path):
    data = checkpoint.to_bytes()
    with open(path, 'wb') as f:
        f.write(data)
    log.debug(f'save_checkpoint(): {len(data)} bytes at step {checkpoint.step} to {path}')
    return path


def load_checkpoint(path) -> Checkpoint:
    with open(path, 'rb') as f:
        data = f.read()
    return Checkpoint.from_bytes(data)
