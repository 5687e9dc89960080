import logging

import msgpack

from volta.types.lossreport import LossReport

log = logging.getLogger(__name__)


class LossStreamWriter:
    """Appends one msgpack map per LossReport"""

    def __init__(self, path):
        self.path = path
        self.__file = open(path, 'wb')

    def write(self, report: LossReport):
        self.__file.write(msgpack.packb(report.as_dict(), use_bin_type=True))

    def close(self):
        if not self.__file.closed:
            self.__file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_loss_stream(path):
    with open(path, 'rb') as f:
        unpacker = msgpack.Unpacker(f, raw=False)
        return [LossReport.from_dict(record) for record in unpacker]
