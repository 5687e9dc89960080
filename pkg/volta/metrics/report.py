import json
from dataclasses import dataclass, field
from typing import Dict


@dataclass
class MetricsReport:
    """Flat metric name → value mapping, rendered as JSON or as an aligned table"""

    values: Dict[str, float] = field(default_factory=dict)

    def __setitem__(self, name, value):
        self.values[name] = float(value)

    def __getitem__(self, name):
        return self.values[name]

    def __contains__(self, name):
        return name in self.values

    def to_json(self):
        return json.dumps(self.values, sort_keys=True, indent=2)

    @staticmethod
    def from_json(data):
        return MetricsReport({k: float(v) for k, v in json.loads(data).items()})

    def table(self):
        if not self.values:
            return ''
        width = max(len(name) for name in self.values)
        lines = ['%-*s  %s' % (width, 'metric', 'value'), '-' * (width + 12)]
        lines.extend('%-*s  %.4f' % (width, name, self.values[name]) for name in sorted(self.values))
        return '\n'.join(lines)
