import inspect

import numpy as np


def is_callable(value):
    return inspect.isfunction(value) or inspect.ismethod(value) or callable(value)


def make_rng(seed, *keys):
    """Independent random stream for (seed, *keys); equal arguments give equal streams"""
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))