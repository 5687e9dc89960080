import logging

import numpy as np

from volta.tensor.record import backward
from volta.tensor.tensor import Tensor, no_grad
from volta.types.defaults import Defaults
from volta.util.exceptions import ContractError, VerificationError

log = logging.getLogger(__name__)


def _evaluate(f, *args):
    with no_grad():
        out = f(*args)
    if not isinstance(out, Tensor) or out.size != 1:
        raise ContractError('grad_check(): function must return a scalar Tensor')
    return out.item()


def _relative_error(analytic, numeric):
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))


def grad_check(f, x: Tensor, eps=Defaults.grad_check_eps):
    """
    Compare the recorded gradient of a scalar function with central finite differences.

    Parameters
    ----------
    f : callable
        Maps `x` to a scalar Tensor; must be deterministic
    x : Tensor
        Leaf tensor probed element by element; its data is restored afterwards
    eps : float
        Finite-difference step

    Returns
    -------
    float
        max_i |autodiff_i − (f(x+εe_i) − f(x−εe_i))/2ε| / max(1, |autodiff_i|)
    """
    x.requires_grad = True
    reference = _evaluate(f, x)
    if _evaluate(f, x) != reference:
        raise VerificationError('grad_check(): function is not deterministic')

    previous_grad, x.grad = x.grad, None
    out = f(x)
    if out.requires_grad:
        backward(out)
    analytic = np.zeros(x.size) if x.grad is None else x.grad.reshape(-1).copy()
    x.grad = previous_grad

    numeric = np.empty_like(analytic)
    flat = x.data.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + eps
        plus = _evaluate(f, x)
        flat[i] = original - eps
        minus = _evaluate(f, x)
        flat[i] = original
        numeric[i] = (plus - minus) / (2.0 * eps)

    if _evaluate(f, x) != reference:
        raise VerificationError('grad_check(): function changed value across probe evaluations')
    return _relative_error(analytic, numeric)


def grad_check_parameters(f, tensors, eps=Defaults.grad_check_eps, max_probes=None, rng=None):
    """
    grad_check over several leaves at once; `f` takes no arguments and reads the tensors.

    With `max_probes`, at most that many elements per tensor are probed, chosen by `rng`.
    """
    reference = _evaluate(f)
    if _evaluate(f) != reference:
        raise VerificationError('grad_check_parameters(): function is not deterministic')

    saved = [t.grad for t in tensors]
    for t in tensors:
        t.grad = None
    out = f()
    if out.requires_grad:
        backward(out)
    analytic_grads = [np.zeros(t.shape) if t.grad is None else t.grad.copy() for t in tensors]
    for t, grad in zip(tensors, saved):
        t.grad = grad

    worst = 0.0
    for tensor, analytic in zip(tensors, analytic_grads):
        flat = tensor.data.reshape(-1)
        analytic = analytic.reshape(-1)
        probes = np.arange(flat.size)
        if max_probes is not None and flat.size > max_probes:
            probes = np.sort(rng.choice(flat.size, size=max_probes, replace=False))
        numeric = np.empty(len(probes))
        for n, i in enumerate(probes):
            original = flat[i]
            flat[i] = original + eps
            plus = _evaluate(f)
            flat[i] = original - eps
            minus = _evaluate(f)
            flat[i] = original
            numeric[n] = (plus - minus) / (2.0 * eps)
        error = _relative_error(analytic[probes], numeric)
        if error > worst:
            log.debug(f'grad_check_parameters(): {tensor.name or tensor.shape} error={error:.3e}')
            worst = error

    if _evaluate(f) != reference:
        raise VerificationError('grad_check_parameters(): function changed value across probe evaluations')
    return worst
