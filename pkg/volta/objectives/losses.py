import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from volta.latent import code_log_likelihood
from volta.objectives.schedule import beta_at
from volta.tensor import Tensor, as_tensor, ops
from volta.types.defaults import Defaults
from volta.types.latent import LatentCodes
from volta.types.lossreport import LossReport, LossWeights
from volta.util.exceptions import ContractError, NumericError

log = logging.getLogger(__name__)

# KL values below this are treated as an upstream error rather than rounding noise
_NEGATIVE_KL_TOLERANCE = -1e-12


def reconstruction_loss(logits, targets, ignore_id=Defaults.pad_id) -> Tensor:
    """Token cross-entropy; padding positions are ignored"""
    return ops.cross_entropy(logits, targets, ignore_id)


def _hinged_mean(kl, floor):
    return ops.mean(ops.clamp_min(kl, floor))


def regularization_loss(kl_gauss, kl_cat, lambda_fb=Defaults.lambda_fb, separate=False) -> Tensor:
    """
    Free-bits hinge: mean of max(λ, KL_i) over Gaussian dimensions and categorical variables.

    With `separate`, the Gaussian and categorical means are taken independently and summed.
    """
    if lambda_fb < 0:
        raise ContractError('regularization_loss(): lambda must be non-negative, got %r' % (lambda_fb,))
    parts = [as_tensor(kl) for kl in (kl_gauss, kl_cat) if kl is not None and as_tensor(kl).size]
    for part in parts:
        if np.any(part.data < _NEGATIVE_KL_TOLERANCE):
            raise ContractError('regularization_loss(): negative KL %r' % float(part.data.min()))
    if not parts:
        return ops.constant(0.0)
    if separate:
        total = _hinged_mean(parts[0], lambda_fb)
        for part in parts[1:]:
            total = ops.add(total, _hinged_mean(part, lambda_fb))
        return total
    joined = parts[0] if len(parts) == 1 else ops.concat(parts, axis=0)
    return _hinged_mean(joined, lambda_fb)


def code_values(codes: LatentCodes):
    """Codes in recovery-head order: each continuous value, then each one-hot row"""
    return [float(v) for v in codes.continuous] + [row for row in codes.discrete]


def vmim_loss(thetas, codes) -> Tensor:
    """Mean over codes of −log Q(c | x)"""
    if isinstance(codes, LatentCodes):
        codes = code_values(codes)
    if len(thetas) != len(codes):
        raise ContractError('vmim_loss(): %d recovery heads for %d codes' % (len(thetas), len(codes)))
    if not codes:
        return ops.constant(0.0)
    nll = [ops.scale(code_log_likelihood(theta, code), -1.0) for theta, code in zip(thetas, codes)]
    return ops.mean(ops.stack(nll))


def _stacked(scores, name):
    if len(scores) == 0:
        raise ContractError('qami_loss(): %s scores are required' % name)
    return ops.stack([as_tensor(s).reshape(()) for s in scores])


def qami_loss(pos_scores, neg_q_scores, neg_a_scores) -> Tensor:
    """
    −( mean log g(q, a) + ½ mean log(1 − g(q̃, a)) + ½ mean log(1 − g(q, ã)) )
    """
    pos = _stacked(pos_scores, 'positive')
    neg_q = _stacked(neg_q_scores, 'negative-question')
    neg_a = _stacked(neg_a_scores, 'negative-answer')
    for scores in (pos, neg_q, neg_a):
        if np.any(scores.data <= 0.0) or np.any(scores.data >= 1.0):
            raise ContractError('qami_loss(): scores must lie strictly inside (0, 1)')
    bound = ops.add(ops.mean(ops.log(pos)),
                    ops.add(ops.scale(ops.mean(ops.log(ops.shift(ops.scale(neg_q, -1.0), 1.0))), 0.5),
                            ops.scale(ops.mean(ops.log(ops.shift(ops.scale(neg_a, -1.0), 1.0))), 0.5)))
    return ops.scale(bound, -1.0)


def qami_loss_from_logits(pos_logits, neg_q_logits, neg_a_logits) -> Tensor:
    """qami_loss on pre-sigmoid scores; log g = log σ(x) and log(1 − g) = log σ(−x)"""
    pos = _stacked(pos_logits, 'positive')
    neg_q = _stacked(neg_q_logits, 'negative-question')
    neg_a = _stacked(neg_a_logits, 'negative-answer')
    bound = ops.add(ops.mean(ops.log_sigmoid(pos)),
                    ops.add(ops.scale(ops.mean(ops.log_sigmoid(ops.scale(neg_q, -1.0))), 0.5),
                            ops.scale(ops.mean(ops.log_sigmoid(ops.scale(neg_a, -1.0))), 0.5)))
    return ops.scale(bound, -1.0)


Part = Union[Tensor, float]


@dataclass
class LossParts:
    ae: Part
    reg: Part = 0.0
    vmim: Part = 0.0
    qami: Part = 0.0
    kl_per_dim: np.ndarray = field(default_factory=lambda: np.zeros(0))


def total_loss(parts: LossParts, weights: LossWeights, step, total_steps):
    """
    L = ae + β(step)·reg + γ·vmim + qami_weight·qami, as a Tensor and as a LossReport.
    """
    values = {}
    for name in ('ae', 'reg', 'vmim', 'qami'):
        value = as_tensor(getattr(parts, name))
        if value.size != 1:
            raise ContractError('total_loss(): %s must be a scalar' % name)
        values[name] = value.item()
        if not math.isfinite(values[name]):
            raise NumericError('total_loss(): %s is %r' % (name, values[name]), term=name)

    beta = beta_at(step, total_steps, weights)
    total = as_tensor(parts.ae).reshape(())
    for name, weight in (('reg', beta), ('vmim', weights.gamma), ('qami', weights.qami_weight)):
        total = ops.add(total, ops.scale(as_tensor(getattr(parts, name)).reshape(()), weight))

    report = LossReport(ae=values['ae'], reg=values['reg'], vmim=values['vmim'], qami=values['qami'],
                        beta_used=beta, gamma=weights.gamma, qami_weight=weights.qami_weight,
                        kl_per_dim=[float(v) for v in np.asarray(parts.kl_per_dim).reshape(-1)], step=step)
    report.total = report.recomputed_total()
    if not math.isfinite(report.total):
        raise NumericError('total_loss(): total is %r' % report.total, term='total')
    return total, report
