from volta.types.lossreport import LossWeights
from volta.util.exceptions import ContractError


def beta_at(step, total_steps, weights: LossWeights):
    """
    KL weight at an optimizer step: linear from 0 to beta_max over the first
    warmup_fraction·total_steps steps, constant afterwards. Without annealing it is always
    beta_max.
    """
    if total_steps < 0 or not 0 <= step <= total_steps:
        raise ContractError('beta_at(): step %r outside [0, %r]' % (step, total_steps))
    if not weights.anneal:
        return weights.beta_max
    warmup = weights.warmup_fraction * total_steps
    if warmup <= 0:
        return weights.beta_max
    return weights.beta_max * min(1.0, step / warmup)
