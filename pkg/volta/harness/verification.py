"""
Finite-difference verification of every differentiable operation and of the composed training loss.
"""
import dataclasses
import logging
from dataclasses import dataclass

import numpy as np

from volta.harness.trainer import Trainer
from volta.latent import ContinuousTheta, DiscreteTheta, code_log_likelihood, kl_categorical, kl_gaussian
from volta.model.layers import attention
from volta.tensor import Tensor, grad_check_parameters, ops
from volta.types.defaults import Defaults
from volta.types.latent import CategoricalPosterior, GaussianPosterior
from volta.types.modelconfig import ModelMode
from volta.types.runconfig import RunConfig
from volta.util.helper import make_rng

log = logging.getLogger(__name__)

OP_TOLERANCE = 1e-4
MODEL_TOLERANCE = 1e-3


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self):
        return self.error < self.tolerance

    def line(self):
        return '%-18s %.3e  %s' % (self.name, self.error, 'ok' if self.passed else 'FAIL')


def _projected(out, weights):
    """Scalar w·out so that non-scalar outputs get a generic upstream gradient"""
    return ops.sum(ops.multiply(out, Tensor(weights.reshape(out.shape))))


def _leaf(rng, *shape, low=None):
    data = rng.standard_normal(shape)
    if low is not None:
        data = low + np.abs(data)
    return Tensor(data, requires_grad=True)


def _op_cases(rng):
    a, b = _leaf(rng, 3, 4), _leaf(rng, 3, 4)
    bias = _leaf(rng, 4)
    m1, m2 = _leaf(rng, 3, 5), _leaf(rng, 5, 2)
    positive = _leaf(rng, 3, 4, low=0.5)
    logits = _leaf(rng, 4, 6)
    table = _leaf(rng, 6, 3)
    gain, shift = _leaf(rng, 4), _leaf(rng, 4)
    # entries kept away from the hinge at 0.1
    hinge = Tensor(np.where(rng.random((3, 4)) < 0.5, -1.0, 1.0) * (0.2 + rng.random((3, 4))) + 0.1,
                   requires_grad=True)
    q_mu, q_ls, p_mu, p_ls = (_leaf(rng, 5) for _ in range(4))
    q_logits, p_logits = _leaf(rng, 3, 4), _leaf(rng, 3, 4)
    queries, keys, values = _leaf(rng, 3, 4), _leaf(rng, 2, 4), _leaf(rng, 2, 4)
    theta_mean, theta_logits = _leaf(rng), _leaf(rng, 5)

    def w(*shape):
        return rng.standard_normal(shape)

    w34, w32, w43, w46, w4, w5, w3, w6_3 = w(3, 4), w(3, 2), w(4, 3), w(4, 6), w(4), w(5), w(3), w(6, 3)
    w_concat, w_slice, w_gather = w(6, 4), w(2, 2), w(5, 3)
    w_attention = w(3, 4)

    return [
        ('add', lambda: _projected(ops.add(a, bias), w34), [a, bias]),
        ('subtract', lambda: _projected(ops.subtract(a, b), w34), [a, b]),
        ('multiply', lambda: _projected(ops.multiply(a, b), w34), [a, b]),
        ('scale', lambda: _projected(ops.scale(a, -1.7), w34), [a]),
        ('shift', lambda: _projected(ops.shift(a, 0.3), w34), [a]),
        ('matmul', lambda: _projected(ops.matmul(m1, m2), w32), [m1, m2]),
        ('transpose', lambda: _projected(ops.transpose(a), w43), [a]),
        ('reshape', lambda: _projected(ops.reshape(a, (4, 3)), w43), [a]),
        ('concat', lambda: _projected(ops.concat([a, b], axis=0), w_concat), [a, b]),
        ('slice', lambda: _projected(a[1:, 1:3], w_slice), [a]),
        ('gather', lambda: _projected(ops.gather(table, [0, 2, 2, 5, 1]), w_gather), [table]),
        ('sum', lambda: _projected(ops.sum(a, axis=0), w4), [a]),
        ('mean', lambda: _projected(ops.mean(a, axis=1), w3), [a]),
        ('exp', lambda: _projected(ops.exp(a), w34), [a]),
        ('log', lambda: _projected(ops.log(positive), w34), [positive]),
        ('sigmoid', lambda: _projected(ops.sigmoid(a), w34), [a]),
        ('log_sigmoid', lambda: _projected(ops.log_sigmoid(a), w34), [a]),
        ('gelu', lambda: _projected(ops.gelu(a), w34), [a]),
        ('clamp_min', lambda: _projected(ops.clamp_min(hinge, 0.1), w34), [hinge]),
        ('softmax', lambda: _projected(ops.softmax(logits), w46), [logits]),
        ('log_softmax', lambda: _projected(ops.log_softmax(table), w6_3), [table]),
        ('cross_entropy', lambda: ops.cross_entropy(logits, [0, 5, 3, 1], ignore_id=None), [logits]),
        ('layer_norm', lambda: _projected(ops.layer_norm(a, gain, shift), w34), [a, gain, shift]),
        ('kl_gaussian', lambda: _projected(kl_gaussian(GaussianPosterior(q_mu, q_ls),
                                                       GaussianPosterior(p_mu, p_ls)), w5),
         [q_mu, q_ls, p_mu, p_ls]),
        ('kl_categorical', lambda: _projected(kl_categorical(CategoricalPosterior(q_logits),
                                                             CategoricalPosterior(p_logits)), w3),
         [q_logits, p_logits]),
        ('attention', lambda: _projected(attention(queries, keys, values, 2), w_attention),
         [queries, keys, values]),
        ('code_likelihood', lambda: ops.add(code_log_likelihood(ContinuousTheta(theta_mean), 0.4),
                                            code_log_likelihood(DiscreteTheta(theta_logits), np.eye(5)[3])),
         [theta_mean, theta_logits]),
    ]


def verify_ops(seed=0, eps=Defaults.grad_check_eps):
    results = []
    for name, f, leaves in _op_cases(make_rng(seed, 9)):
        results.append(CheckResult(name, grad_check_parameters(f, leaves, eps), OP_TOLERANCE))
        log.debug(f'verify_ops(): {results[-1].line()}')
    return results


def verification_config(seed=0):
    """A d_model=8 qag run exercising every loss term"""
    return RunConfig.for_task(
        'qag', seed=seed, batch_size=2, steps=1,
        model={'d_model': 8, 'n_heads': 2, 'n_layers': 1, 'n_zg': 3, 'n_cg': 2, 'n_za': 2, 'n_ca': 1, 'k': 3,
               'n_latent_slots': 2, 'max_seq': 32, 'init_std': 0.3},
        weights={'lambda_fb': 0.0, 'anneal': False},
        synthetic={'n_contexts': 2, 'context_length': 6, 'spans_per_context': 2, 'n_words': 6, 'n_relations': 3,
                   'n_entities': 4, 'seed': seed})


def verify_model(config=None, seed=0, eps=Defaults.grad_check_eps, max_probes=3):
    """grad check of the full training loss with respect to (a sample of) every parameter"""
    trainer = Trainer(config or verification_config(seed))
    batch = trainer.batch(0)
    parameters = list(trainer.model.parameters)
    error = grad_check_parameters(lambda: trainer.loss(0, batch)[0], parameters, eps, max_probes,
                                  make_rng(seed, 10))
    return CheckResult('%s model' % trainer.model.config.mode.value, error, MODEL_TOLERANCE)


def run_verification(seed=0, include_model=True, modes=('decoder-only', 'encoder-decoder')):
    results = verify_ops(seed)
    if include_model:
        for mode in modes:
            config = verification_config(seed)
            config = dataclasses.replace(config, model=dataclasses.replace(config.model, mode=ModelMode(mode)))
            results.append(verify_model(config, seed))
    failed = [r for r in results if not r.passed]
    log.info(f'run_verification(): {len(results) - len(failed)}/{len(results)} checks passed')
    return results
