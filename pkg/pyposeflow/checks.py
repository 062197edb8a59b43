# -*- coding: utf-8 -*-

'''Property suite run by ``pyposeflow check``.'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'CheckResult',
        'CheckReport',
        'run_checks',
        'flow_jacobian_logdet',
        ]

import collections
import logging
import math

import torch

from .config import CheckConfig, SynthConfig
from .diff import ParamSet, finite_diff_check
from .errors import ValidationError
from .liegroup import exp_so3, log_so3, random_rotation
from .so3density import So3Flow
from .synth import synth_dataset
from .train import nll_loss
from .utils import make_generator

logger = logging.getLogger(__name__)

CheckResult = collections.namedtuple('CheckResult', [
        'name',
        'passed',
        'value',
        'detail',
        ])


class CheckReport(object):
    def __init__(self, results=()):
        self.results = list(results)

    def add(self, name, passed, value, detail=''):
        result = CheckResult(name, bool(passed), float(value), detail)
        self.results.append(result)
        log = logger.info if result.passed else logger.error
        log('%-20s %s  %.3g %s', name, 'ok' if passed else 'FAIL', value, detail)
        return result

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def failures(self):
        return [r for r in self.results if not r.passed]

    def raise_for_failure(self):
        failed = self.failures()
        if failed:
            raise ValidationError('property checks failed: %s' % (
                    ', '.join(r.name for r in failed),
                    ))

    def to_dict(self):
        return {
                'passed': self.passed,
                'results': [r._asdict() for r in self.results],
                }


def flow_jacobian_logdet(flow, z, context=None):
    '''``log|det dv/dz|`` of a 3-d flow from an autograd Jacobian.'''
    z = z.detach().clone().requires_grad_(True)
    v, _ = flow(z, context)
    rows = [
            torch.autograd.grad(v[..., k].sum(), z, retain_graph=True)[0]
            for k in range(v.shape[-1])
            ]
    jac = torch.stack(rows, dim=-2)
    return torch.linalg.slogdet(jac)[1]


def _sample_part(model, rng):
    parts = getattr(model, 'parts', None)
    if parts is not None and isinstance(parts[0], So3Flow):
        part = parts[0]
    else:
        part = So3Flow()
    dim = part.flow.context_dim
    context = torch.randn((1, dim), generator=rng, dtype=torch.float64)
    return part, context


def _check_lie(report, cfg, rng):
    n = cfg.roundtrips
    v = torch.randn((n, 3), generator=rng, dtype=torch.float64)
    angle = (math.pi - 1e-3) * torch.rand((n, 1), generator=rng, dtype=torch.float64)
    v = angle * v / v.norm(dim=-1, keepdim=True)
    err_v = float((log_so3(exp_so3(v)) - v).abs().max())
    rot = random_rotation(rng, (n, ))
    err_r = float((exp_so3(log_so3(rot)) - rot).abs().max())
    worst = max(err_v, err_r)
    report.add('lie_roundtrip', worst < 1e-9, worst, 'max |log exp v - v|, |exp log R - R|')


def _check_flow(report, part, context, cfg, rng):
    flow = part.flow
    n = cfg.jacobian_points
    ctx = context.expand(n, -1)
    z = torch.randn((n, 3), generator=rng, dtype=torch.float64)
    with torch.no_grad():
        v, ld = flow(z, ctx)
        back, ld_inv = flow.inverse(v, ctx)
    err = float((back - z).abs().max())
    err_ld = float((ld + ld_inv).abs().max())
    report.add('flow_inverse', max(err, err_ld) < 1e-8, max(err, err_ld), 'roundtrip z and logdet')

    numeric = flow_jacobian_logdet(flow, z, ctx)
    rel = float(((ld - numeric).abs() / numeric.abs().clamp_min(1.0)).max())
    report.add('flow_jacobian', rel < 1e-5, rel, 'analytic vs autograd log|det J|')


def _check_normalisation(report, part, context, cfg, rng):
    n = cfg.mc_samples
    rot = random_rotation(rng, (n, ))
    with torch.no_grad():
        lp = part.log_prob(rot, context.expand(n, -1))
    mass = float(torch.exp(lp).mean())
    report.add('so3_normalisation', abs(mass - 1.0) < 0.02, mass, 'Haar MC integral')


def _check_support(report, part, context, cfg, rng):
    flow = part.flow
    n = cfg.support_samples
    with torch.no_grad():
        v, _ = flow.sample(context.expand(n, -1), rng)
        top = float(v.norm(dim=-1).max())
        outside = torch.tensor([[0.0, 0.0, 1.01 * flow.radius]], dtype=torch.float64)
        lp_out = float(flow.log_prob(outside, context)[0])
    passed = top < flow.radius and lp_out == -math.inf
    report.add('compact_support', passed, top, 'max sample norm, radius %.4f' % (flow.radius, ))


def _check_gradient(report, model, cfg, seed):
    data = synth_dataset(2, SynthConfig(), make_generator(seed))

    def loss_fn(params):
        return nll_loss(model, data, sample_shape=False)

    params = ParamSet.from_module(model)
    grad = finite_diff_check(loss_fn, params, cfg.fd_coords, cfg.fd_step, cfg.fd_tol, seed)
    report.add('nll_gradient', grad.passed, grad.max_error, 'worst at %s[%d]' % grad.worst)


def run_checks(model, cfg=None, seed=0):
    '''Run the property suite against ``model``.'''
    cfg = cfg if cfg is not None else CheckConfig()
    rng = make_generator(seed)
    report = CheckReport()
    _check_lie(report, cfg, rng)
    part, context = _sample_part(model, rng)
    _check_flow(report, part, context, cfg, rng)
    _check_normalisation(report, part, context, cfg, rng)
    _check_support(report, part, context, cfg, rng)
    _check_gradient(report, model, cfg, seed)
    logger.info('%d/%d checks passed', len(report.results) - len(report.failures()), len(report.results))
    return report


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
