# -*- coding: utf-8 -*-

'''Gradients of losses over named parameters, with a finite-difference check.

Gradients come from torch autograd. :func:`finite_diff_check` compares
them with central differences on randomly chosen coordinates.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'ParamSet',
        'GradReport',
        'gradient',
        'finite_diff_check',
        'relative_error',
        ]

import collections
import logging

import numpy as np
import torch

from .errors import NumericalError
from .utils import check_positive

logger = logging.getLogger(__name__)


class ParamSet(collections.OrderedDict):
    '''Named float64 tensors.

    Built from a module, the entries are the module's own parameters, so a
    loss closing over the module sees in-place perturbations.
    '''

    @classmethod
    def from_module(cls, module):
        return cls(
                (name, p)
                for name, p in module.named_parameters()
                if p.requires_grad
                )

    @property
    def count(self):
        return sum(int(t.numel()) for t in self.values())

    def flat(self):
        return torch.cat([t.detach().reshape(-1) for t in self.values()])

    def coordinate(self, index):
        '''Map a flat index to ``(name, local flat index)``.'''
        for name, t in self.items():
            n = int(t.numel())
            if index < n:
                return name, index
            index -= n
        raise IndexError('coordinate out of range')


GradReport = collections.namedtuple('GradReport', [
        'errors',       # {name: max relative error over checked coords}
        'worst',        # (name, local index) of the largest error
        'max_error',
        'tol',
        'passed',
        'num_coords',
        ])


def relative_error(a, f):
    return abs(a - f) / max(abs(a), abs(f), 1e-8)


def _evaluate(loss_fn, params):
    loss = loss_fn(params)
    if not bool(torch.isfinite(loss).all()):
        raise NumericalError('non-finite loss %r' % (float(loss), ), where='loss')
    return loss


def gradient(loss_fn, params):
    '''``{name: d loss / d p}`` for every entry of ``params``.'''
    tensors = list(params.values())
    for t in tensors:
        if not t.requires_grad:
            t.requires_grad_(True)
    loss = _evaluate(loss_fn, params)
    grads = torch.autograd.grad(loss, tensors, allow_unused=True)
    out = ParamSet()
    for (name, t), g in zip(params.items(), grads):
        g = torch.zeros_like(t) if g is None else g.detach()
        if not bool(torch.isfinite(g).all()):
            raise NumericalError('non-finite gradient', where=name)
        out[name] = g
    return out


def finite_diff_check(
        loss_fn,
        params,
        n_coords=100,
        h=1e-5,
        tol=1e-4,
        seed=0,
        ):
    '''Compare autograd with ``(L(p + h e_i) - L(p - h e_i)) / 2h``.

    ``n_coords`` coordinates are drawn without replacement (all of them
    when there are fewer). ``loss_fn`` must be deterministic.
    '''
    check_positive('h', h)
    grads = gradient(loss_fn, params)
    total = params.count
    rng = np.random.RandomState(seed)
    picks = rng.choice(total, size=min(n_coords, total), replace=False)

    errors = collections.OrderedDict()
    worst, max_error = None, 0.0
    for index in sorted(int(i) for i in picks):
        name, local = params.coordinate(index)
        flat = params[name].data.view(-1)
        original = float(flat[local])
        with torch.no_grad():
            try:
                flat[local] = original + h
                up = float(_evaluate(loss_fn, params))
                flat[local] = original - h
                down = float(_evaluate(loss_fn, params))
            finally:
                flat[local] = original
        numeric = (up - down) / (2.0 * h)
        analytic = float(grads[name].reshape(-1)[local])
        err = relative_error(analytic, numeric)
        errors[name] = max(errors.get(name, 0.0), err)
        if worst is None or err > max_error:
            worst, max_error = (name, local), err

    logger.debug(
            'finite-difference check on %d coords: max rel err %.3g at %r',
            len(picks),
            max_error,
            worst,
            )
    return GradReport(
            errors,
            worst,
            max_error,
            tol,
            max_error < tol,
            len(picks),
            )


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
