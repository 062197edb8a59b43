# -*- coding: utf-8 -*-

'''Adam.'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'AdamState',
        'adam_step',
        'Adam',
        ]

import torch

from . import constants
from .utils import check_positive


class AdamState(object):
    '''Step count and first/second moment estimates, one per parameter.'''

    def __init__(self, params):
        self.step = 0
        self.m = [torch.zeros_like(p) for p in params]
        self.v = [torch.zeros_like(p) for p in params]


def adam_step(
        params,
        grads,
        state,
        lr,
        beta1=constants.ADAM_BETA1,
        beta2=constants.ADAM_BETA2,
        eps=constants.ADAM_EPS,
        ):
    '''One bias-corrected Adam update.

    Returns the updated parameter tensors; ``state`` is advanced in place.
    A ``None`` gradient is treated as zero.
    '''
    check_positive('lr', lr)
    state.step += 1
    t = state.step
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    out = []
    for k, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            g = torch.zeros_like(p)
        state.m[k] = beta1 * state.m[k] + (1.0 - beta1) * g
        state.v[k] = beta2 * state.v[k] + (1.0 - beta2) * g * g
        m_hat = state.m[k] / c1
        v_hat = state.v[k] / c2
        out.append(p - lr * m_hat / (torch.sqrt(v_hat) + eps))
    return out


class Adam(object):
    '''Adam over a fixed list of leaf tensors, updated in place.'''

    def __init__(
            self,
            params,
            lr=1e-4,
            beta1=constants.ADAM_BETA1,
            beta2=constants.ADAM_BETA2,
            eps=constants.ADAM_EPS,
            ):
        check_positive('lr', lr)
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState(self.params)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        grads = [p.grad for p in self.params]
        with torch.no_grad():
            updated = adam_step(
                    [p.detach() for p in self.params],
                    grads,
                    self.state,
                    self.lr,
                    self.beta1,
                    self.beta2,
                    self.eps,
                    )
            for p, new in zip(self.params, updated):
                p.copy_(new)

    def state_dict(self):
        return {
                'step': self.state.step,
                'm': [m.clone() for m in self.state.m],
                'v': [v.clone() for v in self.state.v],
                }

    def load_state_dict(self, state):
        if len(state['m']) != len(self.params) or len(state['v']) != len(self.params):
            raise ValueError('optimizer state does not match the parameters')
        self.state.step = int(state['step'])
        self.state.m = [
                m.to(p.dtype).reshape(p.shape).clone()
                for m, p in zip(state['m'], self.params)
                ]
        self.state.v = [
                v.to(p.dtype).reshape(p.shape).clone()
                for v, p in zip(state['v'], self.params)
                ]


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
