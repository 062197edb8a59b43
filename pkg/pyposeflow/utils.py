# -*- coding: utf-8 -*-

'''Internal utilities.'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'check_radius',
        'check_positive',
        'check_variant',
        'check_crop_fraction',
        'check_pair_count',
        'float64',
        'evaluation_mode',
        'mlp',
        'diag_normal_log_prob',
        'make_generator',
        ]

import math

import decorator
import numpy as np
import torch
from torch import nn

SUPPORTED_VARIANTS = frozenset({
        'so3flow',
        'euclidean_flow',
        'euclidean_gaussian',
        'euclidean_mdn',
        'fullbody_gaussian',
        'fullbody_mdn',
        'fullbody_flow',
        })

_LOG_2PI = math.log(2.0 * math.pi)


def check_radius(r):
    if not math.pi < r < 2.0 * math.pi:
        raise ValueError(
                'support radius must lie in (pi, 2*pi); got %r' % (r, )
                )


def check_positive(name, value):
    if not value > 0:
        raise ValueError('%s must be positive; got %r' % (name, value, ))


def check_pair_count(n):
    if n < 2 or n % 2:
        raise ValueError(
                'sample count must be a positive even number; got %r' % (n, )
                )


def check_variant(variant):
    if variant not in SUPPORTED_VARIANTS:
        raise ValueError('unsupported model variant; please use one of %s' % (
                repr(list(sorted(SUPPORTED_VARIANTS))),
                ))


def check_crop_fraction(alpha):
    if not 0.0 < alpha <= 1.0:
        raise ValueError(
                'crop fraction must lie in (0, 1]; got %r' % (alpha, )
                )


def _to_float64(value):
    if isinstance(value, torch.Tensor):
        return value if value.dtype == torch.float64 else value.double()
    if isinstance(value, np.ndarray):
        return torch.from_numpy(np.ascontiguousarray(value, dtype=np.float64))
    return value


@decorator.decorator
def float64(fn, *args, **kwargs):
    '''Coerce tensor and ndarray positional arguments to float64 tensors.'''
    return fn(*[_to_float64(a) for a in args], **kwargs)


@decorator.decorator
def evaluation_mode(fn, model, *args, **kwargs):
    '''Run ``fn`` without autograd, with ``model`` in eval mode.'''
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            return fn(model, *args, **kwargs)
    finally:
        model.train(was_training)


def mlp(sizes, activation=nn.ELU, zero_last=False):
    '''Fully-connected float64 network; ``sizes`` includes input and output.'''
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        if i > 0:
            layers.append(activation())
        layers.append(nn.Linear(fan_in, fan_out))
    net = nn.Sequential(*layers).double()
    if zero_last:
        last = net[-1]
        nn.init.zeros_(last.weight)
        nn.init.zeros_(last.bias)
    return net


def diag_normal_log_prob(x, mean, var):
    '''Log density of a diagonal Gaussian, summed over the last axis.'''
    return -0.5 * (
            _LOG_2PI
            + torch.log(var)
            + (x - mean) ** 2 / var
            ).sum(dim=-1)


def make_generator(seed):
    gen = torch.Generator()
    gen.manual_seed(int(seed))
    return gen


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
