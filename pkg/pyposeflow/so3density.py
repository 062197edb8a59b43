# -*- coding: utf-8 -*-

'''Densities on SO(3) obtained by pushing R^3 flows through exp.

Densities are with respect to the probability Haar measure. In exponential
coordinates that measure is ``det_jac_exp(v) dv / HAAR_VOLUME`` on the
principal ball, so every log density carries ``+ log(HAAR_VOLUME)``.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'So3Flow',
        'so3_log_prob',
        'pushforward_log_prob',
        'so3_sample',
        ]

import math

import torch
from torch import nn

from . import constants
from .flow import ConditionalFlow
from .liegroup import exp_so3, log_so3, log_det_jac_exp, preimages
from .utils import check_radius


class So3Flow(nn.Module):
    '''Conditional flow density over one body part's rotation.'''

    def __init__(
            self,
            context_dim=constants.CONTEXT_DIM,
            radius=constants.SUPPORT_RADIUS,
            **flow_kwargs
            ):
        super(So3Flow, self).__init__()
        check_radius(radius)
        self.flow = ConditionalFlow(
                dim=3,
                context_dim=context_dim,
                radius=radius,
                **flow_kwargs
                )

    @property
    def radius(self):
        return self.flow.radius

    def log_prob(self, rot, context=None):
        return so3_log_prob(rot, context, self)

    def sample(self, context=None, rng=None, shape=None):
        return so3_sample(context, self, rng, shape)

    def point(self, context=None, shape=None):
        return exp_so3(self.flow.point(context, shape))


def pushforward_log_prob(rot, log_prob_fn, context=None):
    '''Log density on SO(3) of ``exp_*`` applied to a density on R^3.

    ``log_prob_fn(v, context)`` is evaluated on the three pre-images
    ``(theta + 2 pi k) u``, ``k`` in ``{-1, 0, 1}``; together they cover
    every point of any density supported within radius ``3 pi``.
    '''
    v = log_so3(rot)
    vectors, valid = preimages(v)
    if context is not None:
        context = context[..., None, :].expand(
                vectors.shape[:-1] + context.shape[-1:]
                )
    terms = log_prob_fn(vectors, context) - log_det_jac_exp(vectors)
    terms = torch.where(valid, terms, torch.full_like(terms, -math.inf))
    return constants.LOG_HAAR_VOLUME + torch.logsumexp(terms, dim=-1)


def so3_log_prob(rot, context, model):
    '''``log p(R | c)`` summing the flow density over the exp pre-images.'''
    return pushforward_log_prob(rot, model.flow.log_prob, context)


def so3_sample(context, model, rng=None, shape=None):
    '''Draw ``R = exp(v)`` with ``v ~ p(v | c)``.

    Returns ``(R, log p(R | c), v)``; the log density is the folded SO(3)
    density, not the R^3 density of ``v``.
    '''
    v, _ = model.flow.sample(context, rng, shape)
    rot = exp_so3(v)
    return rot, so3_log_prob(rot, context, model), v


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
