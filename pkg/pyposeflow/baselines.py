# -*- coding: utf-8 -*-

'''Euclidean baseline densities.

These model axis-angle vectors directly in R^D, with no exponential-map
correction and no sum over equivalent angles. They come in two flavours:

* per-part R^3 densities, wrapped by :class:`EuclideanPart` so they slot
  into the ancestor-conditioned model in place of an SO(3) flow;
* full-body 69-d densities over the concatenated part vectors, wrapped by
  :class:`FullBodyModel`.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'MdnParams',
        'mdn_params',
        'mdn_log_prob',
        'mdn_sample',
        'GaussianDensity',
        'MixtureDensity',
        'EuclideanPart',
        'FullBodyDensity',
        'FullBodyModel',
        'perpart_euclidean_log_prob',
        'fullbody_log_prob',
        'fullbody_sample',
        ]

import collections
import logging

import torch
from torch import nn
import torch.nn.functional as F

from . import constants
from .base import PoseModel
from .flow import ConditionalFlow
from .liegroup import exp_so3, log_so3
from .utils import diag_normal_log_prob, mlp

logger = logging.getLogger(__name__)

FULLBODY_KINDS = ('gaussian', 'mdn', 'flow', )


class MdnParams(collections.namedtuple('MdnParams', [
        'log_weights',  # (..., K)
        'means',        # (..., K, D)
        'variances',    # (..., K, D)
        ])):
    __slots__ = ()

    @property
    def weights(self):
        return torch.exp(self.log_weights)


def mdn_params(raw, num_components, dim):
    '''Split ``(..., K + 2 K D)`` raw outputs into mixture parameters.'''
    k = num_components
    logits = raw[..., :k]
    rest = raw[..., k:].reshape(raw.shape[:-1] + (k, 2, dim))
    return MdnParams(
            F.log_softmax(logits, dim=-1),
            rest[..., 0, :],
            torch.exp(rest[..., 1, :]),
            )


def mdn_log_prob(x, params):
    comp = diag_normal_log_prob(x[..., None, :], params.means, params.variances)
    return torch.logsumexp(params.log_weights + comp, dim=-1)


def mdn_sample(params, rng=None):
    k = params.log_weights.shape[-1]
    flat = params.weights.reshape(-1, k)
    idx = torch.multinomial(flat, 1, generator=rng).reshape(
            params.log_weights.shape[:-1] + (1, )
            )
    gather = idx[..., None].expand(idx.shape + params.means.shape[-1:])
    mean = params.means.gather(-2, gather).squeeze(-2)
    var = params.variances.gather(-2, gather).squeeze(-2)
    eps = torch.randn(mean.shape, generator=rng, dtype=mean.dtype)
    return mean + torch.sqrt(var) * eps


class GaussianDensity(nn.Module):
    '''Context-conditioned diagonal Gaussian on R^dim.'''

    def __init__(self, dim, context_dim=constants.CONTEXT_DIM):
        super(GaussianDensity, self).__init__()
        self.dim = dim
        self.net = mlp([context_dim, 2 * dim], zero_last=True)

    def params(self, context):
        out = self.net(context)
        return out[..., :self.dim], torch.exp(out[..., self.dim:])

    def log_prob(self, x, context):
        mean, var = self.params(context)
        return diag_normal_log_prob(x, mean, var)

    def sample(self, context, rng=None, shape=None):
        mean, var = self.params(context)
        eps = torch.randn(mean.shape, generator=rng, dtype=mean.dtype)
        x = mean + torch.sqrt(var) * eps
        return x, diag_normal_log_prob(x, mean, var)

    def point(self, context, shape=None):
        return self.params(context)[0]


class MixtureDensity(nn.Module):
    '''Context-conditioned mixture of diagonal Gaussians on R^dim.'''

    def __init__(
            self,
            dim,
            context_dim=constants.CONTEXT_DIM,
            num_components=constants.MDN_COMPONENTS,
            ):
        super(MixtureDensity, self).__init__()
        self.dim = dim
        self.num_components = num_components
        self.net = mlp([context_dim, num_components * (1 + 2 * dim)])
        last = self.net[-1]
        with torch.no_grad():
            # unit variances, spread means
            last.weight.mul_(0.1)
            bias = last.bias.view(-1)
            bias.zero_()
            means = bias[num_components:].view(num_components, 2, dim)
            means[:, 0, :].normal_(0.0, 0.5)

    def params(self, context):
        return mdn_params(self.net(context), self.num_components, self.dim)

    def log_prob(self, x, context):
        return mdn_log_prob(x, self.params(context))

    def sample(self, context, rng=None, shape=None):
        params = self.params(context)
        x = mdn_sample(params, rng)
        return x, mdn_log_prob(x, params)

    def point(self, context, shape=None):
        '''Mean of the heaviest component.'''
        params = self.params(context)
        idx = params.log_weights.argmax(dim=-1, keepdim=True)
        gather = idx[..., None].expand(idx.shape + (self.dim, ))
        return params.means.gather(-2, gather).squeeze(-2)


def _euclidean_density(kind, dim, context_dim, **flow_kwargs):
    num_components = flow_kwargs.pop('num_components', constants.MDN_COMPONENTS)
    if kind == 'gaussian':
        return GaussianDensity(dim, context_dim)
    if kind == 'mdn':
        return MixtureDensity(dim, context_dim, num_components)
    if kind == 'flow':
        return ConditionalFlow(dim=dim, context_dim=context_dim, **flow_kwargs)
    raise ValueError('unknown density kind %r' % (kind, ))


def perpart_euclidean_log_prob(v, context, density):
    '''``log p(v | c)`` on R^3; no exp-map Jacobian, no equivalent angles.'''
    return density.log_prob(v, context)


class EuclideanPart(nn.Module):
    '''Use an R^3 density of the principal log as a part rotation density.'''

    def __init__(self, kind, context_dim=constants.CONTEXT_DIM, **flow_kwargs):
        super(EuclideanPart, self).__init__()
        self.kind = kind
        self.density = _euclidean_density(kind, 3, context_dim, **flow_kwargs)

    def log_prob(self, rot, context=None):
        return perpart_euclidean_log_prob(log_so3(rot), context, self.density)

    def sample(self, context=None, rng=None, shape=None):
        v, _ = self.density.sample(context, rng, shape)
        rot = exp_so3(v)
        # samples past pi fold back onto the principal ball
        return rot, self.log_prob(rot, context), v

    def point(self, context=None, shape=None):
        return exp_so3(self.density.point(context, shape))


class FullBodyDensity(nn.Module):
    '''69-d density over concatenated axis-angles, conditioned on X only.'''

    def __init__(
            self,
            kind,
            num_parts=constants.NUM_PARTS,
            context_dim=constants.CONTEXT_DIM,
            **flow_kwargs
            ):
        super(FullBodyDensity, self).__init__()
        if kind not in FULLBODY_KINDS:
            raise ValueError('unsupported full-body density; use one of %s' % (
                    repr(list(FULLBODY_KINDS)),
                    ))
        dim = 3 * num_parts
        if kind == 'flow':
            # plain R^69 flow, no radial squashing
            flow_kwargs.setdefault('split', dim // 2)
            flow_kwargs['radius'] = None
        self.kind = kind
        self.dim = dim
        self.density = _euclidean_density(kind, dim, context_dim, **flow_kwargs)

    def log_prob(self, theta, context):
        return self.density.log_prob(theta, context)

    def sample(self, context, rng=None, shape=None):
        return self.density.sample(context, rng, shape)

    def point(self, context, shape=None):
        return self.density.point(context, shape)


def fullbody_log_prob(theta, context, density):
    return density.log_prob(theta, context)


def fullbody_sample(context, density, rng=None):
    '''Unclamped 69-d sample and its log density.'''
    return density.sample(context, rng)


class FullBodyModel(PoseModel):
    '''Full-body Gaussian / MDN / flow over concatenated axis-angles.'''

    def __init__(
            self,
            kind='gaussian',
            skeleton=None,
            context_dim=constants.CONTEXT_DIM,
            **flow_kwargs
            ):
        super(FullBodyModel, self).__init__(skeleton)
        self.variant = 'fullbody_' + kind
        in_dim = (
                constants.FEATURE_DIM
                + constants.CAMERA_DIM
                + 9
                + constants.SHAPE_DIM
                )
        self.context_net = mlp([in_dim, constants.CONTEXT_HIDDEN, context_dim])
        self.density = FullBodyDensity(
                kind,
                self.num_parts,
                context_dim,
                **flow_kwargs
                )
        logger.debug('built %s model', self.variant)

    def _context(self, cond, betas):
        return self.context_net(self.global_inputs(cond, betas))

    def _to_rots(self, theta):
        return exp_so3(theta.reshape(theta.shape[:-1] + (self.num_parts, 3)))

    def pose_log_prob(self, rots, betas, cond):
        theta = log_so3(rots).flatten(-2)
        return fullbody_log_prob(theta, self._context(cond, betas), self.density)

    def sample_pose(self, cond, betas, rng=None):
        theta, _ = fullbody_sample(self._context(cond, betas), self.density, rng)
        rots = self._to_rots(theta)
        order = self.tree.topological_order()
        return rots, self.pose_log_prob(rots, betas, cond), order

    def point_pose(self, cond, betas):
        return self._to_rots(self.density.point(self._context(cond, betas)))


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
