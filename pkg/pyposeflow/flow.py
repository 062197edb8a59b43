# -*- coding: utf-8 -*-

'''Conditional normalising flows on R^D.

A :class:`ConditionalFlow` is ``RadialTanh o (Permutation o Coupling) x L``
applied to a sample of :class:`BaseGaussian`. With ``radius=None`` the
terminal radial tanh is dropped, which the 69-d full-body baseline uses.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'BaseGaussian',
        'CouplingLayer',
        'CyclicPermutation',
        'RadialTanh',
        'ConditionalFlow',
        'radial_tanh_forward',
        'radial_tanh_inverse',
        'sample_angle_histogram',
        ]

import math

import numpy as np
import torch
from torch import nn
import torch.nn.functional as F

from . import constants
from . import spline
from .errors import DomainError
from .utils import check_positive, check_radius, mlp

_TINY = 1e-30
_LOG_2 = math.log(2.0)


class BaseGaussian(object):
    '''Isotropic zero-mean Gaussian ``N(0, variance * I)``.'''

    def __init__(self, dim=3, variance=constants.BASE_VARIANCE):
        check_positive('variance', variance)
        self.dim = dim
        self.variance = float(variance)
        self._log_norm = -0.5 * dim * math.log(2.0 * math.pi * self.variance)

    def log_prob(self, z):
        return self._log_norm - 0.5 * (z * z).sum(dim=-1) / self.variance

    def sample(self, shape, rng=None):
        eps = torch.randn(
                tuple(shape) + (self.dim, ),
                generator=rng,
                dtype=torch.float64,
                )
        return math.sqrt(self.variance) * eps


def _norm(x):
    rho_sq = (x * x).sum(dim=-1)
    return rho_sq, torch.sqrt(rho_sq.clamp_min(_TINY))


def _log_cosh(q):
    return q + F.softplus(-2.0 * q) - _LOG_2


def _radial_log_det(rho_sq, rho, r, s, dim):
    # g(rho) = r tanh(s rho):  log g' + (D - 1) log(g / rho)
    q = s * rho
    small = rho < constants.SMALL_ANGLE
    q_sq = s * s * rho_sq
    const = dim * math.log(r * s)
    tanh_ratio = torch.log((torch.tanh(q) / q).clamp_min(_TINY))
    exact = const - 2.0 * _log_cosh(q) + (dim - 1) * tanh_ratio
    taylor = const - q_sq - (dim - 1) * q_sq / 3.0
    return torch.where(small, taylor, exact)


def radial_tanh_forward(x, r=constants.SUPPORT_RADIUS, scaled=True):
    '''``r tanh(|x| / r) x / |x|`` (or ``r tanh(|x|) x / |x|`` unscaled).

    Returns ``(y, logdet)``; ``|y| < r``.
    '''
    s = 1.0 / r if scaled else 1.0
    rho_sq, rho = _norm(x)
    small = rho < constants.SMALL_ANGLE
    gain = torch.where(
            small,
            r * s * (1.0 - s * s * rho_sq / 3.0),
            r * torch.tanh(s * rho) / rho,
            )
    y = gain[..., None] * x
    return y, _radial_log_det(rho_sq, rho, r, s, x.shape[-1])


def _radial_tanh_inverse(y, r, scaled):
    s = 1.0 / r if scaled else 1.0
    rho_sq, rho = _norm(y)
    small = rho < constants.SMALL_ANGLE
    a = (rho / r).clamp(max=1.0 - 1e-16)
    gain = torch.where(
            small,
            (1.0 + rho_sq / (3.0 * r * r)) / (r * s),
            torch.atanh(a) / (s * rho),
            )
    x = gain[..., None] * y
    x_sq, x_norm = _norm(x)
    return x, -_radial_log_det(x_sq, x_norm, r, s, y.shape[-1])


def radial_tanh_inverse(y, r=constants.SUPPORT_RADIUS, scaled=True):
    '''Inverse of :func:`radial_tanh_forward`; ``|y| >= r`` is an error.'''
    if bool((y.norm(dim=-1) >= r).any()):
        raise DomainError('point outside the open ball of radius %g' % (r, ))
    return _radial_tanh_inverse(y, r, scaled)


class RadialTanh(nn.Module):
    def __init__(self, radius=constants.SUPPORT_RADIUS, scaled=True):
        super(RadialTanh, self).__init__()
        check_radius(radius)
        self.radius = float(radius)
        self.scaled = bool(scaled)

    def forward(self, x):
        return radial_tanh_forward(x, self.radius, self.scaled)

    def inverse(self, y, strict=True):
        if strict:
            return radial_tanh_inverse(y, self.radius, self.scaled)
        return _radial_tanh_inverse(y, self.radius, self.scaled)


class CyclicPermutation(nn.Module):
    '''Rotate coordinates so the transformed block leads the next layer.'''

    def __init__(self, shift):
        super(CyclicPermutation, self).__init__()
        self.shift = int(shift)

    def forward(self, z):
        return torch.roll(z, shifts=self.shift, dims=-1)

    def inverse(self, z):
        return torch.roll(z, shifts=-self.shift, dims=-1)


class CouplingLayer(nn.Module):
    '''LRS coupling: ``z[:d]`` passes through, ``z[d:]`` is splined.

    Spline parameters come from an MLP on ``z[:d]`` and the context. The
    last MLP layer starts at zero so a fresh layer is the identity.
    '''

    def __init__(
            self,
            dim,
            split,
            context_dim=constants.CONTEXT_DIM,
            hidden=constants.COUPLING_HIDDEN,
            num_bins=constants.NUM_BINS,
            bound=constants.TAIL_BOUND,
            ):
        super(CouplingLayer, self).__init__()
        if not 0 < split < dim:
            raise ValueError('split must lie in (0, %d); got %r' % (
                    dim,
                    split,
                    ))
        self.dim = dim
        self.split = split
        self.num_bins = num_bins
        self.bound = float(bound)
        self._raw_count = spline.raw_param_count(num_bins)
        self.net = mlp(
                [split + context_dim]
                + list(hidden)
                + [(dim - split) * self._raw_count],
                zero_last=True,
                )

    def _params(self, passed, context):
        h = passed if context is None else torch.cat([passed, context], dim=-1)
        raw = self.net(h).reshape(
                passed.shape[:-1] + (self.dim - self.split, self._raw_count)
                )
        return spline.spline_params(raw, self.num_bins, self.bound)

    def forward(self, z, context=None):
        passed, moved = z[..., :self.split], z[..., self.split:]
        params = self._params(passed, context)
        out, logdet = spline.spline_forward(moved, params, self.bound)
        return torch.cat([passed, out], dim=-1), logdet.sum(dim=-1)

    def inverse(self, y, context=None):
        passed, moved = y[..., :self.split], y[..., self.split:]
        params = self._params(passed, context)
        out, logdet = spline.spline_inverse(moved, params, self.bound)
        return torch.cat([passed, out], dim=-1), logdet.sum(dim=-1)


class ConditionalFlow(nn.Module):
    '''Conditional density ``p(v | c)`` on R^dim.'''

    def __init__(
            self,
            dim=3,
            context_dim=constants.CONTEXT_DIM,
            split=None,
            num_layers=constants.NUM_COUPLING_LAYERS,
            hidden=constants.COUPLING_HIDDEN,
            num_bins=constants.NUM_BINS,
            bound=constants.TAIL_BOUND,
            radius=constants.SUPPORT_RADIUS,
            base_variance=constants.BASE_VARIANCE,
            scaled_tanh=True,
            ):
        super(ConditionalFlow, self).__init__()
        split = dim // 2 if split is None else split
        self.dim = dim
        self.context_dim = context_dim
        self.base = BaseGaussian(dim, base_variance)
        self.couplings = nn.ModuleList([
                CouplingLayer(dim, split, context_dim, hidden, num_bins, bound)
                for _ in range(num_layers)
                ])
        self.permutation = CyclicPermutation(dim - split)
        self.tanh = None if radius is None else RadialTanh(radius, scaled_tanh)

    @property
    def radius(self):
        return None if self.tanh is None else self.tanh.radius

    def _forward_layers(self, z, context):
        logdet = torch.zeros(z.shape[:-1], dtype=z.dtype)
        for coupling in self.couplings:
            z, ld = coupling(z, context)
            z = self.permutation(z)
            logdet = logdet + ld
        return z, logdet

    def _inverse_layers(self, x, context):
        logdet = torch.zeros(x.shape[:-1], dtype=x.dtype)
        for coupling in reversed(self.couplings):
            x = self.permutation.inverse(x)
            x, ld = coupling.inverse(x, context)
            logdet = logdet + ld
        return x, logdet

    def forward(self, z, context=None):
        '''``v = f(z; c)`` and ``log|det J_f(z)|``.'''
        x, logdet = self._forward_layers(z, context)
        if self.tanh is None:
            return x, logdet
        v, ld = self.tanh(x)
        return v, logdet + ld

    def inverse(self, v, context=None):
        '''``z = f^-1(v; c)`` and ``log|det J_f^-1(v)|``.'''
        if self.tanh is None:
            return self._inverse_layers(v, context)
        x, ld = self.tanh.inverse(v)
        z, logdet = self._inverse_layers(x, context)
        return z, logdet + ld

    def log_prob(self, v, context=None):
        '''``log p(v | c)``; ``-inf`` outside the support ball.'''
        if self.tanh is None:
            z, logdet = self._inverse_layers(v, context)
            return self.base.log_prob(z) + logdet
        inside = v.norm(dim=-1) < self.tanh.radius
        safe = torch.where(inside[..., None], v, torch.zeros_like(v))
        x, ld = self.tanh.inverse(safe, strict=False)
        z, logdet = self._inverse_layers(x, context)
        lp = self.base.log_prob(z) + logdet + ld
        return torch.where(inside, lp, torch.full_like(lp, -math.inf))

    def sample_base(self, shape, rng=None):
        return self.base.sample(shape, rng)

    def sample(self, context=None, rng=None, shape=None):
        '''Reparameterised sample ``(v, log p(v | c))``.'''
        if shape is None:
            shape = () if context is None else context.shape[:-1]
        z = self.sample_base(shape, rng)
        v, logdet = self.forward(z, context)
        return v, self.base.log_prob(z) - logdet

    def point(self, context=None, shape=None):
        '''Image of the base mode, ``f(0; c)``.'''
        if shape is None:
            shape = () if context is None else context.shape[:-1]
        z = torch.zeros(tuple(shape) + (self.dim, ), dtype=torch.float64)
        return self.forward(z, context)[0]


def sample_angle_histogram(flow, context=None, num=10000, bins=30, rng=None):
    '''Histogram of sample norms (rotation angles) over ``[0, radius]``.

    ``context`` is either None or a single context vector, repeated ``num``
    times.
    '''
    if context is not None:
        context = context.expand((num, ) + tuple(context.shape[-1:]))
    with torch.no_grad():
        v, _ = flow.sample(context, rng, shape=(num, ))
    angles = v.norm(dim=-1).numpy()
    top = flow.radius if flow.radius is not None else float(angles.max())
    return np.histogram(angles, bins=bins, range=(0.0, top))


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
