# -*- coding: utf-8 -*-

'''Monotone linear rational splines.

Each bin is split at a point lambda into two linear rational pieces
``(a x + b) / (c x + d)``. Outside ``[-bound, bound]`` the spline is the
identity, and the boundary derivatives are pinned to 1 so the map stays
continuously differentiable at the tails.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'SplineParams',
        'raw_param_count',
        'spline_params',
        'spline_forward',
        'spline_inverse',
        ]

import collections
import math

import torch
import torch.nn.functional as F

from . import constants


SplineParams = collections.namedtuple('SplineParams', [
        'knot_xs',      # (..., K + 1)
        'knot_ys',      # (..., K + 1)
        'derivatives',  # (..., K + 1), boundary entries equal 1
        'lambdas',      # (..., K)
        ])


def raw_param_count(num_bins):
    '''Unconstrained parameters per transformed dimension.'''
    return 4 * num_bins - 1


def _knots(raw, bound, min_size):
    num_bins = raw.shape[-1]
    if min_size * num_bins > 1.0:
        raise ValueError('minimal bin size too large for the number of bins')
    sizes = min_size + (1.0 - min_size * num_bins) * F.softmax(raw, dim=-1)
    knots = F.pad(torch.cumsum(sizes, dim=-1), pad=(1, 0), value=0.0)
    knots = 2.0 * bound * knots - bound
    # pin the end knots against cumsum round-off
    return torch.cat([
            torch.full_like(knots[..., :1], -bound),
            knots[..., 1:-1],
            torch.full_like(knots[..., :1], bound),
            ], dim=-1)


def spline_params(
        raw,
        num_bins=constants.NUM_BINS,
        bound=constants.TAIL_BOUND,
        min_bin_width=constants.MIN_BIN_WIDTH,
        min_bin_height=constants.MIN_BIN_HEIGHT,
        min_derivative=constants.MIN_DERIVATIVE,
        min_lambda=constants.MIN_LAMBDA,
        ):
    '''Build valid spline parameters from unconstrained ``raw``.

    ``raw`` has shape ``(..., 4K - 1)``. All-zero ``raw`` gives the identity.
    '''
    if raw.shape[-1] != raw_param_count(num_bins):
        raise ValueError('expected %d raw spline parameters; got %d' % (
                raw_param_count(num_bins),
                raw.shape[-1],
                ))
    k = num_bins
    raw_w, raw_h, raw_d, raw_l = torch.split(raw, [k, k, k - 1, k], dim=-1)

    knot_xs = _knots(raw_w, bound, min_bin_width)
    knot_ys = _knots(raw_h, bound, min_bin_height)

    # softplus(0) / log(2) == 1, so zero input keeps unit slopes
    inner = (
            min_derivative
            + (1.0 - min_derivative) * F.softplus(raw_d) / math.log(2.0)
            )
    derivatives = F.pad(inner, pad=(1, 1), value=1.0)

    lambdas = min_lambda + (1.0 - 2.0 * min_lambda) * torch.sigmoid(raw_l)
    return SplineParams(knot_xs, knot_ys, derivatives, lambdas)


def _broadcast(params, shape):
    return SplineParams(*[
            t.expand(tuple(shape) + t.shape[-1:]).contiguous() for t in params
            ])


def _search(knots, x):
    inner = knots[..., 1:-1].contiguous()
    return torch.searchsorted(inner, x[..., None].contiguous(), right=True)


def _pick(t, idx):
    return t.gather(-1, idx).squeeze(-1)


def _bin(params, idx):
    xa = _pick(params.knot_xs, idx)
    xb = _pick(params.knot_xs[..., 1:], idx)
    ya = _pick(params.knot_ys, idx)
    yb = _pick(params.knot_ys[..., 1:], idx)
    da = _pick(params.derivatives, idx)
    db = _pick(params.derivatives[..., 1:], idx)
    lam = _pick(params.lambdas, idx)

    width = xb - xa
    delta = (yb - ya) / width
    # w_a is free and fixed to 1
    wa = torch.ones_like(width)
    wb = torch.sqrt(da / db)
    wc = (lam * da + (1.0 - lam) * wb * db) / delta
    yc = ((1.0 - lam) * ya + lam * wb * yb) / ((1.0 - lam) + lam * wb)
    return xa, width, ya, yb, yc, wa, wb, wc, lam


def spline_forward(x, params, bound=constants.TAIL_BOUND):
    '''Elementwise spline and ``log|dy/dx|``; identity outside the bound.'''
    params = _broadcast(params, x.shape)
    inside = (x >= -bound) & (x <= bound)
    xin = x.clamp(-bound, bound)
    idx = _search(params.knot_xs, xin)
    xa, width, ya, yb, yc, wa, wb, wc, lam = _bin(params, idx)

    theta = (xin - xa) / width
    left = theta <= lam
    numerator = torch.where(
            left,
            wc * yc * theta + wa * ya * (lam - theta),
            wc * yc * (1.0 - theta) + wb * yb * (theta - lam),
            )
    denominator = torch.where(
            left,
            wc * theta + wa * (lam - theta),
            wc * (1.0 - theta) + wb * (theta - lam),
            )
    y = numerator / denominator

    slope = wc * torch.where(
            left,
            wa * lam * (yc - ya),
            wb * (1.0 - lam) * (yb - yc),
            ) / width
    logdet = torch.log(slope) - 2.0 * torch.log(torch.abs(denominator))

    return (
            torch.where(inside, y, x),
            torch.where(inside, logdet, torch.zeros_like(logdet)),
            )


def spline_inverse(y, params, bound=constants.TAIL_BOUND):
    '''Exact inverse of :func:`spline_forward` and ``log|dx/dy|``.'''
    params = _broadcast(params, y.shape)
    inside = (y >= -bound) & (y <= bound)
    yin = y.clamp(-bound, bound)
    idx = _search(params.knot_ys, yin)
    xa, width, ya, yb, yc, wa, wb, wc, lam = _bin(params, idx)

    left = yin <= yc
    numerator = torch.where(
            left,
            lam * wa * (ya - yin),
            (wc - lam * wb) * yin + lam * wb * yb - wc * yc,
            )
    denominator = torch.where(
            left,
            (wc - wa) * yin + wa * ya,
            (wc - wb) * yin + wb * yb,
            ) - wc * yc
    theta = numerator / denominator
    x = xa + theta * width

    slope = wc * torch.where(
            left,
            lam * wa * (yc - ya),
            (1.0 - lam) * wb * (yb - yc),
            ) * width
    logdet = torch.log(slope) - 2.0 * torch.log(torch.abs(denominator))

    return (
            torch.where(inside, x, y),
            torch.where(inside, logdet, torch.zeros_like(logdet)),
            )


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
