# -*- coding: utf-8 -*-

'''SO(3) / so(3) primitives.

All functions are batched over leading dimensions: axis-angle vectors have
shape ``(..., 3)``, matrices ``(..., 3, 3)``. Matrices are row-major and act
on column vectors. Every branch is written so that autograd stays finite on
both sides of the small-angle and near-pi switches.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'hat',
        'vee',
        'exp_so3',
        'log_so3',
        'det_jac_exp',
        'log_det_jac_exp',
        'equivalent_angles',
        'preimages',
        'random_rotation',
        'rotation_angle',
        'is_rotation',
        'matrix_from_6d',
        ]

import math

import torch

from . import constants
from .utils import float64

# keeps sqrt and division finite (with finite derivatives) at zero
_TINY = 1e-30
# below this sin(theta) the sign of w is rounding noise
_AXIS_SIGN_TOL = 1e-12


def _angle(v):
    theta_sq = (v * v).sum(dim=-1)
    return theta_sq, torch.sqrt(theta_sq.clamp_min(_TINY))


def _eye_like(m):
    return torch.eye(3, dtype=m.dtype, device=m.device).expand(m.shape)


@float64
def hat(v):
    '''Map ``v`` in R^3 to the skew matrix with ``hat(v) @ w == v x w``.'''
    x, y, z = v.unbind(dim=-1)
    zero = torch.zeros_like(x)
    return torch.stack(
            [zero, -z, y, z, zero, -x, -y, x, zero],
            dim=-1,
            ).reshape(v.shape[:-1] + (3, 3))


@float64
def vee(m):
    return torch.stack([m[..., 2, 1], m[..., 0, 2], m[..., 1, 0]], dim=-1)


@float64
def exp_so3(v):
    '''Rodrigues' formula; second-order Taylor form below ``SMALL_ANGLE``.'''
    theta_sq, theta = _angle(v)
    small = theta < constants.SMALL_ANGLE
    half = 0.5 * theta
    one = torch.ones_like(theta)

    a = torch.where(small, one, torch.sin(theta) / theta)
    # (1 - cos t) / t^2 written without cancellation
    b = torch.where(small, 0.5 * one, 0.5 * (torch.sin(half) / half) ** 2)

    k = hat(v)
    return (
            _eye_like(k)
            + a[..., None, None] * k
            + b[..., None, None] * (k @ k)
            )


@float64
def log_so3(r):
    '''Principal logarithm, angle in [0, pi].

    Below pi the axis sign follows the skew part ``w = sin(theta) u``. Once
    ``sin(theta)`` is at rounding level (``theta`` numerically pi) that sign
    is noise, and the axis is returned with its largest-magnitude component
    positive instead (first index wins ties).
    '''
    tr = r.diagonal(dim1=-2, dim2=-1).sum(dim=-1)
    cos = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0)
    # w = sin(theta) * u
    w = 0.5 * vee(r - r.transpose(-1, -2))
    sin = torch.sqrt((w * w).sum(dim=-1).clamp_min(_TINY))
    theta = torch.atan2(sin, cos)

    small = theta < constants.SMALL_ANGLE
    near_pi = theta > math.pi - constants.NEAR_PI

    generic = (theta / sin)[..., None] * w

    # (R + R^T)/2 - cos I = (1 - cos) u u^T
    denom = (1.0 - cos).clamp_min(_TINY)
    outer = (
            0.5 * (r + r.transpose(-1, -2))
            - cos[..., None, None] * _eye_like(r)
            ) / denom[..., None, None]
    diag = outer.diagonal(dim1=-2, dim2=-1)
    k = diag.argmax(dim=-1, keepdim=True)
    row = outer.gather(
            -2,
            k[..., None].expand(k.shape[:-1] + (1, 3)),
            ).squeeze(-2)
    u = row / torch.sqrt(diag.gather(-1, k).clamp_min(_TINY))
    u = u / torch.sqrt((u * u).sum(dim=-1, keepdim=True).clamp_min(_TINY))
    signed = (sin > _AXIS_SIGN_TOL)[..., None]
    flip = signed & ((w * u).sum(dim=-1, keepdim=True) < 0)
    u = torch.where(flip, -u, u)
    antipodal = theta[..., None] * u

    return torch.where(
            small[..., None],
            w,
            torch.where(near_pi[..., None], antipodal, generic),
            )


@float64
def det_jac_exp(v):
    '''Volume change of exp at ``v``: (2 - 2 cos t) / t^2.'''
    theta_sq, theta = _angle(v)
    small = theta < constants.SMALL_ANGLE
    half = 0.5 * theta
    return torch.where(
            small,
            1.0 - theta_sq / 12.0,
            (torch.sin(half) / half) ** 2,
            )


@float64
def log_det_jac_exp(v):
    theta_sq, theta = _angle(v)
    small = theta < constants.SMALL_ANGLE
    half = 0.5 * theta
    ratio = torch.abs(torch.sin(half) / half).clamp_min(_TINY)
    return torch.where(
            small,
            torch.log1p(-theta_sq / 12.0),
            2.0 * torch.log(ratio),
            )


def preimages(v, ks=(0, -1, 1)):
    '''Batched ``(theta + 2 pi k) u`` for each ``k``.

    Returns ``(vectors, valid)`` with shapes ``(..., len(ks), 3)`` and
    ``(..., len(ks))``. For angles below ``SMALL_ANGLE`` only ``k == 0`` is
    valid since the axis is undefined.
    '''
    _, theta = _angle(v)
    degenerate = theta < constants.SMALL_ANGLE
    axis = v / theta[..., None]
    vectors, valid = [], []
    for k in ks:
        if k == 0:
            vectors.append(v)
            valid.append(torch.ones_like(degenerate))
        else:
            vectors.append((theta + 2.0 * math.pi * k)[..., None] * axis)
            valid.append(~degenerate)
    return torch.stack(vectors, dim=-2), torch.stack(valid, dim=-1)


@float64
def equivalent_angles(v, ks=(0, -1, 1)):
    '''All ``(theta + 2 pi k) u`` for a single axis-angle vector ``v``.

    Returns ``(vectors, degenerate)``; when ``v`` is (numerically) zero only
    the ``k == 0`` term is returned and ``degenerate`` is True.
    '''
    if v.shape != (3, ):
        raise ValueError('expected a single 3-vector; got shape %r' % (
                tuple(v.shape),
                ))
    ks = list(ks)
    vectors, valid = preimages(v, ks)
    degenerate = not bool(valid.all())
    if degenerate:
        return v[None].clone(), True
    return vectors, False


def random_rotation(rng=None, shape=(), dtype=torch.float64):
    '''Haar-uniform rotations via normalised Gaussian quaternions.'''
    q = torch.randn(tuple(shape) + (4, ), generator=rng, dtype=dtype)
    q = q / q.norm(dim=-1, keepdim=True)
    w, x, y, z = q.unbind(dim=-1)
    return torch.stack([
            1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
            2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
            2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y),
            ], dim=-1).reshape(tuple(shape) + (3, 3))


@float64
def rotation_angle(r):
    tr = r.diagonal(dim1=-2, dim2=-1).sum(dim=-1)
    w = 0.5 * vee(r - r.transpose(-1, -2))
    return torch.atan2(w.norm(dim=-1), (tr - 1.0) / 2.0)


@float64
def is_rotation(r, tol=1e-9):
    '''Elementwise check of orthonormality and unit determinant.'''
    gram = r.transpose(-1, -2) @ r
    ortho = (gram - _eye_like(gram)).flatten(-2).norm(dim=-1) < tol
    det = torch.linalg.det(r)
    return ortho & ((det - 1.0).abs() < tol)


@float64
def matrix_from_6d(raw):
    '''Gram-Schmidt of two 3-vectors into the columns of a rotation.'''
    a1, a2 = raw[..., :3], raw[..., 3:]
    b1 = a1 / a1.norm(dim=-1, keepdim=True).clamp_min(1e-12)
    a2 = a2 - (b1 * a2).sum(dim=-1, keepdim=True) * b1
    b2 = a2 / a2.norm(dim=-1, keepdim=True).clamp_min(1e-12)
    b3 = torch.cross(b1, b2, dim=-1)
    return torch.stack([b1, b2, b3], dim=-1)


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
