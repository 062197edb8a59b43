# -*- coding: utf-8 -*-

'''Observation encoder, deterministic heads and the common model interface.

Every model variant (the SO(3) flow model and all baselines) derives from
:class:`PoseModel`, so training, evaluation and checkpointing treat them
alike. Observations are batches of 2D keypoints ``(N, 24, 2)`` in pixels
plus a boolean visibility mask ``(N, 24)``.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'ShapeGaussian',
        'Conditioning',
        'ObservationEncoder',
        'GlobalHead',
        'PoseModel',
        'normalise_keypoints',
        'normalise_camera',
        ]

import collections
import math

import torch
from torch import nn
import torch.nn.functional as F

from . import constants
from .bodymodel import default_skeleton
from .liegroup import matrix_from_6d
from .utils import diag_normal_log_prob, mlp

_LOG_2 = math.log(2.0)
_HALF_IMAGE = 0.5 * constants.IMAGE_SIZE
_IDENTITY_6D = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0)


class ShapeGaussian(object):
    '''Diagonal Gaussian over shape vectors, parameterised by log-variance.'''

    def __init__(self, mean, log_var):
        self.mean = mean
        self.log_var = log_var

    @property
    def variance(self):
        return torch.exp(self.log_var)

    def log_prob(self, betas):
        return diag_normal_log_prob(betas, self.mean, self.variance)

    def sample(self, rng=None, shape=()):
        '''Reparameterised ``mu + sigma * eps``; ``shape`` is prepended.'''
        full = tuple(shape) + tuple(self.mean.shape)
        eps = torch.randn(full, generator=rng, dtype=self.mean.dtype)
        return self.mean + torch.exp(0.5 * self.log_var) * eps

    def expand(self, shape):
        full = tuple(shape) + tuple(self.mean.shape)
        return ShapeGaussian(self.mean.expand(full), self.log_var.expand(full))


class Conditioning(collections.namedtuple('Conditioning', [
        'features',  # (..., 512)
        'cam',       # (..., 3) as [s, tx, ty]
        'glob',      # (..., 3, 3)
        'shape',     # ShapeGaussian
        ])):
    '''Deterministic per-observation outputs shared by every density.'''

    __slots__ = ()

    def expand(self, shape):
        '''Prepend ``shape`` (e.g. a sample axis) to every field.'''
        shape = tuple(shape)
        return Conditioning(
                self.features.expand(shape + tuple(self.features.shape)),
                self.cam.expand(shape + tuple(self.cam.shape)),
                self.glob.expand(shape + tuple(self.glob.shape)),
                self.shape.expand(shape),
                )

    def subset(self, index):
        return Conditioning(
                self.features[index],
                self.cam[index],
                self.glob[index],
                ShapeGaussian(self.shape.mean[index], self.shape.log_var[index]),
                )


def normalise_keypoints(keypoints, visible):
    '''Centre and scale to roughly [-1, 1]; invisible joints become zero.'''
    scaled = (keypoints - _HALF_IMAGE) / _HALF_IMAGE
    return scaled * visible[..., None].to(scaled.dtype)


def normalise_camera(cam):
    return torch.cat([
            cam[..., :1] / constants.CAMERA_SCALE_PRIOR,
            (cam[..., 1:] - _HALF_IMAGE) / _HALF_IMAGE,
            ], dim=-1)


class ObservationEncoder(nn.Module):
    '''Keypoints and visibility to a 512-d feature vector.'''

    def __init__(self, num_joints=constants.NUM_JOINTS, dim=constants.FEATURE_DIM):
        super(ObservationEncoder, self).__init__()
        self.num_joints = num_joints
        self.net = mlp([3 * num_joints, dim, dim])

    def forward(self, keypoints, visible):
        visible = visible.to(keypoints.dtype)
        flat = torch.cat([
                normalise_keypoints(keypoints, visible).flatten(-2),
                visible,
                ], dim=-1)
        return F.elu(self.net(flat.to(torch.float64)))


class GlobalHead(nn.Module):
    '''Camera, global rotation and shape Gaussian from features.

    Output layout: 3 camera, 6 rotation, 10 shape mean, 10 shape
    log-variance.
    '''

    def __init__(self, dim=constants.FEATURE_DIM, hidden=constants.HEAD_HIDDEN):
        super(GlobalHead, self).__init__()
        k = constants.SHAPE_DIM
        self.net = mlp([dim, hidden, constants.CAMERA_DIM + constants.ROT6D_DIM + 2 * k])
        last = self.net[-1]
        with torch.no_grad():
            last.weight.mul_(0.01)
            last.bias.zero_()
            last.bias[3:9] = torch.tensor(_IDENTITY_6D, dtype=last.bias.dtype)

    def forward(self, features):
        out = self.net(features)
        k = constants.SHAPE_DIM
        raw_cam, raw_rot = out[..., :3], out[..., 3:9]
        scale = constants.CAMERA_SCALE_PRIOR * F.softplus(raw_cam[..., :1]) / _LOG_2
        trans = _HALF_IMAGE + _HALF_IMAGE * raw_cam[..., 1:]
        cam = torch.cat([scale, trans], dim=-1)
        glob = matrix_from_6d(raw_rot)
        shape = ShapeGaussian(out[..., 9:9 + k], out[..., 9 + k:9 + 2 * k])
        return cam, glob, shape


class PoseModel(nn.Module):
    '''Conditional density over 23 part rotations and a shape vector.

    Subclasses implement :meth:`pose_log_prob`, :meth:`sample_pose` and
    :meth:`point_pose`. Rotations are ``(..., 23, 3, 3)`` indexed by
    part - 1; leading dimensions must match the conditioning.
    '''

    variant = None

    def __init__(self, skeleton=None):
        super(PoseModel, self).__init__()
        self.skeleton = skeleton if skeleton is not None else default_skeleton()
        self.tree = self.skeleton.tree
        self.encoder = ObservationEncoder(self.tree.num_joints)
        self.head = GlobalHead()

    @property
    def num_parts(self):
        return self.tree.num_parts

    def encode(self, keypoints, visible):
        return self.encoder(keypoints, visible)

    def predict_cam_glob(self, features):
        cam, glob, _ = self.head(features)
        return cam, glob

    def condition(self, keypoints, visible):
        features = self.encode(keypoints, visible)
        cam, glob, shape = self.head(features)
        return Conditioning(features, cam, glob, shape)

    def shape_log_prob(self, betas, cond):
        return cond.shape.log_prob(betas)

    def shape_sample(self, cond, rng=None, shape=()):
        return cond.shape.sample(rng, shape)

    def global_inputs(self, cond, betas):
        '''``(phi, cam, vec(R_glob), beta)`` concatenated, broadcast to betas.'''
        lead = tuple(betas.shape[:-1])
        return torch.cat([
                cond.features.expand(lead + cond.features.shape[-1:]),
                normalise_camera(cond.cam).expand(lead + (3, )),
                cond.glob.flatten(-2).expand(lead + (9, )),
                betas,
                ], dim=-1)

    def pose_log_prob(self, rots, betas, cond):
        raise NotImplementedError

    def sample_pose(self, cond, betas, rng=None):
        '''Return ``(rots, log p(rots | betas, cond), order)``.'''
        raise NotImplementedError

    def point_pose(self, cond, betas):
        raise NotImplementedError

    def joint_log_prob(self, rots, betas, cond, pose_betas=None):
        '''``log p(beta | X) + log p(rots | beta', X)``.

        ``pose_betas`` (default ``betas``) is the shape fed to the pose
        contexts; training passes a reparameterised shape sample here.
        '''
        pose_betas = betas if pose_betas is None else pose_betas
        return (
                self.shape_log_prob(betas, cond)
                + self.pose_log_prob(rots, pose_betas, cond)
                )

    def ancestral_sample(self, cond, rng=None, num_samples=None):
        '''Draw ``(rots, betas, log_prob, order)``.

        With ``num_samples`` a leading sample axis is added to every output.
        '''
        if num_samples is not None:
            cond = cond.expand((num_samples, ))
        betas = cond.shape.sample(rng)
        rots, pose_lp, order = self.sample_pose(cond, betas, rng)
        return rots, betas, cond.shape.log_prob(betas) + pose_lp, order

    def point_estimate(self, cond):
        betas = cond.shape.mean
        return self.point_pose(cond, betas), betas


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
