# -*- coding: utf-8 -*-

'''Synthetic training data and benchmark fixtures.

Ground-truth poses come from a per-part axis-angle Gaussian prior, shapes
from a clipped isotropic Gaussian and cameras from a weak-perspective
approximation of a perspective camera. Observations are the projected
joints after keypoint augmentation.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'SyntheticBatch',
        'synth_dataset',
        'sample_pose_prior',
        'sample_cameras',
        'render',
        'augment',
        'save_dataset',
        'load_dataset',
        'bimodal_rotations',
        'bimodal_log_prob',
        'depth_ambiguity_dataset',
        'occluded_arm_dataset',
        ]

import collections
import logging
import math

import numpy as np
import torch

from . import constants
from .bodymodel import (
        crop_observation,
        default_skeleton,
        forward_kinematics,
        in_image,
        project,
        )
from .config import SynthConfig
from .errors import ValidationError
from .liegroup import exp_so3
from .so3density import pushforward_log_prob
from .utils import check_pair_count, check_positive, diag_normal_log_prob

logger = logging.getLogger(__name__)

_HALF_IMAGE = 0.5 * constants.IMAGE_SIZE
# keeps sampled angles strictly inside the principal ball
_MAX_ANGLE = math.pi - 1e-3


class SyntheticBatch(collections.namedtuple('SyntheticBatch', [
        'rots',       # (N, 23, 3, 3)
        'betas',      # (N, 10)
        'glob',       # (N, 3, 3)
        'cam',        # (N, 3), in the frame of ``keypoints``
        'joints3d',   # (N, 24, 3), metres, root at the origin
        'keypoints',  # (N, 24, 2), observed pixels
        'visible',    # (N, 24) bool
        ])):
    __slots__ = ()

    def __len__(self):
        return int(self.rots.shape[0])

    def subset(self, index):
        return SyntheticBatch(*[t[index] for t in self])

    def batches(self, batch_size, rng=None, shuffle=True):
        n = len(self)
        order = torch.randperm(n, generator=rng) if shuffle else torch.arange(n)
        for start in range(0, n, batch_size):
            yield self.subset(order[start:start + batch_size])


def _clip_norm(v, limit):
    norm = v.norm(dim=-1, keepdim=True)
    return v * torch.clamp(limit / norm.clamp_min(1e-12), max=1.0)


def sample_pose_prior(n, rng=None, cfg=None, skeleton=None):
    '''Part rotations ``(n, 23, 3, 3)`` with angles clipped below pi.'''
    cfg = cfg if cfg is not None else SynthConfig()
    skeleton = skeleton if skeleton is not None else default_skeleton()
    parts = skeleton.tree.num_parts
    std = torch.full((parts, 1), cfg.pose_std_limb, dtype=torch.float64)
    for i in skeleton.torso_parts:
        std[i - 1] = cfg.pose_std_torso
    v = std * torch.randn((n, parts, 3), generator=rng, dtype=torch.float64)
    return exp_so3(_clip_norm(v, _MAX_ANGLE))


def _sample_shapes(n, rng, cfg):
    betas = cfg.shape_std * torch.randn(
            (n, constants.SHAPE_DIM),
            generator=rng,
            dtype=torch.float64,
            )
    limit = cfg.shape_clip * cfg.shape_std
    return betas.clamp(-limit, limit)


def _yaw(angle):
    # rotation about the vertical (y) axis
    zeros = torch.zeros_like(angle)
    v = torch.stack([zeros, angle, zeros], dim=-1)
    return exp_so3(v)


def sample_cameras(n, rng=None, cfg=None):
    '''``[s, tx, ty]`` with ``s = f / t_z`` and pixel translation.'''
    cfg = cfg if cfg is not None else SynthConfig()
    mean = torch.tensor(cfg.cam_translation_mean, dtype=torch.float64)
    std = torch.tensor(cfg.cam_translation_var, dtype=torch.float64).sqrt()
    t = mean + std * torch.randn((n, 3), generator=rng, dtype=torch.float64)
    depth = t[:, 2:].clamp_min(0.5)
    scale = cfg.focal_length / depth
    return torch.cat([scale, scale * t[:, :2] + _HALF_IMAGE], dim=-1)


def render(rots, betas, glob, cam, skeleton=None):
    '''GT 3D joints and their exact projection.'''
    skeleton = skeleton if skeleton is not None else default_skeleton()
    joints = forward_kinematics(skeleton, betas, rots, glob)
    return joints, project(joints, cam)


def _bernoulli(n, p, rng):
    return torch.rand(n, generator=rng, dtype=torch.float64) < p


def _choice(n, k, rng):
    return torch.randint(k, (n, ), generator=rng)


def augment(keypoints, cam, cfg=None, rng=None, skeleton=None):
    '''Apply keypoint noise, occlusions, L/R swaps and extreme crops.

    Returns ``(keypoints, cam, visible)``; joints leaving the image are
    invisible. With augmentation disabled the input projection is kept.
    '''
    cfg = cfg if cfg is not None else SynthConfig().augment
    skeleton = skeleton if skeleton is not None else default_skeleton()
    n, j = keypoints.shape[:2]
    keypoints = keypoints.clone()
    cam = cam.clone()
    visible = torch.ones((n, j), dtype=torch.bool)
    if not cfg.enabled:
        return keypoints, cam, visible & in_image(keypoints)

    noise = (2.0 * torch.rand(keypoints.shape, generator=rng, dtype=torch.float64) - 1.0)
    keypoints = keypoints + cfg.noise_px * noise

    visible &= ~(torch.rand((n, j), generator=rng, dtype=torch.float64) < cfg.keypoint_occlusion)

    chains = [skeleton.limb_chains[k] for k in sorted(skeleton.limb_chains)]
    hide = _bernoulli(n, cfg.body_part_occlusion, rng)
    which = _choice(n, len(chains), rng)
    for k in torch.nonzero(hide).flatten().tolist():
        visible[k, list(chains[int(which[k])])] = False

    pairs = skeleton.symmetric_pairs
    swap = _bernoulli(n, cfg.lr_swap, rng)
    which = _choice(n, len(pairs), rng)
    for k in torch.nonzero(swap).flatten().tolist():
        a, b = pairs[int(which[k])]
        keypoints[k, [a, b]] = keypoints[k, [b, a]]
        visible[k, [a, b]] = visible[k, [b, a]]

    half = _bernoulli(n, cfg.half_image_occlusion, rng)
    side = _choice(n, 4, rng)
    for k in torch.nonzero(half).flatten().tolist():
        axis, upper = divmod(int(side[k]), 2)
        coord = keypoints[k, :, axis]
        covered = coord >= _HALF_IMAGE if upper else coord < _HALF_IMAGE
        visible[k] &= ~covered

    crop = _bernoulli(n, cfg.crop, rng)
    alphas = cfg.crop_min + (cfg.crop_max - cfg.crop_min) * torch.rand(
            n,
            generator=rng,
            dtype=torch.float64,
            )
    for k in torch.nonzero(crop).flatten().tolist():
        kp, c, vis = crop_observation(
                keypoints[k],
                cam[k],
                float(alphas[k]),
                skeleton=skeleton,
                )
        keypoints[k], cam[k] = kp, c
        visible[k] &= vis

    return keypoints, cam, visible & in_image(keypoints)


def synth_dataset(n, cfg=None, rng=None, skeleton=None):
    '''``n`` ground-truth samples with augmented observations.'''
    if n < 1:
        raise ValueError('dataset size must be at least 1; got %r' % (n, ))
    cfg = cfg if cfg is not None else SynthConfig()
    skeleton = skeleton if skeleton is not None else default_skeleton()
    rots = sample_pose_prior(n, rng, cfg, skeleton)
    betas = _sample_shapes(n, rng, cfg)
    yaw = math.pi * (2.0 * torch.rand(n, generator=rng, dtype=torch.float64) - 1.0)
    glob = _yaw(yaw)
    cam = sample_cameras(n, rng, cfg)
    joints, clean = render(rots, betas, glob, cam, skeleton)
    keypoints, cam, visible = augment(clean, cam, cfg.augment, rng, skeleton)
    logger.info(
            'synthesised %d samples, %.1f%% keypoints visible',
            n,
            100.0 * float(visible.double().mean()),
            )
    return SyntheticBatch(rots, betas, glob, cam, joints, keypoints, visible)


def save_dataset(path, data):
    arrays = dict((k, v.numpy()) for k, v in data._asdict().items())
    with open(path, 'wb') as f:
        np.savez(f, **arrays)


def load_dataset(path):
    try:
        with np.load(path) as blob:
            fields = dict((k, torch.from_numpy(blob[k].copy())) for k in SyntheticBatch._fields)
    except KeyError as e:
        raise ValidationError('dataset %s lacks field %s' % (path, e, ))
    except (IOError, OSError, ValueError) as e:
        raise ValidationError('cannot read dataset %s: %s' % (path, e, ))
    fields['visible'] = fields['visible'].to(torch.bool)
    return SyntheticBatch(**fields)


# Fixtures

def _bimodal_modes(separation):
    half = 0.5 * separation
    return torch.tensor(
            [[0.0, 0.0, half], [0.0, 0.0, -half]],
            dtype=torch.float64,
            )


def bimodal_rotations(n, rng=None, separation=0.5 * math.pi, std=0.15):
    '''Equal mixture of two exp-Gaussian modes ``separation`` apart.

    Returns ``(rotations, mode index)``.
    '''
    check_positive('std', std)
    modes = _bimodal_modes(separation)
    which = _choice(n, 2, rng)
    v = modes[which] + std * torch.randn((n, 3), generator=rng, dtype=torch.float64)
    return exp_so3(v), which


def bimodal_log_prob(rots, separation=0.5 * math.pi, std=0.15):
    '''Exact log density (Haar reference) of :func:`bimodal_rotations`.'''
    modes = _bimodal_modes(separation)
    var = torch.full((3, ), std * std, dtype=torch.float64)

    def log_prob_fn(v, context):
        comps = torch.stack([
                diag_normal_log_prob(v, modes[k], var) for k in range(2)
                ], dim=-1)
        return torch.logsumexp(comps, dim=-1) - math.log(2.0)

    return pushforward_log_prob(rots, log_prob_fn)


_DEPTH_FLIP = torch.tensor([1.0, 1.0, -1.0], dtype=torch.float64)


def _mirror_depth(rots):
    # M R M with M = diag(1, 1, -1)
    return rots * _DEPTH_FLIP[:, None] * _DEPTH_FLIP[None, :]


def depth_ambiguity_dataset(n, rng=None, cfg=None, skeleton=None):
    '''Pairs of depth-mirrored bodies with identical 2D observations.

    ``n`` must be even. The first half holds sampled bodies, the second half
    their mirror images through the root depth plane: joints with z negated
    and rotations conjugated by diag(1, 1, -1), which is exact for the
    skeleton with depth-negated offsets. Both halves share cameras and
    keypoints, and each ground truth reprojects onto them exactly.
    '''
    check_pair_count(n)
    cfg = cfg if cfg is not None else SynthConfig()
    skeleton = skeleton if skeleton is not None else default_skeleton()
    half = n // 2
    rots = sample_pose_prior(half, rng, cfg, skeleton)
    betas = _sample_shapes(half, rng, cfg)
    yaw = 0.25 * math.pi * (2.0 * torch.rand(half, generator=rng, dtype=torch.float64) - 1.0)
    glob = _yaw(yaw)
    cam = sample_cameras(half, rng, cfg)
    joints, clean = render(rots, betas, glob, cam, skeleton)

    rots = torch.cat([rots, _mirror_depth(rots)])
    glob = torch.cat([glob, _mirror_depth(glob)])
    joints = torch.cat([joints, joints * _DEPTH_FLIP])
    betas = torch.cat([betas, betas])
    cam = torch.cat([cam, cam])
    keypoints = torch.cat([clean, clean])
    visible = in_image(keypoints)
    return SyntheticBatch(rots, betas, glob, cam, joints, keypoints, visible)


def occluded_arm_dataset(n, rng=None, cfg=None, skeleton=None, chain='right_arm'):
    '''Clean observations with one arm chain always hidden.'''
    cfg = cfg if cfg is not None else SynthConfig()
    skeleton = skeleton if skeleton is not None else default_skeleton()
    rots = sample_pose_prior(n, rng, cfg, skeleton)
    betas = _sample_shapes(n, rng, cfg)
    yaw = 0.25 * math.pi * (2.0 * torch.rand(n, generator=rng, dtype=torch.float64) - 1.0)
    glob = _yaw(yaw)
    cam = sample_cameras(n, rng, cfg)
    joints, clean = render(rots, betas, glob, cam, skeleton)
    visible = in_image(clean)
    visible[:, list(skeleton.limb_chains[chain])] = False
    return SyntheticBatch(rots, betas, glob, cam, joints, clean, visible)


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
