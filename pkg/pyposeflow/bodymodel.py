# -*- coding: utf-8 -*-

'''Parametric stick-figure body model.

A 24-joint tree (pelvis root, 23 articulated parts) whose bone offsets are an
affine function of a 10-d shape vector. Part ``i`` owns the rotation of the
bone ending at joint ``i``, so every part rotation moves its own joint and
its whole subtree. Coordinates are camera aligned: x right, y down, z depth.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'KinematicTree',
        'Skeleton',
        'default_skeleton',
        'forward_kinematics',
        'project',
        'visibility_mask',
        'in_image',
        'crop_box',
        'crop_observation',
        ]

import hashlib
import io
import json
import os

import torch

from . import constants
from .errors import ValidationError
from .utils import check_crop_fraction, float64

DEFAULT_SKELETON_PATH = os.path.join(
        os.path.dirname(os.path.abspath(__file__)),
        'data',
        'skeleton.json',
        )


class KinematicTree(object):
    '''Parent array with index 0 as the root.'''

    def __init__(self, parents, names=None):
        parents = [int(p) for p in parents]
        if not parents or parents[0] != -1:
            raise ValidationError('joint 0 must be the root (parent -1)')
        n = len(parents)
        for i, p in enumerate(parents[1:], 1):
            if not 0 <= p < n or p == i:
                raise ValidationError('joint %d has invalid parent %d' % (
                        i,
                        p,
                        ))
        self.parents = tuple(parents)
        self.names = tuple(names) if names is not None else tuple(
                'joint%d' % (i, ) for i in range(n)
                )
        self._paths = [self._walk(i) for i in range(n)]
        self._order = sorted(range(1, n), key=lambda i: (len(self._paths[i]), i))

    def _walk(self, i):
        path = []
        seen = set()
        while i > 0:
            if i in seen:
                raise ValidationError('kinematic tree has a cycle at %d' % (
                        i,
                        ))
            seen.add(i)
            path.append(i)
            i = self.parents[i]
        return tuple(reversed(path))

    @property
    def num_joints(self):
        return len(self.parents)

    @property
    def num_parts(self):
        return len(self.parents) - 1

    def parent(self, i):
        return self.parents[i]

    def ancestors(self, i):
        '''Non-root ancestor parts of part ``i``, root to leaf.'''
        return self._paths[i][:-1]

    def path(self, i):
        return self._paths[i]

    def topological_order(self):
        '''Parts ordered so every ancestor precedes its descendants.'''
        return list(self._order)

    def subtree(self, i):
        return [j for j in range(1, self.num_joints) if i in self._paths[j]]


class Skeleton(object):
    '''Rest offsets, linear shape basis and joint subsets.'''

    def __init__(self, definition):
        self.definition = definition
        self.tree = KinematicTree(definition['parents'], definition.get('names'))
        n = self.tree.num_joints
        self.rest_offsets = torch.tensor(
                definition['rest_offsets'],
                dtype=torch.float64,
                )
        coeffs = torch.tensor(definition['shape_coefficients'], dtype=torch.float64)
        if self.rest_offsets.shape != (n, 3):
            raise ValidationError('rest_offsets must be %dx3' % (n, ))
        if coeffs.shape != (n, constants.SHAPE_DIM):
            raise ValidationError('shape_coefficients must be %dx%d' % (
                    n,
                    constants.SHAPE_DIM,
                    ))
        # offset_i(beta) = rest_i * (1 + coeffs_i . beta)
        self.shape_basis = self.rest_offsets[:, :, None] * coeffs[:, None, :]
        self.torso_parts = tuple(definition.get('torso_parts', ()))
        self.accuracy_joints = tuple(definition['accuracy_joints'])
        self.consistency_joints = tuple(definition['consistency_joints'])
        self.symmetric_pairs = tuple(
                tuple(pair) for pair in definition.get('symmetric_pairs', ())
                )
        self.limb_chains = dict(
                (k, tuple(v)) for k, v in definition.get('limb_chains', {}).items()
                )
        self.crop_centre = tuple(
                self.joint_index(name)
                for name in definition.get('crop_centre', ('pelvis', 'neck'))
                )
        if len(self.crop_centre) != 2:
            raise ValidationError('crop_centre must name two joints')

    def joint_index(self, name):
        try:
            return self.tree.names.index(name)
        except ValueError:
            raise ValidationError('skeleton has no joint named %r' % (name, ))

    @classmethod
    def load(cls, path=None):
        with io.open(path or DEFAULT_SKELETON_PATH, encoding='utf-8') as f:
            return cls(json.load(f))

    @property
    def digest(self):
        canonical = json.dumps(self.definition, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    @float64
    def offsets(self, betas):
        '''Bone offsets ``(..., 24, 3)`` for shape vectors ``(..., 10)``.'''
        return self.rest_offsets + torch.einsum(
                'jdk,...k->...jd',
                self.shape_basis,
                betas,
                )

    def bone_lengths(self, betas):
        return self.offsets(betas).norm(dim=-1)


_DEFAULT = []


def default_skeleton():
    if not _DEFAULT:
        _DEFAULT.append(Skeleton.load())
    return _DEFAULT[0]


@float64
def forward_kinematics(skeleton, betas, rots, glob):
    '''Joints ``(N, 24, 3)`` in metres, root at the origin.

    ``rots`` is ``(N, 23, 3, 3)`` indexed by part - 1, ``glob`` ``(N, 3, 3)``.
    '''
    tree = skeleton.tree
    offsets = skeleton.offsets(betas)
    world = [None] * tree.num_joints
    joints = [None] * tree.num_joints
    lead = torch.broadcast_shapes(
            rots.shape[:-3],
            glob.shape[:-2],
            betas.shape[:-1],
            )
    world[0] = glob
    joints[0] = torch.zeros(tuple(lead) + (3, ), dtype=glob.dtype)
    for i in tree.topological_order():
        p = tree.parent(i)
        world[i] = world[p] @ rots[..., i - 1, :, :]
        joints[i] = joints[p] + (
                world[i] @ offsets[..., i, :, None]
                ).squeeze(-1)
    return torch.stack(joints, dim=-2)


@float64
def project(joints, cam):
    '''Weak-perspective projection, ``s * (x, y) + t`` with cam ``[s, tx, ty]``.'''
    return cam[..., None, :1] * joints[..., :2] + cam[..., None, 1:]


def visibility_mask(keypoints, crop, occluded=()):
    '''Joints inside the crop box ``(x0, y0, x1, y1)`` and not occluded.'''
    crop = torch.as_tensor(crop, dtype=keypoints.dtype)
    u, v = keypoints[..., 0], keypoints[..., 1]
    visible = (
            (u >= crop[..., 0, None])
            & (u < crop[..., 2, None])
            & (v >= crop[..., 1, None])
            & (v < crop[..., 3, None])
            )
    if isinstance(occluded, torch.Tensor) and occluded.dtype == torch.bool:
        return visible & ~occluded
    occluded = list(occluded)
    if occluded:
        visible = visible.clone()
        visible[..., occluded] = False
    return visible


def in_image(keypoints, image_size=constants.IMAGE_SIZE):
    return visibility_mask(keypoints, (0.0, 0.0, image_size, image_size))


def crop_box(keypoints, alpha, image_size=constants.IMAGE_SIZE, skeleton=None):
    '''Square box of side ``alpha * image_size`` centred between the
    skeleton's ``crop_centre`` joints (pelvis and neck by default).
    '''
    check_crop_fraction(alpha)
    skeleton = skeleton if skeleton is not None else default_skeleton()
    a, b = skeleton.crop_centre
    centre = 0.5 * (keypoints[..., a, :] + keypoints[..., b, :])
    half = 0.5 * alpha * image_size
    return torch.cat([centre - half, centre + half], dim=-1)


def crop_observation(keypoints, cam, alpha, image_size=constants.IMAGE_SIZE, skeleton=None):
    '''Crop around the torso and resize back to ``image_size``.

    Returns ``(keypoints, cam, visible)`` in the resized crop frame; joints
    falling outside the crop are marked invisible.
    '''
    box = crop_box(keypoints, alpha, image_size, skeleton)
    visible = visibility_mask(keypoints, box)
    origin = box[..., None, :2]
    scale = 1.0 / alpha
    cropped = (keypoints - origin) * scale
    new_cam = torch.cat([
            cam[..., :1] * scale,
            (cam[..., 1:] - box[..., :2]) * scale,
            ], dim=-1)
    return cropped, new_cam, visible


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
