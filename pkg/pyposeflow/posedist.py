# -*- coding: utf-8 -*-

'''Ancestor-conditioned distribution over body pose and shape.

``p(rots, beta | X) = p(beta | X) * prod_i p(R_i | c_i)`` where ``c_i`` is
computed from the observation features, camera, global rotation, shape and
the rotations of the ancestors of part ``i``. Density evaluation conditions
on the given ancestor rotations; sampling walks the tree root to leaves.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'PoseShapeModel',
        'build_model',
        ]

import logging

import torch
from torch import nn

from . import constants
from .base import PoseModel
from .baselines import EuclideanPart, FullBodyModel
from .config import ModelConfig
from .errors import ValidationError
from .so3density import So3Flow
from .utils import check_variant, mlp

logger = logging.getLogger(__name__)

PART_KINDS = {
        'so3flow': None,
        'euclidean_flow': 'flow',
        'euclidean_gaussian': 'gaussian',
        'euclidean_mdn': 'mdn',
        }


class PoseShapeModel(PoseModel):
    '''Shape Gaussian plus one conditional rotation density per body part.'''

    def __init__(
            self,
            variant='so3flow',
            skeleton=None,
            context_dim=constants.CONTEXT_DIM,
            context_hidden=constants.CONTEXT_HIDDEN,
            **flow_kwargs
            ):
        super(PoseShapeModel, self).__init__(skeleton)
        if variant not in PART_KINDS:
            raise ValueError('not a per-part variant: %r' % (variant, ))
        self.variant = variant
        self.context_dim = context_dim

        base_dim = (
                constants.FEATURE_DIM
                + constants.CAMERA_DIM
                + 9
                + constants.SHAPE_DIM
                )
        self.contexts = nn.ModuleList()
        self.parts = nn.ModuleList()
        for i in range(1, self.tree.num_joints):
            in_dim = base_dim + 9 * len(self.tree.ancestors(i))
            self.contexts.append(mlp([in_dim, context_hidden, context_dim]))
            self.parts.append(self._make_part(variant, context_dim, flow_kwargs))
        logger.debug(
                'built %s model with %d parts',
                variant,
                len(self.parts),
                )

    @staticmethod
    def _make_part(variant, context_dim, flow_kwargs):
        kind = PART_KINDS[variant]
        if kind is None:
            kwargs = dict(flow_kwargs)
            kwargs.pop('num_components', None)
            return So3Flow(context_dim=context_dim, **kwargs)
        return EuclideanPart(kind, context_dim, **flow_kwargs)

    def context(self, i, cond, betas, ancestors):
        '''Context vector ``c_i`` of part ``i`` (1-based).

        ``ancestors`` holds the rotations of ``tree.ancestors(i)`` in
        root-to-leaf order, shaped ``(..., |A(i)|, 3, 3)`` or as a list.
        '''
        expected = len(self.tree.ancestors(i))
        if isinstance(ancestors, (list, tuple)):
            count = len(ancestors)
            ancestors = (
                    torch.stack(list(ancestors), dim=-3)
                    if ancestors
                    else None
                    )
        else:
            count = ancestors.shape[-3]
        if count != expected:
            raise ValidationError('part %d expects %d ancestor rotations; got %d' % (
                    i,
                    expected,
                    count,
                    ))
        inputs = [self.global_inputs(cond, betas)]
        if expected:
            inputs.append(ancestors.flatten(-3))
        return self.contexts[i - 1](torch.cat(inputs, dim=-1))

    def _ancestors_of(self, i, rots):
        idx = [a - 1 for a in self.tree.ancestors(i)]
        return rots[..., idx, :, :]

    def part_log_prob(self, i, rots, betas, cond):
        '''``log p(R_i | c_i)`` using the given ancestor rotations.'''
        c = self.context(i, cond, betas, self._ancestors_of(i, rots))
        return self.parts[i - 1].log_prob(rots[..., i - 1, :, :], c)

    def pose_log_prob(self, rots, betas, cond):
        total = torch.zeros(betas.shape[:-1], dtype=torch.float64)
        for i in self.tree.topological_order():
            total = total + self.part_log_prob(i, rots, betas, cond)
        return total

    def sample_pose(self, cond, betas, rng=None):
        order = self.tree.topological_order()
        sampled = {}
        total = torch.zeros(betas.shape[:-1], dtype=torch.float64)
        for i in order:
            ancestors = [sampled[a] for a in self.tree.ancestors(i)]
            c = self.context(i, cond, betas, ancestors)
            rot, lp, _ = self.parts[i - 1].sample(c, rng)
            sampled[i] = rot
            total = total + lp
        rots = torch.stack([sampled[i] for i in range(1, self.tree.num_joints)], dim=-3)
        return rots, total, order

    def point_pose(self, cond, betas):
        estimates = {}
        for i in self.tree.topological_order():
            ancestors = [estimates[a] for a in self.tree.ancestors(i)]
            c = self.context(i, cond, betas, ancestors)
            estimates[i] = self.parts[i - 1].point(c)
        return torch.stack(
                [estimates[i] for i in range(1, self.tree.num_joints)],
                dim=-3,
                )


def build_model(cfg=None, skeleton=None):
    '''Construct the model named by ``cfg.variant``.'''
    cfg = cfg if cfg is not None else ModelConfig()
    check_variant(cfg.variant)
    flow_kwargs = dict(
            num_layers=cfg.num_layers,
            hidden=tuple(cfg.hidden),
            num_bins=cfg.num_bins,
            base_variance=cfg.base_variance,
            scaled_tanh=cfg.scaled_tanh,
            num_components=cfg.mdn_components,
            )
    if cfg.variant.startswith('fullbody_'):
        return FullBodyModel(
                cfg.variant[len('fullbody_'):],
                skeleton,
                cfg.context_dim,
                **flow_kwargs
                )
    flow_kwargs['radius'] = cfg.radius
    return PoseShapeModel(
            cfg.variant,
            skeleton,
            cfg.context_dim,
            cfg.context_hidden,
            **flow_kwargs
            )


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
