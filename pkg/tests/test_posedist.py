# -*- coding: utf-8 -*-

from __future__ import unicode_literals, absolute_import

import pytest
import torch

from pyposeflow import constants
from pyposeflow.config import ModelConfig
from pyposeflow.errors import ValidationError
from pyposeflow.liegroup import is_rotation, random_rotation
from pyposeflow.posedist import PoseShapeModel, build_model
from pyposeflow.so3density import So3Flow
from pyposeflow.utils import make_generator

from .conftest import small_model
from .test_flow import perturb


@pytest.fixture
def trained_like():
    # random weights everywhere so contexts actually matter
    return perturb(small_model(), seed=11, scale=0.05)


def test_structure(model):
    assert isinstance(model, PoseShapeModel)
    assert model.variant == 'so3flow'
    assert len(model.parts) == len(model.contexts) == constants.NUM_PARTS
    assert all(isinstance(p, So3Flow) for p in model.parts)
    # context input: features, camera, R_glob, shape and 9 per ancestor
    for i in range(1, 24):
        first = model.contexts[i - 1][0]
        assert first.in_features == 512 + 3 + 9 + 10 + 9 * len(model.tree.ancestors(i))


def test_condition_outputs(model, dataset):
    cond = model.condition(dataset.keypoints, dataset.visible)
    n = len(dataset)
    assert cond.features.shape == (n, 512)
    assert cond.cam.shape == (n, 3)
    assert bool((cond.cam[:, 0] > 0).all())
    assert bool(is_rotation(cond.glob, 1e-9).all())
    assert cond.shape.mean.shape == cond.shape.log_var.shape == (n, 10)


def test_joint_log_prob_is_finite(trained_like, dataset):
    cond = trained_like.condition(dataset.keypoints, dataset.visible)
    lp = trained_like.joint_log_prob(dataset.rots, dataset.betas, cond)
    assert lp.shape == (len(dataset), )
    assert bool(torch.isfinite(lp).all())


def test_joint_log_prob_factorises(trained_like, dataset):
    cond = trained_like.condition(dataset.keypoints, dataset.visible)
    betas = dataset.betas
    total = trained_like.joint_log_prob(dataset.rots, betas, cond)
    parts = sum(
            trained_like.part_log_prob(i, dataset.rots, betas, cond)
            for i in range(1, 24)
            )
    assert torch.allclose(total, cond.shape.log_prob(betas) + parts, atol=1e-10)


def test_ancestral_sample_matches_log_prob(trained_like, dataset):
    with torch.no_grad():
        cond = trained_like.condition(dataset.keypoints, dataset.visible)
        rots, betas, logp, order = trained_like.ancestral_sample(cond, make_generator(0), 4)
        assert rots.shape == (4, len(dataset), 23, 3, 3)
        assert betas.shape == (4, len(dataset), 10)
        assert bool(is_rotation(rots, 1e-9).all())
        assert order == trained_like.tree.topological_order()
        again = trained_like.joint_log_prob(rots, betas, cond.expand((4, )))
    assert torch.allclose(logp, again, atol=1e-8)


def test_sampling_is_seeded(trained_like, dataset):
    with torch.no_grad():
        cond = trained_like.condition(dataset.keypoints, dataset.visible)
        a = trained_like.ancestral_sample(cond, make_generator(5))[0]
        b = trained_like.ancestral_sample(cond, make_generator(5))[0]
    assert torch.equal(a, b)


def test_part_depends_only_on_ancestors(trained_like, dataset, rng):
    cond = trained_like.condition(dataset.keypoints, dataset.visible)
    i = 21
    before = trained_like.part_log_prob(i, dataset.rots, dataset.betas, cond)
    others = dataset.rots.clone()
    # left arm parts are not ancestors of the right wrist
    for j in (16, 18, 20):
        others[:, j - 1] = random_rotation(rng, (len(dataset), ))
    after = trained_like.part_log_prob(i, others, dataset.betas, cond)
    assert torch.equal(before, after)
    ancestor = dataset.rots.clone()
    ancestor[:, 19 - 1] = random_rotation(rng, (len(dataset), ))
    changed = trained_like.part_log_prob(i, ancestor, dataset.betas, cond)
    assert not torch.allclose(before, changed)


def test_context_checks_ancestor_count(model, dataset):
    cond = model.condition(dataset.keypoints, dataset.visible)
    rots = dataset.rots[:, :2]
    with pytest.raises(ValidationError):
        model.context(21, cond, dataset.betas, rots)
    with pytest.raises(ValidationError):
        model.context(1, cond, dataset.betas, [dataset.rots[:, 0]])
    c = model.context(1, cond, dataset.betas, [])
    assert c.shape == (len(dataset), 16)


def test_point_estimate(trained_like, dataset):
    with torch.no_grad():
        cond = trained_like.condition(dataset.keypoints, dataset.visible)
        rots, betas = trained_like.point_estimate(cond)
    assert rots.shape == (len(dataset), 23, 3, 3)
    assert bool(is_rotation(rots, 1e-9).all())
    assert torch.equal(betas, cond.shape.mean)


def test_fresh_model_point_is_rest_pose(model, dataset):
    with torch.no_grad():
        cond = model.condition(dataset.keypoints, dataset.visible)
        rots, _ = model.point_estimate(cond)
    eye = torch.eye(3, dtype=torch.float64).expand_as(rots)
    assert torch.allclose(rots, eye, atol=1e-12)


def test_nll_gradients_reach_every_module(trained_like, dataset):
    cond = trained_like.condition(dataset.keypoints, dataset.visible)
    loss = -trained_like.joint_log_prob(dataset.rots, dataset.betas, cond).mean()
    loss.backward()
    for name in ('encoder', 'head', 'contexts', 'parts'):
        grads = [p.grad for p in getattr(trained_like, name).parameters()]
        assert any(g is not None and float(g.abs().sum()) > 0 for g in grads), name


@pytest.mark.parametrize('variant', [
        'so3flow',
        'euclidean_flow',
        'euclidean_gaussian',
        'euclidean_mdn',
        'fullbody_gaussian',
        'fullbody_mdn',
        'fullbody_flow',
        ])
def test_build_model_variants(variant):
    model = small_model(variant)
    assert model.variant == variant


def test_build_model_rejects_unknown_variant():
    with pytest.raises(ValueError):
        build_model(ModelConfig(variant='matrix_fisher'))


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
