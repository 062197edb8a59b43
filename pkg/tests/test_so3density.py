# -*- coding: utf-8 -*-

from __future__ import unicode_literals, absolute_import

import math

import pytest
import torch

from pyposeflow import constants
from pyposeflow.liegroup import det_jac_exp, exp_so3, is_rotation, log_so3, random_rotation
from pyposeflow.so3density import So3Flow, pushforward_log_prob, so3_log_prob, so3_sample
from pyposeflow.utils import make_generator

from .test_flow import perturb


def uniform_ball_log_prob(v, context=None):
    '''Haar measure written as a density on the principal ball.'''
    inside = v.norm(dim=-1) < math.pi
    lp = torch.log(det_jac_exp(v).clamp_min(1e-300)) - constants.LOG_HAAR_VOLUME
    return torch.where(inside, lp, torch.full_like(lp, -math.inf))


def test_haar_density_is_uniform(rng):
    rot = random_rotation(rng, (500, ))
    lp = pushforward_log_prob(rot, uniform_ball_log_prob)
    assert torch.allclose(lp, torch.zeros_like(lp), atol=1e-9)


def test_identity_uses_single_preimage():
    rot = torch.eye(3, dtype=torch.float64)[None]
    lp = pushforward_log_prob(rot, uniform_ball_log_prob)
    assert abs(float(lp)) < 1e-9


def test_log_prob_sums_preimages(context):
    model = perturb(So3Flow(context_dim=16, hidden=(16, )), seed=5)
    v = torch.tensor([[0.0, 0.0, 2.5]], dtype=torch.float64)
    rot = exp_so3(v)
    with torch.no_grad():
        lp = so3_log_prob(rot, context, model)
        terms = []
        for k in (0, -1, 1):
            x = (2.5 + 2 * math.pi * k) * torch.tensor([[0.0, 0.0, 1.0]], dtype=torch.float64)
            terms.append(model.flow.log_prob(x, context) - torch.log(det_jac_exp(x)))
        expected = constants.LOG_HAAR_VOLUME + torch.logsumexp(torch.stack(terms), dim=0)
    assert torch.allclose(lp, expected, atol=1e-10)
    # the k = -1 pre-image has norm 2 pi - 2.5 < 1.5 pi and contributes
    assert math.isfinite(float(terms[1]))


def test_sample_is_rotation_with_matching_density(context):
    model = perturb(So3Flow(context_dim=16, hidden=(16, )), seed=6)
    ctx = context.expand(200, -1)
    with torch.no_grad():
        rot, lp, v = so3_sample(ctx, model, make_generator(0))
        assert bool(is_rotation(rot, 1e-9).all())
        assert torch.allclose(exp_so3(v), rot)
        assert torch.allclose(model.log_prob(rot, ctx), lp, atol=1e-10)
    assert bool((v.norm(dim=-1) < constants.SUPPORT_RADIUS).all())


def test_point_lies_on_so3(context):
    model = perturb(So3Flow(context_dim=16, hidden=(16, )), seed=7)
    with torch.no_grad():
        point = model.point(context)
    assert point.shape == (1, 3, 3)
    assert bool(is_rotation(point).all())


def test_fresh_flow_point_is_identity(context):
    model = So3Flow(context_dim=16, hidden=(8, ))
    assert torch.allclose(model.point(context), torch.eye(3, dtype=torch.float64)[None])


def test_rejects_bad_radius():
    with pytest.raises(ValueError):
        So3Flow(context_dim=4, radius=2.5 * math.pi)


@pytest.mark.parametrize('seed', [None, 0, 1])
def test_normalised_over_so3(seed, context):
    model = So3Flow(context_dim=16, hidden=(16, ))
    if seed is not None:
        model = perturb(model, seed=seed, scale=0.1)
    n = 200000
    rot = random_rotation(make_generator(seed or 0), (n, ))
    with torch.no_grad():
        lp = model.log_prob(rot, context.expand(n, -1))
    mass = float(torch.exp(lp).mean())
    assert abs(mass - 1.0) < 0.02


@pytest.mark.parametrize('eps', [1e-7, 1e-9])
def test_density_is_continuous_across_pi(eps, context):
    model = perturb(So3Flow(context_dim=16, hidden=(16, )), seed=5, scale=0.1)
    u = torch.tensor([0.36, -0.48, 0.8], dtype=torch.float64)
    # theta = pi + eps about u is pi - eps about -u: the other chart
    v = torch.stack([(math.pi - eps) * u, (math.pi + eps) * u, math.pi * u])
    with torch.no_grad():
        lp = model.log_prob(exp_so3(v), context.expand(3, -1))
    assert bool(torch.isfinite(lp).all())
    assert abs(float(lp[0] - lp[1])) < 1e-5
    assert abs(float(lp[0] - lp[2])) < 1e-5


def test_identity_flow_trace_matches_quadrature(context):
    '''``E[tr R]`` from samples against a quadrature over the angle.

    A fresh flow is radially symmetric, so its density depends on the
    rotation angle only; under Haar measure the angle has density
    ``(1 - cos t) / pi`` on ``[0, pi]``.
    '''
    model = So3Flow(context_dim=16, hidden=(8, ))
    t = torch.linspace(0.0, math.pi, 20001, dtype=torch.float64)
    v = t[:, None] * torch.tensor([[0.0, 0.0, 1.0]], dtype=torch.float64)
    with torch.no_grad():
        density = torch.exp(model.log_prob(exp_so3(v), context.expand(len(t), -1)))
    haar = (1.0 - torch.cos(t)) / math.pi
    expected = float(torch.trapezoid((1.0 + 2.0 * torch.cos(t)) * density * haar, t))
    assert abs(float(torch.trapezoid(density * haar, t)) - 1.0) < 1e-3

    n = 200000
    with torch.no_grad():
        rot, _, _ = model.sample(context.expand(n, -1), make_generator(6))
    tr = rot.diagonal(dim1=-2, dim2=-1).sum(dim=-1)
    stderr = float(tr.std()) / math.sqrt(n)
    assert abs(float(tr.mean()) - expected) < 3.0 * stderr


def test_log_prob_is_differentiable(context):
    model = perturb(So3Flow(context_dim=16, hidden=(16, )), seed=8)
    rot = random_rotation(make_generator(3), (32, ))
    lp = model.log_prob(rot, context.expand(32, -1))
    lp.sum().backward()
    for p in model.parameters():
        assert bool(torch.isfinite(p.grad).all())


def test_log_of_sample_matches_v_within_pi(context):
    model = So3Flow(context_dim=16, hidden=(8, ))
    with torch.no_grad():
        rot, _, v = model.sample(context.expand(500, -1), make_generator(4))
    inside = v.norm(dim=-1) < math.pi - 1e-3
    assert torch.allclose(log_so3(rot)[inside], v[inside], atol=1e-9)


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
