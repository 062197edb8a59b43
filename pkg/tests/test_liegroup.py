# -*- coding: utf-8 -*-

from __future__ import unicode_literals, absolute_import

import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest
from scipy import stats
import torch

from pyposeflow import liegroup
from pyposeflow.utils import make_generator

finite = st.floats(min_value=-4.0, max_value=4.0, allow_nan=False)
vectors = st.tuples(finite, finite, finite).map(
        lambda t: torch.tensor(t, dtype=torch.float64)
        )


def principal(v, margin=1e-3):
    '''Scale ``v`` into the principal ball, away from pi.'''
    limit = math.pi - margin
    n = float(v.norm())
    return v if n < limit else v * (limit / n)


def test_hat_examples():
    assert torch.equal(liegroup.hat(torch.zeros(3)), torch.zeros(3, 3, dtype=torch.float64))
    expected = torch.tensor(
            [[0.0, -3.0, 2.0], [3.0, 0.0, -1.0], [-2.0, 1.0, 0.0]],
            dtype=torch.float64,
            )
    assert torch.equal(liegroup.hat(torch.tensor([1.0, 2.0, 3.0])), expected)


@given(vectors, vectors)
def test_hat_is_cross_product(v, w):
    k = liegroup.hat(v)
    assert torch.allclose(k @ w, torch.cross(v, w, dim=0), atol=1e-12)
    assert torch.allclose(k @ v, torch.zeros(3, dtype=torch.float64), atol=1e-12)
    assert torch.equal(k, -k.T)
    assert torch.equal(liegroup.vee(k), v)


def test_exp_examples():
    assert torch.allclose(
            liegroup.exp_so3(torch.zeros(3)),
            torch.eye(3, dtype=torch.float64),
            )
    r = liegroup.exp_so3(torch.tensor([0.5 * math.pi, 0.0, 0.0]))
    y = torch.tensor([0.0, 1.0, 0.0], dtype=torch.float64)
    assert torch.allclose(r @ y, torch.tensor([0.0, 0.0, 1.0], dtype=torch.float64), atol=1e-12)


@given(vectors)
def test_exp_is_a_rotation(v):
    assert bool(liegroup.is_rotation(liegroup.exp_so3(v)))


@given(
        st.floats(min_value=0.0, max_value=1.5),
        st.floats(min_value=0.0, max_value=1.5),
        vectors,
        )
def test_one_parameter_subgroup(a, b, axis):
    n = float(axis.norm())
    if n < 1e-3:
        return
    u = axis / n
    lhs = liegroup.exp_so3(a * u) @ liegroup.exp_so3(b * u)
    assert torch.allclose(lhs, liegroup.exp_so3((a + b) * u), atol=1e-12)


@given(vectors)
def test_log_inverts_exp(v):
    v = principal(v)
    assert torch.allclose(liegroup.log_so3(liegroup.exp_so3(v)), v, atol=1e-9)


def test_log_examples():
    assert torch.allclose(
            liegroup.log_so3(torch.eye(3, dtype=torch.float64)),
            torch.zeros(3, dtype=torch.float64),
            )
    r = torch.diag(torch.tensor([1.0, -1.0, -1.0], dtype=torch.float64))
    assert torch.allclose(
            liegroup.log_so3(r),
            torch.tensor([math.pi, 0.0, 0.0], dtype=torch.float64),
            atol=1e-9,
            )


@pytest.mark.parametrize('axis, expected', [
        ([0.36, -0.48, 0.8], [0.36, -0.48, 0.8]),
        ([0.48, -0.8, 0.36], [-0.48, 0.8, -0.36]),
        ([0.0, 0.0, -1.0], [0.0, 0.0, 1.0]),
        ])
def test_log_at_pi_makes_largest_component_positive(axis, expected):
    u = torch.tensor(axis, dtype=torch.float64)
    expected = math.pi * torch.tensor(expected, dtype=torch.float64)
    for sign in (1.0, -1.0):
        v = liegroup.log_so3(liegroup.exp_so3(sign * math.pi * u))
        assert torch.allclose(v, expected, atol=1e-9)


def test_log_below_pi_keeps_axis_sign():
    u = torch.tensor([0.48, -0.8, 0.36], dtype=torch.float64)
    v = (math.pi - 1e-6) * u
    assert torch.allclose(liegroup.log_so3(liegroup.exp_so3(v)), v, atol=1e-9)


@pytest.mark.parametrize('eps', [1e-5, 1e-7, 0.0])
def test_log_near_pi(eps):
    u = torch.tensor([1.0, 2.0, -2.0], dtype=torch.float64) / 3.0
    v = (math.pi - eps) * u
    back = liegroup.exp_so3(liegroup.log_so3(liegroup.exp_so3(v)))
    assert torch.allclose(back, liegroup.exp_so3(v), atol=1e-9)
    assert abs(float(liegroup.log_so3(liegroup.exp_so3(v)).norm()) - (math.pi - eps)) < 1e-9


def test_exp_log_roundtrip_on_random_rotations(rng):
    r = liegroup.random_rotation(rng, (2000, ))
    assert bool(liegroup.is_rotation(r).all())
    back = liegroup.exp_so3(liegroup.log_so3(r))
    assert float((back - r).abs().max()) < 1e-9


def test_det_jac_exp_values():
    zero = torch.zeros(3, dtype=torch.float64)
    assert float(liegroup.det_jac_exp(zero)) == 1.0
    v = torch.tensor([math.pi, 0.0, 0.0], dtype=torch.float64)
    assert abs(float(liegroup.det_jac_exp(v)) - 4.0 / math.pi ** 2) < 1e-12
    v = torch.tensor([2.0 * math.pi, 0.0, 0.0], dtype=torch.float64)
    assert abs(float(liegroup.det_jac_exp(v))) < 1e-12


def test_det_jac_exp_continuous_at_switch():
    below = torch.tensor([1e-4 * (1 - 1e-9), 0.0, 0.0], dtype=torch.float64)
    above = torch.tensor([1e-4 * (1 + 1e-9), 0.0, 0.0], dtype=torch.float64)
    assert abs(float(liegroup.det_jac_exp(below) - liegroup.det_jac_exp(above))) < 1e-10


@given(vectors)
def test_log_det_matches_det(v):
    v = principal(v)
    assert abs(
            math.exp(float(liegroup.log_det_jac_exp(v)))
            - float(liegroup.det_jac_exp(v))
            ) < 1e-12


def test_det_jac_exp_against_autograd(rng):
    v = torch.randn((50, 3), generator=rng, dtype=torch.float64)
    for x in v:
        jac = torch.autograd.functional.jacobian(
                lambda y: liegroup.log_so3(
                        liegroup.exp_so3(x) @ liegroup.exp_so3(y)
                        ),
                torch.zeros(3, dtype=torch.float64),
                )
        # d log(exp(v) exp(y)) / dy at 0 is the inverse right Jacobian
        x = liegroup.log_so3(liegroup.exp_so3(x))
        assert abs(1.0 / float(torch.linalg.det(jac)) - float(liegroup.det_jac_exp(x))) < 1e-7


def test_equivalent_angles():
    v = torch.tensor([0.3, 0.0, 0.0], dtype=torch.float64)
    out, degenerate = liegroup.equivalent_angles(v)
    assert not degenerate
    assert out.shape == (3, 3)
    norms = sorted(float(x) for x in out[:, 0])
    assert np.allclose(norms, [0.3 - 2 * math.pi, 0.3, 0.3 + 2 * math.pi])
    r = liegroup.exp_so3(v)
    for x in out:
        assert torch.allclose(liegroup.exp_so3(x), r, atol=1e-12)


def test_equivalent_angles_degenerate():
    out, degenerate = liegroup.equivalent_angles(torch.zeros(3, dtype=torch.float64))
    assert degenerate
    assert out.shape == (1, 3)
    with pytest.raises(ValueError):
        liegroup.equivalent_angles(torch.zeros(2, 3, dtype=torch.float64))


def test_random_rotation_is_haar():
    r = liegroup.random_rotation(make_generator(5), (20000, ))
    angles = liegroup.rotation_angle(r).numpy()
    # Haar angle law: density (1 - cos t) / pi on [0, pi]
    result = stats.kstest(angles, lambda t: (t - np.sin(t)) / math.pi)
    assert result.pvalue > 1e-3


def test_random_rotation_seeded():
    a = liegroup.random_rotation(make_generator(9), (4, ))
    b = liegroup.random_rotation(make_generator(9), (4, ))
    assert torch.equal(a, b)


@settings(max_examples=50)
@given(st.lists(finite, min_size=6, max_size=6))
def test_matrix_from_6d(raw):
    raw = torch.tensor(raw, dtype=torch.float64)
    a1, a2 = raw[:3], raw[3:]
    if float(a1.norm()) < 1e-2 or float(torch.cross(a1, a2, dim=0).norm()) < 1e-2:
        return
    r = liegroup.matrix_from_6d(raw)
    assert bool(liegroup.is_rotation(r, tol=1e-9))
    assert torch.allclose(r[:, 0], a1 / a1.norm(), atol=1e-12)


def test_identity_6d():
    raw = torch.tensor([1.0, 0.0, 0.0, 0.0, 1.0, 0.0], dtype=torch.float64)
    assert torch.allclose(liegroup.matrix_from_6d(raw), torch.eye(3, dtype=torch.float64))


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
