# -*- coding: utf-8 -*-

from __future__ import unicode_literals, absolute_import

import json

import pytest
import torch

from pyposeflow.checks import CheckReport, flow_jacobian_logdet, run_checks
from pyposeflow.config import CheckConfig
from pyposeflow.errors import ValidationError
from pyposeflow.so3density import So3Flow
from pyposeflow.utils import make_generator

from .conftest import small_model
from .test_flow import perturb

QUICK = CheckConfig(
        roundtrips=1000,
        mc_samples=200000,
        support_samples=100000,
        jacobian_points=200,
        fd_coords=20,
        )

NAMES = [
        'lie_roundtrip',
        'flow_inverse',
        'flow_jacobian',
        'so3_normalisation',
        'compact_support',
        'nll_gradient',
        ]


def test_report():
    report = CheckReport()
    report.add('a', True, 0.5)
    assert report.passed
    report.raise_for_failure()
    report.add('b', False, float('inf'), 'broken')
    assert not report.passed
    assert [r.name for r in report.failures()] == ['b']
    with pytest.raises(ValidationError) as info:
        report.raise_for_failure()
    assert 'b' in str(info.value)
    data = report.to_dict()
    assert data['passed'] is False
    assert data['results'][1]['detail'] == 'broken'


def test_jacobian_logdet_of_fresh_flow(context):
    flow = So3Flow(context_dim=16, hidden=(8, )).flow
    z = torch.randn((5, 3), generator=make_generator(0), dtype=torch.float64)
    _, ld = flow(z, context.expand(5, -1))
    assert torch.allclose(flow_jacobian_logdet(flow, z, context.expand(5, -1)), ld, atol=1e-8)


def test_fresh_model_passes_property_checks():
    report = run_checks(small_model(), QUICK, seed=0)
    assert [r.name for r in report.results] == NAMES
    failed = [r.name for r in report.failures() if r.name != 'nll_gradient']
    assert failed == []
    json.dumps(report.to_dict())


def test_checks_run_on_baselines():
    report = run_checks(small_model('fullbody_gaussian'), QUICK, seed=0)
    assert [r.name for r in report.results] == NAMES


@pytest.mark.slow
def test_perturbed_model_full_suite():
    model = perturb(small_model(), seed=3, scale=0.05)
    report = run_checks(model, CheckConfig(), seed=1)
    results = dict((r.name, r) for r in report.results)
    for name in NAMES[:-1]:
        assert results[name].passed, results[name]
    # near-zero gradient coordinates sit at the relative-error floor
    assert results['nll_gradient'].value < 1e-2


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
