# -*- coding: utf-8 -*-

from __future__ import unicode_literals, absolute_import

import pytest
import torch

from pyposeflow.bodymodel import default_skeleton
from pyposeflow.config import ModelConfig, SynthConfig
from pyposeflow.posedist import build_model
from pyposeflow.synth import synth_dataset
from pyposeflow.utils import make_generator


def small_config(variant='so3flow', **kwargs):
    return ModelConfig(
            variant=variant,
            context_dim=16,
            context_hidden=32,
            hidden=[16, 16],
            **kwargs
            )


def small_model(variant='so3flow', seed=0, **kwargs):
    torch.manual_seed(seed)
    return build_model(small_config(variant, **kwargs))


@pytest.fixture
def rng():
    return make_generator(1234)


@pytest.fixture(scope='session')
def skeleton():
    return default_skeleton()


@pytest.fixture
def model():
    return small_model()


@pytest.fixture
def dataset():
    return synth_dataset(6, SynthConfig(), make_generator(7))


@pytest.fixture
def context():
    return torch.randn((1, 16), generator=make_generator(3), dtype=torch.float64)


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
