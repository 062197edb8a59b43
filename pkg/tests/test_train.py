# -*- coding: utf-8 -*-

from __future__ import unicode_literals, absolute_import

import csv
import io
import os

import pytest
import torch

from pyposeflow import train as train_module
from pyposeflow.checkpoint import load_checkpoint, read_manifest
from pyposeflow.config import LossWeights, TrainConfig
from pyposeflow.diff import ParamSet, finite_diff_check
from pyposeflow.errors import NumericalError
from pyposeflow.train import (
        glob_loss,
        kp2d_sample_loss,
        nll_loss,
        point3d_loss,
        total_loss,
        train_loop,
        )
from pyposeflow.utils import make_generator

from .conftest import small_config
from .test_flow import perturb


def test_nll_loss_is_finite_scalar(model, dataset):
    loss = nll_loss(model, dataset, rng=make_generator(0))
    assert loss.dim() == 0
    assert bool(torch.isfinite(loss))
    fixed = nll_loss(model, dataset, sample_shape=False)
    assert torch.equal(fixed, nll_loss(model, dataset, sample_shape=False))


def test_nll_loss_names_bad_sample(model, dataset):
    rots = dataset.rots.clone()
    rots[2] = float('nan')
    with pytest.raises(NumericalError) as info:
        nll_loss(model, dataset._replace(rots=rots), sample_shape=False)
    assert info.value.where == 'sample 2'


def test_glob_loss_zero_for_perfect_prediction(model, dataset):
    cond = model.condition(dataset.keypoints, dataset.visible)
    batch = dataset._replace(glob=cond.glob.detach())
    assert float(glob_loss(model, batch, cond)) == 0.0
    assert float(glob_loss(model, dataset, cond)) > 0.0


def test_kp2d_loss(model, dataset):
    loss = kp2d_sample_loss(model, dataset, 2, make_generator(0))
    assert float(loss) >= 0.0
    loss.backward()
    grads = [p.grad for p in model.head.parameters()]
    assert any(g is not None and float(g.abs().sum()) > 0 for g in grads)
    with pytest.raises(ValueError):
        kp2d_sample_loss(model, dataset, 0)


def test_kp2d_loss_without_visible_joints(model, dataset):
    hidden = dataset._replace(visible=torch.zeros_like(dataset.visible))
    assert float(kp2d_sample_loss(model, hidden, 2, make_generator(0))) == 0.0


def test_glob_and_kp2d_gradients(model, dataset):
    model = perturb(model, seed=6, scale=0.05)
    head = ParamSet(
            (name, p)
            for name, p in model.named_parameters()
            if name.startswith(('encoder.', 'head.'))
            )
    report = finite_diff_check(lambda p: glob_loss(model, dataset), head, n_coords=30)
    assert report.passed, report.worst

    def kp2d(params):
        return kp2d_sample_loss(model, dataset, 2, make_generator(0))

    report = finite_diff_check(kp2d, ParamSet.from_module(model), n_coords=30, seed=1)
    assert report.passed, report.worst


def test_point3d_loss(model, dataset):
    loss = point3d_loss(model, dataset)
    assert float(loss) > 0.0


@pytest.mark.parametrize('enable_2d, enable_3d, expected', [
        (False, False, ['nll', 'glob']),
        (True, False, ['nll', 'glob', 'kp2d']),
        (True, True, ['nll', 'glob', 'kp2d', 'point3d']),
        ])
def test_total_loss_components(model, dataset, enable_2d, enable_3d, expected):
    weights = LossWeights(enable_2d_samples=enable_2d, enable_3d_point=enable_3d)
    total, parts = total_loss(model, dataset, weights, make_generator(0))
    assert list(parts) == expected
    active = weights.active()
    recomputed = sum(active[k] * float(v) for k, v in parts.items())
    assert float(total) == pytest.approx(recomputed, rel=1e-12)


def read_losses(path):
    with io.open(path, encoding='utf-8') as f:
        return list(csv.DictReader(f))


def test_train_loop_writes_outputs(tmp_path, dataset):
    cfg = TrainConfig(epochs=2, batch_size=4, progress=False)
    result = train_loop(dataset, cfg, small_config(), seed=0, out_dir=str(tmp_path))
    assert len(result.history) == 2
    assert os.path.exists(result.checkpoint)
    rows = read_losses(str(tmp_path / 'losses.csv'))
    assert [r['epoch'] for r in rows] == ['1', '2']
    assert set(rows[0]) == {'epoch', 'total', 'nll', 'glob', 'kp2d', 'point3d'}
    manifest = read_manifest(result.checkpoint)
    assert manifest['epoch'] == 2
    assert manifest['optimizer']['step'] == 4


def test_training_reduces_loss(dataset):
    weights = LossWeights(enable_2d_samples=False)
    cfg = TrainConfig(epochs=20, batch_size=6, lr=5e-3, progress=False, weights=weights)
    result = train_loop(dataset, cfg, small_config(), seed=0)
    assert result.history[-1]['total'] < result.history[0]['total']
    assert result.checkpoint is None


def test_train_loop_is_reproducible(dataset):
    cfg = TrainConfig(epochs=1, batch_size=3, progress=False)
    a = train_loop(dataset, cfg, small_config(), seed=4)
    b = train_loop(dataset, cfg, small_config(), seed=4)
    assert a.history == b.history
    for p, q in zip(a.model.parameters(), b.model.parameters()):
        assert torch.equal(p, q)


def test_resume_matches_uninterrupted_run(tmp_path, dataset):
    full = train_loop(
            dataset,
            TrainConfig(epochs=2, batch_size=3, progress=False),
            small_config(),
            seed=1,
            )
    first = train_loop(
            dataset,
            TrainConfig(epochs=1, batch_size=3, progress=False),
            small_config(),
            seed=1,
            out_dir=str(tmp_path),
            )
    resumed = train_loop(
            dataset,
            TrainConfig(epochs=2, batch_size=3, progress=False),
            small_config(),
            seed=1,
            resume=first.checkpoint,
            )
    assert len(resumed.history) == 2
    for p, q in zip(full.model.parameters(), resumed.model.parameters()):
        assert torch.allclose(p, q, atol=1e-12)


def test_nonfinite_loss_saves_failed_checkpoint(tmp_path, dataset):
    rots = dataset.rots.clone()
    rots[:] = float('nan')
    bad = dataset._replace(rots=rots)
    with pytest.raises(NumericalError):
        train_loop(
                bad,
                TrainConfig(epochs=1, batch_size=6, progress=False),
                small_config(),
                out_dir=str(tmp_path),
                )
    assert os.path.exists(str(tmp_path / 'failed.ppf'))


def test_nonfinite_gradient_stops_before_step(tmp_path, dataset, monkeypatch):
    poisoned = []

    def nan_gradient(model, batch, weights, rng):
        total, parts = total_loss(model, batch, weights, rng)
        name, p = next(iter(model.named_parameters()))
        poisoned.append(name)
        # value 0, gradient 0 * inf
        return total + 0.0 * torch.sqrt(p - p.detach()).sum(), parts

    monkeypatch.setattr(train_module, 'total_loss', nan_gradient)
    with pytest.raises(NumericalError) as info:
        train_loop(
                dataset,
                TrainConfig(epochs=1, batch_size=6, progress=False),
                small_config(),
                out_dir=str(tmp_path),
                )
    assert info.value.where == poisoned[0]
    state = load_checkpoint(str(tmp_path / 'failed.ppf'))
    for p in state.model.parameters():
        assert bool(torch.isfinite(p).all())


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
