# -*- coding: utf-8 -*-

'''Losses and the training loop.

``L = w_nll * L_nll + w_glob * L_glob [+ w_2d * L_2d] [+ w_3d * L_3d]``.
The 2D term compares reparameterised ancestral samples, projected with the
predicted camera, against the visible observed keypoints; coordinates are
measured in half-image units so a loss of 1 is a 128 px error.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'nll_loss',
        'glob_loss',
        'kp2d_sample_loss',
        'point3d_loss',
        'total_loss',
        'TrainResult',
        'train_loop',
        ]

import collections
import csv
import io
import logging
import os

import torch
from tqdm import tqdm

from . import checkpoint
from . import constants
from .config import ModelConfig, TrainConfig
from .bodymodel import forward_kinematics, project
from .errors import NumericalError
from .optim import Adam
from .posedist import build_model
from .utils import make_generator

logger = logging.getLogger(__name__)

_HALF_IMAGE = 0.5 * constants.IMAGE_SIZE

LOSS_COLUMNS = ('epoch', 'total', 'nll', 'glob', 'kp2d', 'point3d', )


def _condition(model, batch, cond):
    return cond if cond is not None else model.condition(batch.keypoints, batch.visible)


def nll_loss(model, batch, cond=None, rng=None, sample_shape=True):
    '''Mean ``-log p(rots, beta | X)`` with ground-truth ancestor contexts.

    With ``sample_shape`` the pose contexts see a reparameterised shape
    sample; otherwise the shape mean.
    '''
    cond = _condition(model, batch, cond)
    pose_betas = cond.shape.sample(rng) if sample_shape else cond.shape.mean
    nll = -model.joint_log_prob(batch.rots, batch.betas, cond, pose_betas)
    bad = ~torch.isfinite(nll)
    if bool(bad.any()):
        index = int(torch.nonzero(bad)[0])
        raise NumericalError('non-finite NLL', where='sample %d' % (index, ))
    return nll.mean()


def glob_loss(model, batch, cond=None):
    '''Mean squared Frobenius distance of predicted and true global rotation.'''
    cond = _condition(model, batch, cond)
    return ((cond.glob - batch.glob) ** 2).sum(dim=(-2, -1)).mean()


def _masked_sq_error(keypoints, target, visible):
    err = (((keypoints - target) / _HALF_IMAGE) ** 2).sum(dim=-1)
    mask = visible.to(err.dtype).expand(err.shape)
    total = mask.sum()
    if float(total) == 0.0:
        return (err * mask).sum()
    return (err * mask).sum() / total


def kp2d_sample_loss(model, batch, n_samples=2, rng=None, cond=None):
    '''Visibility-masked squared reprojection error of pose/shape samples.'''
    if n_samples < 1:
        raise ValueError('n_samples must be at least 1')
    cond = _condition(model, batch, cond)
    rots, betas, _, _ = model.ancestral_sample(cond, rng, n_samples)
    joints = forward_kinematics(model.skeleton, betas, rots, cond.glob)
    keypoints = project(joints, cond.cam)
    return _masked_sq_error(keypoints, batch.keypoints, batch.visible)


def point3d_loss(model, batch, cond=None):
    '''Mean squared joint distance (m^2) of the point estimate.'''
    cond = _condition(model, batch, cond)
    rots, betas = model.point_estimate(cond)
    joints = forward_kinematics(model.skeleton, betas, rots, cond.glob)
    return ((joints - batch.joints3d) ** 2).sum(dim=-1).mean()


def total_loss(model, batch, weights, rng=None):
    '''Weighted sum of the enabled terms and the individual terms.'''
    cond = model.condition(batch.keypoints, batch.visible)
    active = weights.active()
    parts = collections.OrderedDict()
    parts['nll'] = nll_loss(model, batch, cond, rng)
    parts['glob'] = glob_loss(model, batch, cond)
    if 'kp2d' in active:
        parts['kp2d'] = kp2d_sample_loss(
                model,
                batch,
                weights.kp2d_samples,
                rng,
                cond,
                )
    if 'point3d' in active:
        parts['point3d'] = point3d_loss(model, batch, cond)
    total = sum(active[name] * value for name, value in parts.items())
    return total, parts


TrainResult = collections.namedtuple('TrainResult', [
        'model',
        'history',
        'checkpoint',
        ])


def _write_history(path, history):
    with io.open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(LOSS_COLUMNS)
        for row in history:
            writer.writerow([row.get(k, '') for k in LOSS_COLUMNS])


def train_loop(
        dataset,
        train_cfg=None,
        model_cfg=None,
        seed=0,
        out_dir=None,
        resume=None,
        skeleton=None,
        ):
    '''Fit a model on ``dataset``; one checkpoint and CSV row per epoch.

    On a non-finite loss or gradient the last good state is checkpointed to
    ``failed.ppf`` before :class:`NumericalError` propagates.
    '''
    train_cfg = train_cfg if train_cfg is not None else TrainConfig()
    model_cfg = model_cfg if model_cfg is not None else ModelConfig()

    torch.manual_seed(seed)
    model = build_model(model_cfg, skeleton)
    optimizer = Adam(model.parameters(), lr=train_cfg.lr)
    rng = make_generator(seed)
    history = []
    start = 0

    if resume is not None:
        state = checkpoint.load_checkpoint(resume, model, optimizer, rng)
        start = state.epoch
        history = list(state.history)
        logger.info('resuming from %s at epoch %d', resume, start)

    ckpt_path = None
    if out_dir is not None:
        if not os.path.isdir(out_dir):
            os.makedirs(out_dir)
        ckpt_path = os.path.join(out_dir, 'checkpoint.ppf')

    def save(path, epoch):
        checkpoint.save_checkpoint(
                path,
                model,
                model_cfg,
                optimizer=optimizer,
                rng=rng,
                epoch=epoch,
                history=history,
                )

    model.train()
    for epoch in range(start, train_cfg.epochs):
        sums = collections.defaultdict(float)
        count = 0
        batches = dataset.batches(train_cfg.batch_size, rng)
        steps = (len(dataset) + train_cfg.batch_size - 1) // train_cfg.batch_size
        bar = tqdm(
                batches,
                total=steps,
                desc='epoch %d' % (epoch + 1, ),
                disable=not train_cfg.progress,
                leave=False,
                )
        for batch in bar:
            optimizer.zero_grad()
            try:
                loss, parts = total_loss(model, batch, train_cfg.weights, rng)
                if not bool(torch.isfinite(loss)):
                    raise NumericalError('non-finite loss', where='epoch %d' % (epoch + 1, ))
                loss.backward()
                for name, p in model.named_parameters():
                    if p.grad is not None and not bool(torch.isfinite(p.grad).all()):
                        raise NumericalError('non-finite gradient', where=name)
            except NumericalError:
                if out_dir is not None:
                    save(os.path.join(out_dir, 'failed.ppf'), epoch)
                logger.error('aborting training at epoch %d', epoch + 1)
                raise
            optimizer.step()
            n = len(batch)
            count += n
            sums['total'] += float(loss) * n
            for name, value in parts.items():
                sums[name] += float(value) * n
            bar.set_postfix(loss='%.4f' % (float(loss), ))

        row = {'epoch': epoch + 1}
        row.update((k, v / count) for k, v in sums.items())
        history.append(row)
        logger.info(
                'epoch %d/%d: loss %.5f (%s)',
                epoch + 1,
                train_cfg.epochs,
                row['total'],
                ', '.join(
                        '%s %.4f' % (k, row[k])
                        for k in LOSS_COLUMNS[2:]
                        if k in row
                        ),
                )
        if out_dir is not None:
            save(ckpt_path, epoch + 1)
            _write_history(os.path.join(out_dir, 'losses.csv'), history)

    return TrainResult(model, history, ckpt_path)


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
