# -*- coding: utf-8 -*-

'''Accuracy, consistency and diversity metrics, and prior-guided fitting.

3D errors are in millimetres, 2D errors in pixels. Accuracy metrics use the
skeleton's ``accuracy_joints`` subset, consistency and diversity metrics its
``consistency_joints`` subset. Spreads are averaged over joints first, then
over inputs.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'mpjpe',
        'mpjpe_pa',
        'similarity_align',
        'crop_dataset',
        'MinSampleCurve',
        'min_sample_curve',
        'kp2d_error',
        'kp3d_spread',
        'directional_std',
        'LikelihoodValidation',
        'point_ll_validation',
        'FitResult',
        'fit_with_prior',
        'MetricsReport',
        'evaluate',
        'write_report',
        ]

import collections
import csv
import dataclasses
import io
import json
import logging
import os

import numpy as np
import torch

from . import constants
from .bodymodel import crop_observation, forward_kinematics, project
from .config import EvalConfig, FitConfig
from .liegroup import exp_so3
from .utils import evaluation_mode

logger = logging.getLogger(__name__)

DEFAULT_CHUNK = 64


def _subset(joints, index):
    return joints if index is None else joints[..., list(index), :]


def mpjpe(pred, gt, joints=None):
    '''Mean per-joint position error (mm) after subtracting the root joint.'''
    pred = pred - pred[..., :1, :]
    gt = gt - gt[..., :1, :]
    dist = (_subset(pred, joints) - _subset(gt, joints)).norm(dim=-1)
    return constants.MM_PER_M * dist.mean(dim=-1)


def similarity_align(pred, gt):
    '''Best ``s R pred + t`` in the least-squares sense, with det(R) = +1.'''
    mu1 = pred.mean(dim=-2, keepdim=True)
    mu2 = gt.mean(dim=-2, keepdim=True)
    x1 = pred - mu1
    x2 = gt - mu2
    var1 = (x1 ** 2).sum(dim=(-2, -1))
    k = x1.transpose(-1, -2) @ x2
    u, _, vh = torch.linalg.svd(k)
    v = vh.transpose(-1, -2)
    # flip the weakest direction when U V^T is a reflection
    sign = torch.sign(torch.linalg.det(u @ vh))
    z = torch.ones(k.shape[:-1], dtype=k.dtype)
    z[..., -1] = sign
    r = v @ (z[..., :, None] * u.transpose(-1, -2))
    scale = (r * k.transpose(-1, -2)).sum(dim=(-2, -1)) / var1
    return scale[..., None, None] * (x1 @ r.transpose(-1, -2)) + mu2


def mpjpe_pa(pred, gt, joints=None):
    '''MPJPE (mm) after similarity Procrustes alignment of ``pred`` to ``gt``.'''
    pred = _subset(pred, joints)
    gt = _subset(gt, joints)
    aligned = similarity_align(pred, gt)
    return constants.MM_PER_M * (aligned - gt).norm(dim=-1).mean(dim=-1)


def crop_dataset(data, alpha, skeleton=None):
    '''Torso-centred crop of every observation, resized back to full size.'''
    if alpha >= 1.0:
        return data
    keypoints, cam, visible = crop_observation(
            data.keypoints,
            data.cam,
            alpha,
            skeleton=skeleton,
            )
    return data._replace(
            keypoints=keypoints,
            cam=cam,
            visible=data.visible & visible,
            )


def _chunks(data, size):
    return data.batches(size, shuffle=False)


def _joints(model, rots, betas, cond):
    return forward_kinematics(model.skeleton, betas, rots, cond.glob)


def _point(model, cond):
    rots, betas = model.point_estimate(cond)
    return rots, betas, _joints(model, rots, betas, cond)


def _samples(model, cond, n, rng):
    rots, betas, logp, _ = model.ancestral_sample(cond, rng, n)
    return rots, betas, logp, _joints(model, rots, betas, cond)


MinSampleCurve = collections.namedtuple('MinSampleCurve', [
        'ns',
        'mpjpe',
        'mpjpe_pa',
        'mpjpe_decrease',     # percent, point estimate to largest N
        'mpjpe_pa_decrease',
        ])


def _decrease(curve):
    if curve[0] <= 0:
        return 0.0
    return 100.0 * (curve[0] - curve[-1]) / curve[0]


@evaluation_mode
def min_sample_curve(model, data, ns=(1, 10, 100), rng=None, joints=None, chunk=DEFAULT_CHUNK):
    '''Mean over inputs of the lowest error among N candidates.

    N = 1 is the point estimate; larger N add the first N - 1 ancestral
    samples to it, so candidate sets are nested and the curve cannot rise.
    '''
    ns = list(ns)
    if not ns or ns[0] != 1 or ns != sorted(ns):
        raise ValueError('ns must be ascending and start at 1')
    joints = model.skeleton.accuracy_joints if joints is None else joints
    extra = ns[-1] - 1
    errs, errs_pa = [], []
    for batch in _chunks(data, chunk):
        cond = model.condition(batch.keypoints, batch.visible)
        point = _point(model, cond)[2]
        e = [mpjpe(point, batch.joints3d, joints)[None]]
        e_pa = [mpjpe_pa(point, batch.joints3d, joints)[None]]
        if extra:
            sampled = _samples(model, cond, extra, rng)[3]
            e.append(mpjpe(sampled, batch.joints3d, joints))
            e_pa.append(mpjpe_pa(sampled, batch.joints3d, joints))
        errs.append(torch.cat(e))
        errs_pa.append(torch.cat(e_pa))
    errs = torch.cat(errs, dim=1)
    errs_pa = torch.cat(errs_pa, dim=1)

    curve = [float(errs[:n].min(dim=0).values.mean()) for n in ns]
    curve_pa = [float(errs_pa[:n].min(dim=0).values.mean()) for n in ns]
    return MinSampleCurve(ns, curve, curve_pa, _decrease(curve), _decrease(curve_pa))


def _masked_mean(values, mask):
    '''Per-input mean over masked joints; inputs without any are skipped.'''
    mask = mask.to(values.dtype)
    count = mask.sum(dim=-1)
    per_input = (values * mask).sum(dim=-1) / count.clamp_min(1.0)
    keep = count > 0
    if not bool(keep.any()):
        return 0.0
    return float(per_input[keep].mean())


@evaluation_mode
def kp2d_error(model, data, n_samples=100, rng=None, joints=None, chunk=DEFAULT_CHUNK):
    '''Mean pixel distance to visible keypoints: ``(point, samples)``.'''
    joints = list(model.skeleton.consistency_joints if joints is None else joints)
    point_errs, sample_errs, masks = [], [], []
    for batch in _chunks(data, chunk):
        cond = model.condition(batch.keypoints, batch.visible)
        target = batch.keypoints[:, joints]
        point = project(_point(model, cond)[2], cond.cam)[:, joints]
        sampled = project(_samples(model, cond, n_samples, rng)[3], cond.cam)[..., joints, :]
        point_errs.append((point - target).norm(dim=-1))
        sample_errs.append((sampled - target).norm(dim=-1).mean(dim=0))
        masks.append(batch.visible[:, joints])
    mask = torch.cat(masks)
    return (
            _masked_mean(torch.cat(point_errs), mask),
            _masked_mean(torch.cat(sample_errs), mask),
            )


@evaluation_mode
def kp3d_spread(model, data, n_samples=100, rng=None, joints=None, chunk=DEFAULT_CHUNK):
    '''Mean distance (mm) of sampled joints from their sample mean.

    Returns ``(visible, invisible)`` split by the observation mask.
    '''
    joints = list(model.skeleton.consistency_joints if joints is None else joints)
    spreads, masks = [], []
    for batch in _chunks(data, chunk):
        cond = model.condition(batch.keypoints, batch.visible)
        sampled = constants.MM_PER_M * _samples(model, cond, n_samples, rng)[3][..., joints, :]
        centre = sampled.mean(dim=0, keepdim=True)
        spreads.append((sampled - centre).norm(dim=-1).mean(dim=0))
        masks.append(batch.visible[:, joints])
    spread = torch.cat(spreads)
    mask = torch.cat(masks)
    return _masked_mean(spread, mask), _masked_mean(spread, ~mask)


@evaluation_mode
def directional_std(model, keypoints, visible, n_samples=100, rng=None):
    '''Per-joint sample standard deviation (mm) along camera x, y, z.

    Returns ``(N, 24, 3)``; z is depth.
    '''
    cond = model.condition(keypoints, visible)
    sampled = constants.MM_PER_M * _samples(model, cond, n_samples, rng)[3]
    return sampled.std(dim=0, unbiased=False)


LikelihoodValidation = collections.namedtuple('LikelihoodValidation', [
        'deltas',            # point log-prob minus best sample log-prob
        'fraction_positive',
        'counts',
        'edges',
        ])


@evaluation_mode
def point_ll_validation(model, data, n_samples=1000, rng=None, bins=20, chunk=DEFAULT_CHUNK):
    '''Compare the point estimate's log-likelihood with the best of many samples.'''
    deltas = []
    for batch in _chunks(data, chunk):
        cond = model.condition(batch.keypoints, batch.visible)
        rots, betas = model.point_estimate(cond)
        point_lp = model.joint_log_prob(rots, betas, cond)
        _, _, sample_lp, _ = model.ancestral_sample(cond, rng, n_samples)
        deltas.append(point_lp - sample_lp.max(dim=0).values)
    deltas = torch.cat(deltas).numpy()
    finite = deltas[np.isfinite(deltas)]
    counts, edges = np.histogram(finite if finite.size else np.zeros(1), bins=bins)
    if not finite.size:
        counts = np.zeros_like(counts)
    return LikelihoodValidation(
            deltas,
            float((deltas >= 0).mean()),
            counts,
            edges,
            )


FitResult = collections.namedtuple('FitResult', [
        'rots',
        'betas',
        'objective',      # mean objective per accepted iteration
        'reprojection',   # mean squared pixel error per iteration
        'diverged',       # (N,) bool; these inputs were reset to init
        ])


def _fit_objective(model, cond, keypoints, visible, rots, betas, prior_weight):
    joints = forward_kinematics(model.skeleton, betas, rots, cond.glob)
    err = ((project(joints, cond.cam) - keypoints) ** 2).sum(dim=-1)
    mask = visible.to(err.dtype)
    reproj = (err * mask).sum(dim=-1) / mask.sum(dim=-1).clamp_min(1.0)
    if prior_weight:
        return reproj - prior_weight * model.joint_log_prob(rots, betas, cond), reproj
    return reproj, reproj


def fit_with_prior(model, keypoints, visible, init=None, cfg=None):
    '''Refine poses and shapes against 2D keypoints, with the model as prior.

    Minimises ``reprojection MSE (px^2) - prior_weight * log p(rots, beta)``
    by gradient steps on per-part increments ``R <- R exp(delta)`` and on
    ``beta``, with a per-input backtracking line search that only accepts
    decreasing objectives. Camera and global rotation stay at the model's
    prediction.
    '''
    cfg = cfg if cfg is not None else FitConfig()
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            cond = model.condition(keypoints, visible)
            if init is None:
                init = model.point_estimate(cond)
        return _fit(model, cond, keypoints, visible, init, cfg)
    finally:
        model.train(was_training)


def _fit(model, cond, keypoints, visible, init, cfg):
    for p in model.parameters():
        p.requires_grad_(False)
    try:
        rots0, betas0 = init[0].detach(), init[1].detach()
        rots, betas = rots0.clone(), betas0.clone()

        def objective(r, b):
            return _fit_objective(model, cond, keypoints, visible, r, b, cfg.prior_weight)

        with torch.no_grad():
            energy, reproj = objective(rots, betas)
        energy0 = energy.clone()
        objective_trace = [float(energy.mean())]
        reproj_trace = [float(reproj.mean())]
        step = torch.full(energy.shape, cfg.step_size, dtype=torch.float64)

        for it in range(cfg.steps):
            delta = torch.zeros(rots.shape[:-1], dtype=torch.float64, requires_grad=True)
            b = betas.clone().requires_grad_(True)
            e, _ = objective(rots @ exp_so3(delta), b)
            g_delta, g_beta = torch.autograd.grad(e.sum(), [delta, b])

            accepted = torch.zeros(energy.shape, dtype=torch.bool)
            trial = step.clone()
            with torch.no_grad():
                for _ in range(cfg.max_backtracks):
                    cand_rots = rots @ exp_so3(-trial[:, None, None] * g_delta)
                    cand_betas = betas - trial[:, None] * g_beta
                    cand_e, cand_r = objective(cand_rots, cand_betas)
                    ok = torch.isfinite(cand_e) & (cand_e < energy) & ~accepted
                    rots = torch.where(ok[:, None, None, None], cand_rots, rots)
                    betas = torch.where(ok[:, None], cand_betas, betas)
                    energy = torch.where(ok, cand_e, energy)
                    reproj = torch.where(ok, cand_r, reproj)
                    accepted |= ok
                    if bool(accepted.all()):
                        break
                    trial = torch.where(accepted, trial, 0.5 * trial)
            step = torch.where(accepted, 2.0 * trial, trial)
            if not bool(accepted.any()):
                logger.debug('fit converged after %d steps', it)
                break
            objective_trace.append(float(energy.mean()))
            reproj_trace.append(float(reproj.mean()))

        limit = energy0 + (cfg.divergence_factor - 1.0) * energy0.abs()
        diverged = ~torch.isfinite(energy) | (energy > limit)
        if bool(diverged.any()):
            logger.warning('fit diverged on %d inputs; keeping init', int(diverged.sum()))
            rots = torch.where(diverged[:, None, None, None], rots0, rots)
            betas = torch.where(diverged[:, None], betas0, betas)
        return FitResult(rots, betas, objective_trace, reproj_trace, diverged)
    finally:
        for p in model.parameters():
            p.requires_grad_(True)


@dataclasses.dataclass
class MetricsReport(object):
    mpjpe_point: float
    mpjpe_pa_point: float
    min_sample_ns: list
    min_sample_mpjpe: list
    min_sample_mpjpe_pa: list
    mpjpe_decrease: float
    mpjpe_pa_decrease: float
    kp2d_err_point: float
    kp2d_err_samples: float
    kp3d_spread_visible: float
    kp3d_spread_invisible: float
    directional_std: list    # per consistency joint, [x, y, z] mm
    point_ll_fraction_positive: float
    point_ll_counts: list
    point_ll_edges: list
    crop: float = 1.0
    num_inputs: int = 0

    def to_dict(self):
        return dataclasses.asdict(self)


def evaluate(model, data, cfg=None, rng=None):
    '''Run every metric on ``data`` and collect a :class:`MetricsReport`.'''
    cfg = cfg if cfg is not None else EvalConfig()
    data = crop_dataset(data, cfg.crop)
    skeleton = model.skeleton

    curve = min_sample_curve(model, data, cfg.min_sample_ns, rng)
    kp_point, kp_samples = kp2d_error(model, data, cfg.num_samples, rng)
    spread_vis, spread_invis = kp3d_spread(model, data, cfg.num_samples, rng)
    stds = []
    for batch in _chunks(data, DEFAULT_CHUNK):
        stds.append(directional_std(
                model,
                batch.keypoints,
                batch.visible,
                cfg.num_samples,
                rng,
                ))
    std = torch.cat(stds)[:, list(skeleton.consistency_joints)].mean(dim=0)
    ll = point_ll_validation(model, data, cfg.ll_samples, rng, cfg.ll_bins)

    report = MetricsReport(
            mpjpe_point=curve.mpjpe[0],
            mpjpe_pa_point=curve.mpjpe_pa[0],
            min_sample_ns=list(curve.ns),
            min_sample_mpjpe=curve.mpjpe,
            min_sample_mpjpe_pa=curve.mpjpe_pa,
            mpjpe_decrease=curve.mpjpe_decrease,
            mpjpe_pa_decrease=curve.mpjpe_pa_decrease,
            kp2d_err_point=kp_point,
            kp2d_err_samples=kp_samples,
            kp3d_spread_visible=spread_vis,
            kp3d_spread_invisible=spread_invis,
            directional_std=std.tolist(),
            point_ll_fraction_positive=ll.fraction_positive,
            point_ll_counts=[int(c) for c in ll.counts],
            point_ll_edges=[float(e) for e in ll.edges],
            crop=cfg.crop,
            num_inputs=len(data),
            )
    logger.info(
            'MPJPE %.1f / PA %.1f mm; min-sample PA decrease %.1f%%',
            report.mpjpe_point,
            report.mpjpe_pa_point,
            report.mpjpe_pa_decrease,
            )
    return report


_SCALAR_FIELDS = (
        'mpjpe_point',
        'mpjpe_pa_point',
        'mpjpe_decrease',
        'mpjpe_pa_decrease',
        'kp2d_err_point',
        'kp2d_err_samples',
        'kp3d_spread_visible',
        'kp3d_spread_invisible',
        'point_ll_fraction_positive',
        'crop',
        'num_inputs',
        )


def write_report(report, out_dir, prefix='metrics'):
    '''Write ``<prefix>.json``, ``<prefix>.csv`` and ``<prefix>_curve.csv``.'''
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    paths = [os.path.join(out_dir, prefix + suffix) for suffix in (
            '.json',
            '.csv',
            '_curve.csv',
            )]
    with io.open(paths[0], 'w', encoding='utf-8') as f:
        f.write(json.dumps(report.to_dict(), sort_keys=True, indent=2))
        f.write('\n')
    with io.open(paths[1], 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(('metric', 'value'))
        for name in _SCALAR_FIELDS:
            writer.writerow((name, getattr(report, name)))
    with io.open(paths[2], 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(('n', 'metric', 'value'))
        for n, a, b in zip(
                report.min_sample_ns,
                report.min_sample_mpjpe,
                report.min_sample_mpjpe_pa,
                ):
            writer.writerow((n, 'mpjpe', a))
            writer.writerow((n, 'mpjpe_pa', b))
    return paths


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
