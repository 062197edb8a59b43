# -*- coding: utf-8 -*-

'''``pyposeflow`` command line.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 numerical
failure.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'main',
        'cmd_synth',
        'cmd_train',
        'cmd_eval',
        'cmd_check',
        'cmd_fit',
        ]

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np
import torch

from . import __version__
from . import constants
from .bodymodel import Skeleton, default_skeleton
from .checkpoint import load_checkpoint
from .checks import run_checks
from .config import load_config, resolve_out_dir
from .errors import PoseFlowError, UsageError
from .evaluation import evaluate, fit_with_prior, write_report
from .posedist import build_model
from .synth import load_dataset, save_dataset, synth_dataset
from .train import train_loop
from .utils import make_generator

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _ensure_dir(path):
    if not os.path.isdir(path):
        os.makedirs(path)
    return path


def _skeleton(cfg):
    if cfg.model.skeleton:
        return Skeleton.load(cfg.model.skeleton)
    return default_skeleton()


def _dataset(path, cfg, seed):
    if path:
        return load_dataset(path)
    rng = make_generator(seed)
    return synth_dataset(cfg.synth.num_samples, cfg.synth, rng, _skeleton(cfg))


def cmd_synth(cfg, out_dir, output=None, num=None):
    n = num if num is not None else cfg.synth.num_samples
    if n < 1:
        raise UsageError('--num must be positive')
    path = output or os.path.join(_ensure_dir(out_dir), 'dataset.npz')
    data = synth_dataset(n, cfg.synth, make_generator(cfg.seed), _skeleton(cfg))
    save_dataset(path, data)
    logger.info('wrote %d samples to %s', len(data), path)
    return path


def cmd_train(cfg, out_dir, dataset=None, resume=None):
    data = _dataset(dataset or cfg.train.dataset, cfg, cfg.seed)
    result = train_loop(
            data,
            cfg.train,
            cfg.model,
            seed=cfg.seed,
            out_dir=_ensure_dir(out_dir),
            resume=resume,
            skeleton=_skeleton(cfg),
            )
    return result.checkpoint


def _load_model(path, cfg):
    if path:
        return load_checkpoint(path, skeleton=_skeleton(cfg)).model
    torch.manual_seed(cfg.seed)
    return build_model(cfg.model, _skeleton(cfg))


def cmd_eval(cfg, out_dir, checkpoint, dataset=None):
    model = _load_model(checkpoint, cfg)
    # held-out data unless a dataset is named
    data = _dataset(dataset or cfg.eval.dataset, cfg, cfg.seed + 1)
    report = evaluate(model, data, cfg.eval, make_generator(cfg.seed))
    return write_report(report, _ensure_dir(out_dir))


def cmd_check(cfg, out_dir, checkpoint=None):
    model = _load_model(checkpoint, cfg)
    report = run_checks(model, cfg.check, cfg.seed)
    path = os.path.join(_ensure_dir(out_dir), 'checks.json')
    with io.open(path, 'w', encoding='utf-8') as f:
        f.write(json.dumps(report.to_dict(), sort_keys=True, indent=2))
        f.write('\n')
    report.raise_for_failure()
    return path


def cmd_fit(cfg, out_dir, checkpoint, dataset=None):
    model = _load_model(checkpoint, cfg)
    data = _dataset(dataset, cfg, cfg.seed + 1)
    result = fit_with_prior(model, data.keypoints, data.visible, cfg=cfg.fit)
    out_dir = _ensure_dir(out_dir)
    poses = os.path.join(out_dir, 'fit.npz')
    with open(poses, 'wb') as f:
        np.savez(
                f,
                rots=result.rots.detach().numpy(),
                betas=result.betas.detach().numpy(),
                diverged=result.diverged.numpy(),
                )
    trace = os.path.join(out_dir, 'fit_trace.csv')
    with io.open(trace, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(('iteration', 'objective', 'reprojection'))
        for i, (e, r) in enumerate(zip(result.objective, result.reprojection)):
            writer.writerow((i, e, r))
    return poses, trace


def _parser():
    common = _ArgumentParser(add_help=False)
    common.add_argument('--config', help='run configuration (JSON)')
    common.add_argument('--seed', type=int, help='random seed')
    common.add_argument('--threads', type=int, help='intra-op threads')
    common.add_argument(
            '--deterministic',
            action='store_true',
            help='force deterministic kernels and a single reduction order',
            )
    common.add_argument(
            '--out',
            help='output directory (default: $%s or ./runs)' % (
                    constants.ENV_OUT_DIR,
                    ),
            )
    common.add_argument(
            '--set',
            action='append',
            default=[],
            metavar='SECTION.KEY=VALUE',
            help='override a config value; may be repeated',
            )
    common.add_argument('-v', '--verbose', action='store_true')

    parser = _ArgumentParser(
            prog='pyposeflow',
            description='Probabilistic pose and shape estimation with SO(3) flows.',
            )
    parser.add_argument('--version', action='version', version=__version__)
    sub = parser.add_subparsers(dest='command', parser_class=_ArgumentParser)

    p = sub.add_parser('synth', parents=[common], help='generate a synthetic dataset')
    p.add_argument('--num', type=int, help='number of samples')
    p.add_argument('--output', help='dataset path (default: <out>/dataset.npz)')

    p = sub.add_parser('train', parents=[common], help='train a model')
    p.add_argument('--dataset', help='dataset from `synth`')
    p.add_argument('--resume', help='checkpoint to continue from')

    p = sub.add_parser('eval', parents=[common], help='evaluate a checkpoint')
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--dataset')

    p = sub.add_parser('check', parents=[common], help='run the property suite')
    p.add_argument('--checkpoint')

    p = sub.add_parser('fit', parents=[common], help='fit poses with the model as prior')
    p.add_argument('--checkpoint', required=True)
    p.add_argument('--dataset')

    return parser


def _setup_logging(verbose):
    logging.basicConfig(
            level=logging.DEBUG if verbose else logging.INFO,
            format='%(asctime)s %(levelname)s %(name)s: %(message)s',
            )


def _setup_torch(cfg):
    if cfg.threads:
        torch.set_num_threads(cfg.threads)
    if cfg.deterministic:
        torch.use_deterministic_algorithms(True)
        if not cfg.threads:
            torch.set_num_threads(1)


def run(argv=None):
    '''Parse ``argv`` and dispatch; raises PoseFlowError on failure.'''
    args = _parser().parse_args(argv)
    if args.command is None:
        raise UsageError('no command given; try --help')
    _setup_logging(args.verbose)

    overrides = list(args.set)
    if args.seed is not None:
        overrides.append('seed=%d' % (args.seed, ))
    if args.threads is not None:
        overrides.append('threads=%d' % (args.threads, ))
    if args.deterministic:
        overrides.append('deterministic=true')
    cfg = load_config(args.config, overrides)
    _setup_torch(cfg)
    out_dir = resolve_out_dir(args.out)

    if args.command == 'synth':
        return cmd_synth(cfg, out_dir, args.output, args.num)
    if args.command == 'train':
        return cmd_train(cfg, out_dir, args.dataset, args.resume)
    if args.command == 'eval':
        return cmd_eval(cfg, out_dir, args.checkpoint, args.dataset)
    if args.command == 'check':
        return cmd_check(cfg, out_dir, args.checkpoint)
    return cmd_fit(cfg, out_dir, args.checkpoint, args.dataset)


def main(argv=None):
    try:
        run(argv)
    except PoseFlowError as e:
        logger.error('%s', e)
        sys.stderr.write('%s\n' % (e, ))
        return e.errno
    return constants.OK


if __name__ == '__main__':
    sys.exit(main())


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
