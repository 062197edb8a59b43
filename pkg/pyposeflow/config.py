# -*- coding: utf-8 -*-

'''Run configuration.

One JSON document holds a section per command. Missing keys take the
defaults below; unknown keys are rejected. ``--set train.lr=1e-3`` style
overrides are applied on the JSON level before validation.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'ModelConfig',
        'LossWeights',
        'AugmentConfig',
        'SynthConfig',
        'TrainConfig',
        'EvalConfig',
        'FitConfig',
        'CheckConfig',
        'RunConfig',
        'from_dict',
        'to_dict',
        'load_config',
        'apply_overrides',
        'resolve_out_dir',
        ]

import dataclasses
import io
import json
import os

from . import constants
from .errors import ValidationError
from .utils import (
        check_crop_fraction,
        check_positive,
        check_radius,
        check_variant,
        )


def _check_probability(name, p):
    if not 0.0 <= p <= 1.0:
        raise ValueError('%s must lie in [0, 1]; got %r' % (name, p, ))


@dataclasses.dataclass
class ModelConfig(object):
    variant: str = 'so3flow'
    context_dim: int = constants.CONTEXT_DIM
    context_hidden: int = constants.CONTEXT_HIDDEN
    num_layers: int = constants.NUM_COUPLING_LAYERS
    hidden: list = dataclasses.field(
            default_factory=lambda: list(constants.COUPLING_HIDDEN),
            )
    num_bins: int = constants.NUM_BINS
    radius: float = constants.SUPPORT_RADIUS
    base_variance: float = constants.BASE_VARIANCE
    scaled_tanh: bool = True
    mdn_components: int = constants.MDN_COMPONENTS
    skeleton: str = None

    def validate(self):
        check_variant(self.variant)
        check_radius(self.radius)
        check_positive('base_variance', self.base_variance)
        check_positive('num_layers', self.num_layers)
        check_positive('num_bins', self.num_bins)
        check_positive('mdn_components', self.mdn_components)


@dataclasses.dataclass
class LossWeights(object):
    nll: float = 1.0
    glob: float = 1.0
    kp2d: float = 0.01
    point3d: float = 1.0
    enable_2d_samples: bool = True
    enable_3d_point: bool = False
    kp2d_samples: int = 2

    def active(self):
        '''``{name: weight}`` of the components that contribute.'''
        out = {'nll': self.nll, 'glob': self.glob}
        if self.enable_2d_samples:
            out['kp2d'] = self.kp2d
        if self.enable_3d_point:
            out['point3d'] = self.point3d
        return out

    def validate(self):
        for name in ('nll', 'glob', 'kp2d', 'point3d'):
            if getattr(self, name) < 0:
                raise ValueError('loss weight %s must be non-negative' % (name, ))
        if not any(w > 0 for w in self.active().values()):
            raise ValueError('at least one loss weight must be positive')
        check_positive('kp2d_samples', self.kp2d_samples)


@dataclasses.dataclass
class AugmentConfig(object):
    enabled: bool = True
    noise_px: float = 8.0
    keypoint_occlusion: float = 0.1
    crop: float = 0.1
    crop_min: float = 0.5
    crop_max: float = 0.8
    body_part_occlusion: float = 0.1
    lr_swap: float = 0.1
    half_image_occlusion: float = 0.05

    def validate(self):
        for name in (
                'keypoint_occlusion',
                'crop',
                'body_part_occlusion',
                'lr_swap',
                'half_image_occlusion',
                ):
            _check_probability(name, getattr(self, name))
        check_crop_fraction(self.crop_min)
        check_crop_fraction(self.crop_max)
        if self.crop_min > self.crop_max:
            raise ValueError('crop_min exceeds crop_max')
        if self.noise_px < 0:
            raise ValueError('noise_px must be non-negative')


@dataclasses.dataclass
class SynthConfig(object):
    num_samples: int = 1000
    pose_std_torso: float = 0.3
    pose_std_limb: float = 0.6
    shape_std: float = 1.25
    shape_clip: float = 3.0
    cam_translation_mean: list = dataclasses.field(
            default_factory=lambda: [0.0, -0.2, 2.5],
            )
    cam_translation_var: list = dataclasses.field(
            default_factory=lambda: [0.05, 0.05, 0.25],
            )
    focal_length: float = constants.FOCAL_LENGTH
    augment: AugmentConfig = dataclasses.field(default_factory=AugmentConfig)

    def validate(self):
        check_positive('num_samples', self.num_samples)
        check_positive('pose_std_torso', self.pose_std_torso)
        check_positive('pose_std_limb', self.pose_std_limb)
        check_positive('shape_std', self.shape_std)
        check_positive('shape_clip', self.shape_clip)
        check_positive('focal_length', self.focal_length)
        if len(self.cam_translation_mean) != 3 or len(self.cam_translation_var) != 3:
            raise ValueError('camera translation mean/variance must have 3 entries')
        check_positive('camera depth', self.cam_translation_mean[2])
        self.augment.validate()


@dataclasses.dataclass
class TrainConfig(object):
    lr: float = 1e-4
    batch_size: int = 72
    epochs: int = 10
    dataset: str = None
    progress: bool = True
    weights: LossWeights = dataclasses.field(default_factory=LossWeights)

    def validate(self):
        check_positive('lr', self.lr)
        check_positive('batch_size', self.batch_size)
        check_positive('epochs', self.epochs)
        self.weights.validate()


@dataclasses.dataclass
class EvalConfig(object):
    num_samples: int = 100
    min_sample_ns: list = dataclasses.field(default_factory=lambda: [1, 10, 100])
    crop: float = 1.0
    ll_samples: int = 1000
    ll_bins: int = 20
    dataset: str = None

    def validate(self):
        check_positive('num_samples', self.num_samples)
        check_crop_fraction(self.crop)
        ns = list(self.min_sample_ns)
        if not ns or ns[0] != 1 or ns != sorted(ns):
            raise ValueError('min_sample_ns must be ascending and start at 1')
        check_positive('ll_samples', self.ll_samples)
        check_positive('ll_bins', self.ll_bins)


@dataclasses.dataclass
class FitConfig(object):
    steps: int = 50
    prior_weight: float = 1.0
    step_size: float = 0.1
    max_backtracks: int = 30
    divergence_factor: float = 10.0

    def validate(self):
        check_positive('steps', self.steps)
        check_positive('step_size', self.step_size)
        if self.prior_weight < 0:
            raise ValueError('prior_weight must be non-negative')


@dataclasses.dataclass
class CheckConfig(object):
    roundtrips: int = 10000
    mc_samples: int = 200000
    support_samples: int = 1000000
    jacobian_points: int = 1000
    fd_coords: int = 100
    fd_step: float = 1e-5
    fd_tol: float = 1e-4

    def validate(self):
        for name in (
                'roundtrips',
                'mc_samples',
                'support_samples',
                'jacobian_points',
                'fd_coords',
                'fd_step',
                'fd_tol',
                ):
            check_positive(name, getattr(self, name))


@dataclasses.dataclass
class RunConfig(object):
    seed: int = 0
    deterministic: bool = False
    threads: int = None
    model: ModelConfig = dataclasses.field(default_factory=ModelConfig)
    synth: SynthConfig = dataclasses.field(default_factory=SynthConfig)
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    eval: EvalConfig = dataclasses.field(default_factory=EvalConfig)
    fit: FitConfig = dataclasses.field(default_factory=FitConfig)
    check: CheckConfig = dataclasses.field(default_factory=CheckConfig)

    def validate(self):
        for section in (self.model, self.synth, self.train, self.eval, self.fit, self.check):
            section.validate()


def _nested_type(f):
    factory = f.default_factory
    if factory is not dataclasses.MISSING and dataclasses.is_dataclass(factory):
        return factory
    return None


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ValidationError('%s must be a JSON object' % (where or 'config', ))
    fields = dict((f.name, f) for f in dataclasses.fields(cls))
    unknown = sorted(set(data) - set(fields))
    if unknown:
        raise ValidationError('unknown key(s) in %s: %s' % (
                where or 'config',
                ', '.join(unknown),
                ))
    kwargs = {}
    for name, value in data.items():
        sub = _nested_type(fields[name])
        path = '%s.%s' % (where, name) if where else name
        kwargs[name] = _build(sub, value, path) if sub is not None else value
    return cls(**kwargs)


def from_dict(data, cls=RunConfig):
    '''Build and validate a config; bad keys or values raise ValidationError.'''
    cfg = _build(cls, data, '')
    try:
        cfg.validate()
    except (ValueError, TypeError) as e:
        raise ValidationError(str(e))
    return cfg


def to_dict(cfg):
    return dataclasses.asdict(cfg)


def load_config(path=None, overrides=()):
    data = {}
    if path is not None:
        try:
            with io.open(path, encoding='utf-8') as f:
                data = json.load(f)
        except (IOError, OSError) as e:
            raise ValidationError('cannot read config %s: %s' % (path, e, ))
        except ValueError as e:
            raise ValidationError('malformed config %s: %s' % (path, e, ))
    cfg = from_dict(data)
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def _parse_value(text):
    try:
        return json.loads(text)
    except ValueError:
        return text


def apply_overrides(cfg, overrides):
    '''Apply ``section.key=value`` strings; values are parsed as JSON.'''
    data = to_dict(cfg)
    for item in overrides:
        key, sep, value = item.partition('=')
        if not sep or not key:
            raise ValidationError('override must look like key=value: %r' % (
                    item,
                    ))
        node = data
        parts = key.split('.')
        for part in parts[:-1]:
            if not isinstance(node.get(part), dict):
                raise ValidationError('unknown config section: %s' % (key, ))
            node = node[part]
        if parts[-1] not in node:
            raise ValidationError('unknown config key: %s' % (key, ))
        node[parts[-1]] = _parse_value(value)
    return from_dict(data, type(cfg))


def resolve_out_dir(out=None):
    if out:
        return out
    return os.environ.get(constants.ENV_OUT_DIR) or os.path.join('.', 'runs')


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
