# -*- coding: utf-8 -*-

'''pyposeflow constants.'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'OK',
        'USAGE_ERROR',
        'VALIDATION_ERROR',
        'NUMERICAL_ERROR',

        'SMALL_ANGLE',
        'NEAR_PI',
        'SUPPORT_RADIUS',
        'BASE_VARIANCE',
        'HAAR_VOLUME',
        'LOG_HAAR_VOLUME',

        'NUM_BINS',
        'TAIL_BOUND',
        'MIN_BIN_WIDTH',
        'MIN_BIN_HEIGHT',
        'MIN_DERIVATIVE',
        'MIN_LAMBDA',
        'NUM_COUPLING_LAYERS',
        'COUPLING_HIDDEN',

        'FEATURE_DIM',
        'CONTEXT_DIM',
        'CONTEXT_HIDDEN',
        'HEAD_HIDDEN',
        'SHAPE_DIM',
        'CAMERA_DIM',
        'ROT6D_DIM',
        'NUM_JOINTS',
        'NUM_PARTS',

        'IMAGE_SIZE',
        'FOCAL_LENGTH',
        'CAMERA_SCALE_PRIOR',
        'MM_PER_M',

        'MDN_COMPONENTS',
        'ADAM_BETA1',
        'ADAM_BETA2',
        'ADAM_EPS',

        'CHECKPOINT_MAGIC',
        'CHECKPOINT_VERSION',
        'ENV_OUT_DIR',
        ]

import math


# exit codes, also used as error numbers
OK = 0
USAGE_ERROR = 1
VALIDATION_ERROR = 2
NUMERICAL_ERROR = 3

# Lie group branch switches
SMALL_ANGLE = 1e-4
NEAR_PI = 1e-4

# open support ball of every per-part axis-angle density
SUPPORT_RADIUS = 1.5 * math.pi
BASE_VARIANCE = 0.6

# Lebesgue volume of the principal ball under the exp-map volume element,
# i.e. the Haar measure of SO(3) in exponential coordinates
HAAR_VOLUME = 8.0 * math.pi ** 2
LOG_HAAR_VOLUME = math.log(HAAR_VOLUME)

# linear rational spline coupling
NUM_BINS = 8
TAIL_BOUND = 5.0
MIN_BIN_WIDTH = 1e-3
MIN_BIN_HEIGHT = 1e-3
MIN_DERIVATIVE = 1e-3
MIN_LAMBDA = 0.025
NUM_COUPLING_LAYERS = 3
COUPLING_HIDDEN = (32, 32, 32)

# network sizes
FEATURE_DIM = 512
CONTEXT_DIM = 64
CONTEXT_HIDDEN = 256
HEAD_HIDDEN = 512
SHAPE_DIM = 10
CAMERA_DIM = 3
ROT6D_DIM = 6
NUM_JOINTS = 24
NUM_PARTS = 23

# image / camera
IMAGE_SIZE = 256
FOCAL_LENGTH = 300.0
CAMERA_SCALE_PRIOR = FOCAL_LENGTH / 2.5
MM_PER_M = 1000.0

MDN_COMPONENTS = 4

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_MAGIC = b'PPFCKPT\n'
CHECKPOINT_VERSION = 1
ENV_OUT_DIR = 'PYPOSEFLOW_OUT'


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
