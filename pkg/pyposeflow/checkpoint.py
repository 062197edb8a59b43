# -*- coding: utf-8 -*-

'''Single-file checkpoints.

Layout::

    b'PPFCKPT\\n'                 magic
    <u8 little endian>            manifest length in bytes
    manifest                      UTF-8 JSON, sorted keys
    payload                       little-endian float64 tensors

The manifest lists every tensor as ``{name, shape, offset}`` with the offset
counted in float64 elements into the payload. Parameters are stored under
``param/<name>``, Adam moments under ``adam_m/<i>`` and ``adam_v/<i>``.
Saving the same state twice gives identical bytes.
'''

from __future__ import unicode_literals, absolute_import

__all__ = [
        'CheckpointState',
        'save_checkpoint',
        'load_checkpoint',
        'read_manifest',
        ]

import base64
import collections
import io
import json
import logging
import struct

import numpy as np
import torch

from . import constants
from .config import ModelConfig, from_dict, to_dict
from .errors import ValidationError
from .posedist import build_model

logger = logging.getLogger(__name__)

_LENGTH = struct.Struct('<Q')

CheckpointState = collections.namedtuple('CheckpointState', [
        'model',
        'model_cfg',
        'epoch',
        'history',
        'manifest',
        ])


def _encode(model, model_cfg, optimizer, rng, epoch, history, extra):
    tensors = []
    blobs = []
    offset = 0

    def add(name, t):
        arr = np.ascontiguousarray(t.detach().cpu().numpy(), dtype='<f8')
        tensors.append({
                'name': name,
                'shape': list(arr.shape),
                'offset': offset,
                })
        blobs.append(arr.tobytes())
        return offset + arr.size

    for name, p in model.named_parameters():
        offset = add('param/' + name, p)

    opt = None
    if optimizer is not None:
        state = optimizer.state_dict()
        opt = {
                'step': state['step'],
                'lr': optimizer.lr,
                'count': len(state['m']),
                }
        for i, m in enumerate(state['m']):
            offset = add('adam_m/%d' % (i, ), m)
        for i, v in enumerate(state['v']):
            offset = add('adam_v/%d' % (i, ), v)

    manifest = {
            'version': constants.CHECKPOINT_VERSION,
            'variant': model.variant,
            'model': to_dict(model_cfg),
            'skeleton': model.skeleton.digest,
            'tensors': tensors,
            'optimizer': opt,
            'rng': (
                    base64.b64encode(rng.get_state().numpy().tobytes()).decode('ascii')
                    if rng is not None
                    else None
                    ),
            'epoch': int(epoch),
            'history': list(history or ()),
            'extra': extra or {},
            }
    return manifest, b''.join(blobs)


def save_checkpoint(
        path,
        model,
        model_cfg=None,
        optimizer=None,
        rng=None,
        epoch=0,
        history=None,
        extra=None,
        ):
    model_cfg = model_cfg if model_cfg is not None else ModelConfig(variant=model.variant)
    manifest, payload = _encode(
            model,
            model_cfg,
            optimizer,
            rng,
            epoch,
            history,
            extra,
            )
    header = json.dumps(manifest, sort_keys=True, separators=(',', ':'))
    header = header.encode('utf-8')
    with io.open(path, 'wb') as f:
        f.write(constants.CHECKPOINT_MAGIC)
        f.write(_LENGTH.pack(len(header)))
        f.write(header)
        f.write(payload)
    logger.debug('saved checkpoint %s (%d bytes of tensors)', path, len(payload))


def _payload_size(manifest):
    size = 0
    for entry in manifest['tensors']:
        shape = entry['shape']
        count = int(np.prod(shape)) if shape else 1
        size = max(size, int(entry['offset']) + count)
    return size


def _read(path):
    try:
        with io.open(path, 'rb') as f:
            data = f.read()
    except (IOError, OSError) as e:
        raise ValidationError('cannot read checkpoint %s: %s' % (path, e, ))
    magic = constants.CHECKPOINT_MAGIC
    if not data.startswith(magic):
        raise ValidationError('%s is not a checkpoint' % (path, ))
    start = len(magic) + _LENGTH.size
    if len(data) < start:
        raise ValidationError('truncated checkpoint header')
    (length, ) = _LENGTH.unpack(data[len(magic):start])
    if len(data) < start + length:
        raise ValidationError('truncated checkpoint manifest')
    try:
        manifest = json.loads(data[start:start + length].decode('utf-8'))
    except ValueError as e:
        raise ValidationError('corrupt checkpoint manifest: %s' % (e, ))
    if not isinstance(manifest, dict):
        raise ValidationError('corrupt checkpoint manifest: not an object')
    if manifest.get('version') != constants.CHECKPOINT_VERSION:
        raise ValidationError('unsupported checkpoint version %r' % (
                manifest.get('version'),
                ))
    try:
        expected = _payload_size(manifest)
    except (KeyError, TypeError, ValueError) as e:
        raise ValidationError('corrupt checkpoint tensor table: %r' % (e, ))
    body = data[start + length:]
    if len(body) != 8 * expected:
        raise ValidationError('checkpoint payload has %d bytes, expected %d' % (
                len(body),
                8 * expected,
                ))
    return manifest, np.frombuffer(body, dtype='<f8')


def read_manifest(path):
    return _read(path)[0]


def _tensor(payload, entry):
    count = int(np.prod(entry['shape'])) if entry['shape'] else 1
    lo = entry['offset']
    if lo < 0 or lo + count > payload.size:
        raise ValidationError('tensor %s lies outside the payload' % (entry['name'], ))
    arr = payload[lo:lo + count].astype(np.float64).reshape(entry['shape'])
    return torch.from_numpy(arr.copy())


def load_checkpoint(path, model=None, optimizer=None, rng=None, skeleton=None):
    '''Restore a checkpoint into ``model`` (built from the manifest if None).

    Tensor names and shapes must match the model exactly.
    '''
    manifest, payload = _read(path)
    try:
        return _restore(manifest, payload, model, optimizer, rng, skeleton)
    except (KeyError, TypeError) as e:
        raise ValidationError('corrupt checkpoint manifest: missing or malformed %s' % (e, ))


def _restore(manifest, payload, model, optimizer, rng, skeleton):
    model_cfg = from_dict(manifest['model'], ModelConfig)
    if model is None:
        model = build_model(model_cfg, skeleton)
    if manifest['skeleton'] != model.skeleton.digest:
        raise ValidationError('checkpoint was made for a different skeleton')
    if manifest['variant'] != model.variant:
        raise ValidationError('checkpoint holds a %s model, not %s' % (
                manifest['variant'],
                model.variant,
                ))

    entries = dict((e['name'], e) for e in manifest['tensors'])
    params = collections.OrderedDict(
            ('param/' + name, p) for name, p in model.named_parameters()
            )
    stored = set(k for k in entries if k.startswith('param/'))
    if stored != set(params):
        missing = sorted(set(params) - stored)
        unexpected = sorted(stored - set(params))
        raise ValidationError('parameter mismatch; missing %s, unexpected %s' % (
                missing[:5],
                unexpected[:5],
                ))
    values = {}
    for key, p in params.items():
        value = _tensor(payload, entries[key])
        if tuple(value.shape) != tuple(p.shape):
            raise ValidationError('shape mismatch for %s: %r vs %r' % (
                    key[len('param/'):],
                    tuple(value.shape),
                    tuple(p.shape),
                    ))
        values[key] = value
    with torch.no_grad():
        for key, p in params.items():
            p.copy_(values[key])

    opt = manifest.get('optimizer')
    if optimizer is not None and opt is not None:
        optimizer.load_state_dict({
                'step': opt['step'],
                'm': [_tensor(payload, entries['adam_m/%d' % (i, )]) for i in range(opt['count'])],
                'v': [_tensor(payload, entries['adam_v/%d' % (i, )]) for i in range(opt['count'])],
                })
    if rng is not None and manifest.get('rng'):
        raw = base64.b64decode(manifest['rng'].encode('ascii'))
        rng.set_state(torch.from_numpy(np.frombuffer(raw, dtype=np.uint8).copy()))

    return CheckpointState(
            model,
            model_cfg,
            manifest.get('epoch', 0),
            manifest.get('history', []),
            manifest,
            )


# vim:set ai et ts=4 sw=4 sts=4 fenc=utf-8:
