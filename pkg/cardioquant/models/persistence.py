# -*- coding: utf-8 -*-
"""
Weight files. A record named ``<path>`` is stored as two files:

- ``<path>.weights.json``: manifest with format_version, architecture,
  image_size, the parameter list (name, shape, byte offset in the blob),
  the sha256 of the blob and the training metadata;
- ``<path>.weights.bin``: little-endian float32 values of every tensor,
  concatenated in manifest order.
"""
import hashlib
import json
import logging
import os
from collections import OrderedDict

import numpy as np

from cardioquant.models.networks import build_network, NetworkException
from cardioquant.objects.weights import ModelWeights, WEIGHTS_FORMAT_VERSION

log = logging.getLogger(__name__)

MANIFEST_SUFFIX = '.weights.json'
BLOB_SUFFIX = '.weights.bin'
BLOB_DTYPE = np.dtype('<f4')


def _stem(path):
    for suffix in (MANIFEST_SUFFIX, BLOB_SUFFIX):
        if path.endswith(suffix):
            return path[:-len(suffix)]
    return path


def encode_blob(weights):
    """
        :return: (blob bytes, list of parameter records)
    """
    chunks = []
    records = []
    offset = 0
    for name, tensor in weights.tensors.items():
        chunk = tensor.array.astype(BLOB_DTYPE).tobytes()
        records.append(OrderedDict([('name', name),
                                    ('shape', list(tensor.shape)),
                                    ('offset', offset)]))
        chunks.append(chunk)
        offset += len(chunk)
    return b''.join(chunks), records


def save_weights(weights, path):
    """
        Writes ``<path>.weights.json`` and ``<path>.weights.bin``.

        :return: (manifest path, blob path)
    """
    stem = _stem(path)
    blob, records = encode_blob(weights)
    manifest = OrderedDict([
        ('format_version', weights.format_version),
        ('architecture', weights.architecture),
        ('image_size', weights.image_size),
        ('parameters', records),
        ('sha256', hashlib.sha256(blob).hexdigest()),
        ('metadata', weights.metadata),
    ])
    manifest_path, blob_path = stem + MANIFEST_SUFFIX, stem + BLOB_SUFFIX
    directory = os.path.dirname(stem)
    try:
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(blob_path, 'wb') as fileobj:
            fileobj.write(blob)
        with open(manifest_path, 'w') as fileobj:
            fileobj.write(json.dumps(manifest, indent=2) + "\n")
    except (IOError, OSError) as error:
        raise WeightsLoadException("cannot write weights {0}: {1}".format(
            stem, error))
    log.debug("saved %s weights to %s", weights.architecture, stem)
    return manifest_path, blob_path


def _read(path, mode):
    try:
        with open(path, mode) as fileobj:
            return fileobj.read()
    except (IOError, OSError) as error:
        raise WeightsLoadException("cannot read {0}: {1}".format(path, error))


def check_plan(manifest):
    """
        Compares the manifest parameter list with the plan of its
        architecture tag.
    """
    meta = manifest.get('metadata') or {}
    try:
        network = build_network(manifest.get('architecture'),
                                manifest.get('image_size'),
                                meta.get('channels'), meta.get('hidden'))
    except NetworkException as error:
        raise ParameterPlanException(str(error))
    expected = [(name, list(shape)) for name, shape, _ in network.plan()]
    found = [(p.get('name'), list(p.get('shape', ())))
             for p in manifest.get('parameters', [])]
    if expected != found:
        missing = [n for n, _ in expected if n not in dict(found)]
        raise ParameterPlanException("parameters do not match the {0} plan "
                                     "(missing {1}, {2} listed, {3} "
                                     "expected)".format(
                                         manifest.get('architecture'),
                                         missing[:3], len(found),
                                         len(expected)))
    return network


def load_weights(path, architecture=None):
    """
        Reads a weight record and verifies format version, blob checksum
        and parameter plan.

        :param architecture: optional expected architecture tag

        :return: ModelWeights
    """
    stem = _stem(path)
    manifest_path, blob_path = stem + MANIFEST_SUFFIX, stem + BLOB_SUFFIX
    try:
        manifest = json.loads(_read(manifest_path, 'r'),
                              object_pairs_hook=OrderedDict)
    except ValueError as error:
        raise WeightsLoadException("{0} is not valid JSON: {1}".format(
            manifest_path, error))
    if manifest.get('format_version') != WEIGHTS_FORMAT_VERSION:
        raise FormatVersionException("{0}: format_version {1}, expected "
                                     "{2}".format(manifest_path,
                                                  manifest.get(
                                                      'format_version'),
                                                  WEIGHTS_FORMAT_VERSION))
    blob = _read(blob_path, 'rb')
    if hashlib.sha256(blob).hexdigest() != manifest.get('sha256'):
        raise ChecksumException("{0}: checksum mismatch".format(blob_path))
    if architecture is not None and \
            manifest.get('architecture') != architecture:
        raise ParameterPlanException("{0}: expected {1} weights, found "
                                     "{2}".format(manifest_path, architecture,
                                                  manifest.get(
                                                      'architecture')))
    check_plan(manifest)

    values = np.frombuffer(blob, dtype=BLOB_DTYPE)
    tensors = OrderedDict()
    for record in manifest['parameters']:
        count = int(np.prod(record['shape']))
        start = record['offset'] // BLOB_DTYPE.itemsize
        if record['offset'] % BLOB_DTYPE.itemsize or \
                start + count > values.size:
            raise ParameterPlanException("{0}: bad offset for {1}".format(
                manifest_path, record['name']))
        tensors[record['name']] = values[start:start + count].astype(
            np.float32).reshape(record['shape'])
    expected_size = sum(int(np.prod(r['shape']))
                        for r in manifest['parameters'])
    if values.size != expected_size:
        raise ParameterPlanException("{0}: blob holds {1} values, plan needs "
                                     "{2}".format(blob_path, values.size,
                                                  expected_size))
    return ModelWeights(manifest['architecture'], manifest['image_size'],
                        tensors, manifest.get('metadata'),
                        manifest['format_version'])


class WeightsLoadException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


class ChecksumException(WeightsLoadException):
    pass


class FormatVersionException(WeightsLoadException):
    pass


class ParameterPlanException(WeightsLoadException):
    pass
