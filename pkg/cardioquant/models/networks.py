# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.models.networks` -- the three network architectures
=====================================================================

- ``direct``: image -> 11 indices. Four conv blocks (conv 3x3, batch-norm,
  ReLU, 2x2 max-pool) with 16/32/64/64 channels, then fc1 (128, ReLU) and
  fc2 (11, linear).
- ``unet``: image -> 3-class probabilities. Three encoder levels of two
  conv-bn-relu layers (16/32/64) each followed by a pool, a 128-channel
  bottleneck, three decoder levels (upsample, concatenate the skip, two
  conv-bn-relu) and a 3-channel conv head followed by a channel softmax.
- ``masknet``: one-hot 3-channel mask -> 11 indices. Three conv blocks
  (16/32/64), fc1 (64, ReLU), fc2 (11, linear).

A network object only describes an architecture: its parameter plan
(ordered names and shapes, batch-norm running statistics included) and
its forward pass. The numbers live in ModelWeights.
"""
from collections import OrderedDict

import numpy as np

from cardioquant.objects.indices import INDEX_NAMES
from cardioquant.tensor import (BatchNormState, Tensor, conv2d, batch_norm,
                                relu, max_pool2, dense, flatten,
                                upsample2_concat, softmax_channels,
                                init_uniform)

PARAMETER, BUFFER = 'parameter', 'buffer'
N_OUTPUTS = len(INDEX_NAMES)
N_CLASSES = 3


class Network(object):
    """
        Base class of the architectures. Subclasses fill ``self._plan``
        through the ``_conv`` and ``_dense`` helpers and implement
        ``forward``.
    """
    ARCHITECTURE = None
    SIZE_MULTIPLE = 1
    IN_CHANNELS = 1
    TAPS = ()

    def __init__(self, image_size, channels=None, hidden=None):
        image_size = int(image_size)
        if image_size < self.SIZE_MULTIPLE or \
                image_size % self.SIZE_MULTIPLE:
            raise NetworkException("{0} needs an image size divisible by "
                                   "{1}, got {2}".format(self.ARCHITECTURE,
                                                         self.SIZE_MULTIPLE,
                                                         image_size))
        self.image_size = image_size
        self.channels = tuple(int(c) for c in (channels or
                                                self.DEFAULT_CHANNELS))
        self.hidden = int(hidden or self.DEFAULT_HIDDEN)
        if len(self.channels) != len(self.DEFAULT_CHANNELS) or \
                min(self.channels) < 1 or self.hidden < 1:
            raise NetworkException("invalid channel plan {0} for {1}".format(
                self.channels, self.ARCHITECTURE))
        self._plan = OrderedDict()
        self._fans = {}
        self._build()

    def _conv(self, name, c_in, c_out):
        self._plan[name + '.kernel'] = ((c_out, c_in, 3, 3), PARAMETER)
        self._fans[name + '.kernel'] = c_in * 9
        self._plan[name + '.bias'] = ((c_out,), PARAMETER)
        self._plan[name + '.bn.gamma'] = ((c_out,), PARAMETER)
        self._plan[name + '.bn.beta'] = ((c_out,), PARAMETER)
        self._plan[name + '.bn.mean'] = ((c_out,), BUFFER)
        self._plan[name + '.bn.var'] = ((c_out,), BUFFER)

    def _head(self, name, c_in, c_out):
        self._plan[name + '.kernel'] = ((c_out, c_in, 3, 3), PARAMETER)
        self._fans[name + '.kernel'] = c_in * 9
        self._plan[name + '.bias'] = ((c_out,), PARAMETER)

    def _dense(self, name, f_in, f_out):
        self._plan[name + '.weight'] = ((f_in, f_out), PARAMETER)
        self._fans[name + '.weight'] = f_in
        self._plan[name + '.bias'] = ((f_out,), PARAMETER)

    @property
    def config(self):
        """
            Architecture description stored in the weights manifest.
        """
        return OrderedDict([('channels', list(self.channels)),
                            ('hidden', self.hidden)])

    def plan(self):
        """
            :return: list of (name, shape, kind) in storage order
        """
        return [(name, shape, kind)
                for name, (shape, kind) in self._plan.items()]

    def parameter_names(self):
        return [n for n, (_, kind) in self._plan.items() if kind == PARAMETER]

    def init_tensors(self, rng):
        """
            Fresh tensors: fan-in scaled uniform kernels and weights, zero
            biases, unit gamma, zero beta, running mean 0 and variance 1.

            :return: OrderedDict name -> Tensor
        """
        tensors = OrderedDict()
        for name, (shape, _) in self._plan.items():
            if name in self._fans:
                tensors[name] = init_uniform(rng, shape, self._fans[name])
            elif name.endswith('.bn.gamma') or name.endswith('.bn.var'):
                tensors[name] = Tensor.ones(shape)
            else:
                tensors[name] = Tensor.zeros(shape)
        return tensors

    def bind(self, graph, tensors):
        """
            Registers the trainable tensors on a graph (shared, not copied).
        """
        for name in self.parameter_names():
            graph.add_parameter(name, tensors[name])

    def _block(self, graph, x, name, mode, tensors):
        state = BatchNormState(tensors[name + '.bn.mean'],
                               tensors[name + '.bn.var'])
        out = conv2d(x, graph.param(name + '.kernel'),
                     graph.param(name + '.bias'))
        out = batch_norm(out, graph.param(name + '.bn.gamma'),
                         graph.param(name + '.bn.beta'), mode=mode,
                         state=state)
        return relu(out)

    def _fc(self, graph, x, name):
        return dense(x, graph.param(name + '.weight'),
                     graph.param(name + '.bias'))

    def forward(self, graph, x, mode, tensors, taps=None):
        """
            :param x: input node [N, C, H, W]
            :param mode: 'train' or 'infer' (batch-norm behaviour)
            :param tensors: ModelWeights tensors (batch-norm buffers are
                            read there and updated in place in train mode)
            :param taps: optional dict filled with intermediate nodes
        """
        raise NotImplementedError

    def __repr__(self):
        return "{0}({1}px, channels={2})".format(self.__class__.__name__,
                                                  self.image_size,
                                                  self.channels)


class DirectNet(Network):
    ARCHITECTURE = 'direct'
    SIZE_MULTIPLE = 16
    DEFAULT_CHANNELS = (16, 32, 64, 64)
    DEFAULT_HIDDEN = 128
    TAPS = ('conv1', 'conv2', 'conv3', 'conv4')

    def _build(self):
        c_in = self.IN_CHANNELS
        for i, c_out in enumerate(self.channels, start=1):
            self._conv('conv{0}'.format(i), c_in, c_out)
            c_in = c_out
        side = self.image_size // 16
        self._dense('fc1', c_in * side * side, self.hidden)
        self._dense('fc2', self.hidden, N_OUTPUTS)

    def forward(self, graph, x, mode, tensors, taps=None):
        for name in self.TAPS:
            x = self._block(graph, x, name, mode, tensors)
            if taps is not None:
                taps[name] = x
            x, _ = max_pool2(x)
        x = relu(self._fc(graph, flatten(x), 'fc1'))
        return self._fc(graph, x, 'fc2')


class MaskNet(Network):
    ARCHITECTURE = 'masknet'
    SIZE_MULTIPLE = 8
    IN_CHANNELS = N_CLASSES
    DEFAULT_CHANNELS = (16, 32, 64)
    DEFAULT_HIDDEN = 64
    TAPS = ('conv1', 'conv2', 'conv3')

    def _build(self):
        c_in = self.IN_CHANNELS
        for i, c_out in enumerate(self.channels, start=1):
            self._conv('conv{0}'.format(i), c_in, c_out)
            c_in = c_out
        side = self.image_size // 8
        self._dense('fc1', c_in * side * side, self.hidden)
        self._dense('fc2', self.hidden, N_OUTPUTS)

    def forward(self, graph, x, mode, tensors, taps=None):
        for name in self.TAPS:
            x = self._block(graph, x, name, mode, tensors)
            if taps is not None:
                taps[name] = x
            x, _ = max_pool2(x)
        x = relu(self._fc(graph, flatten(x), 'fc1'))
        return self._fc(graph, x, 'fc2')


class UNet(Network):
    """
        ``hidden`` is the bottleneck width.
    """
    ARCHITECTURE = 'unet'
    SIZE_MULTIPLE = 8
    DEFAULT_CHANNELS = (16, 32, 64)
    DEFAULT_HIDDEN = 128
    TAPS = ('enc1', 'enc2', 'enc3', 'bottleneck', 'dec3', 'dec2', 'dec1')

    def _build(self):
        c_in = self.IN_CHANNELS
        for level, c_out in enumerate(self.channels, start=1):
            self._conv('enc{0}a'.format(level), c_in, c_out)
            self._conv('enc{0}b'.format(level), c_out, c_out)
            c_in = c_out
        self._conv('bottleneck.a', c_in, self.hidden)
        self._conv('bottleneck.b', self.hidden, self.hidden)
        c_low = self.hidden
        for level in range(len(self.channels), 0, -1):
            c_skip = self.channels[level - 1]
            self._conv('dec{0}a'.format(level), c_low + c_skip, c_skip)
            self._conv('dec{0}b'.format(level), c_skip, c_skip)
            c_low = c_skip
        self._head('head', c_low, N_CLASSES)

    def forward(self, graph, x, mode, tensors, taps=None):
        taps = taps if taps is not None else {}
        skips = []
        for level in range(1, len(self.channels) + 1):
            x = self._block(graph, x, 'enc{0}a'.format(level), mode, tensors)
            x = self._block(graph, x, 'enc{0}b'.format(level), mode, tensors)
            taps['enc{0}'.format(level)] = x
            skips.append(x)
            x, _ = max_pool2(x)
        x = self._block(graph, x, 'bottleneck.a', mode, tensors)
        x = self._block(graph, x, 'bottleneck.b', mode, tensors)
        taps['bottleneck'] = x
        for level in range(len(self.channels), 0, -1):
            x = upsample2_concat(x, skips[level - 1])
            x = self._block(graph, x, 'dec{0}a'.format(level), mode, tensors)
            x = self._block(graph, x, 'dec{0}b'.format(level), mode, tensors)
            taps['dec{0}'.format(level)] = x
        logits = conv2d(x, graph.param('head.kernel'),
                        graph.param('head.bias'))
        return softmax_channels(logits)


ARCHITECTURES = OrderedDict([
    (DirectNet.ARCHITECTURE, DirectNet),
    (UNet.ARCHITECTURE, UNet),
    (MaskNet.ARCHITECTURE, MaskNet),
])


def build_network(architecture, image_size, channels=None, hidden=None):
    """
        :return: Network instance for an architecture tag
    """
    try:
        cls = ARCHITECTURES[architecture]
    except KeyError:
        raise NetworkException("unknown architecture {0!r}, expected one of "
                               "{1}".format(architecture,
                                            list(ARCHITECTURES)))
    return cls(image_size, channels, hidden)


def network_for(weights):
    """
        Rebuilds the network a ModelWeights record was trained with.
    """
    meta = weights.metadata
    return build_network(weights.architecture, weights.image_size,
                         meta.get('channels'), meta.get('hidden'))


def one_hot(labels):
    """
        [N, H, W] class ids -> [N, 3, H, W] float32 one-hot planes.
    """
    labels = np.asarray(labels)
    planes = np.stack([labels == c for c in range(N_CLASSES)], axis=1)
    return planes.astype(np.float32)


class NetworkException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg
