# -*- coding: utf-8 -*-
import math

import numpy as np

from cardioquant.models.networks import network_for, one_hot
from cardioquant.models.predict import run_network, _as_batch
from cardioquant.pgm import MAXVAL, write_pgm

SEPARATOR = MAXVAL


def normalize_channel(channel):
    """
        Min-max stretch of one feature map to 0..255; a constant channel
        maps to 0.
    """
    channel = np.asarray(channel, dtype=np.float64)
    low, high = channel.min(), channel.max()
    if high <= low:
        return np.zeros(channel.shape, dtype=np.uint8)
    return np.rint((channel - low) / (high - low) * MAXVAL).astype(np.uint8)


def tile_channels(maps):
    """
        Tiles [C, H, W] maps row-major, ceil(sqrt(C)) tiles per row, with
        1-px separators of value 255 between tiles. Unused slots stay 0.

        :return: uint8 grid
    """
    channels, height, width = maps.shape
    cols = int(math.ceil(math.sqrt(channels)))
    rows = int(math.ceil(channels / float(cols)))
    grid = np.full((rows * height + rows - 1, cols * width + cols - 1),
                   SEPARATOR, dtype=np.uint8)
    for slot in range(rows * cols):
        r, c = divmod(slot, cols)
        top, left = r * (height + 1), c * (width + 1)
        tile = normalize_channel(maps[slot]) if slot < channels else 0
        grid[top:top + height, left:left + width] = tile
    return grid


def export_feature_maps(weights, image, layer, path=None):
    """
        Pre-pool activations of one layer for one image, as a tiled 8-bit
        grid.

        :param layer: conv1..conv4 for the direct CNN (conv1..conv3 for the
                      mask CNN, whose input is then a label mask)
        :param path: when given, the grid is written there as a PGM file

        :return: uint8 grid
    """
    network = network_for(weights)
    if layer not in network.TAPS:
        raise UnknownLayerException("{0} has no layer {1!r}; choose one of "
                                    "{2}".format(weights.architecture, layer,
                                                 list(network.TAPS)))
    if network.IN_CHANNELS == 1:
        inputs = _as_batch(image)[:1]
    else:
        inputs = one_hot(np.asarray(image)[None])
    _, taps = run_network(weights, inputs, taps=[layer])
    grid = tile_channels(taps[layer][0])
    if path is not None:
        write_pgm(path, grid)
    return grid


class UnknownLayerException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg
