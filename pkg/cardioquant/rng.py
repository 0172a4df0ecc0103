# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.rng` -- named random streams
==============================================

All randomness of a run flows from one master seed. Each consumer asks for
a sub-stream identified by a tuple of names, e.g.::

    substream(7, 'dataset', 'subject', 3)
    substream(7, 'fold', 1, 'init', 'unet')

Changing one stage of a run (say, the UNet epochs) leaves every other
stream untouched.
"""
import zlib

import numpy as np


def _name_key(name):
    return zlib.crc32(str(name).encode('utf-8')) & 0xffffffff


def substream(seed, *names):
    """
        Returns a numpy Generator derived from seed and the given names.

        :param seed: master seed (non-negative integer)
        :param names: any printable tokens, order matters

        :return: numpy.random.Generator
    """
    if seed is None or int(seed) < 0:
        raise ValueError("seed must be a non-negative integer")
    spawn_key = tuple(_name_key(n) for n in names)
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.PCG64(sequence))


def derive_seed(seed, *names):
    """
        Returns a plain integer seed for the named sub-stream. Handy when a
        seed must be stored in a manifest or handed to another component.
    """
    return int(substream(seed, *names).integers(0, 2 ** 31 - 1))
