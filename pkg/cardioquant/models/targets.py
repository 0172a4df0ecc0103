# -*- coding: utf-8 -*-
import numpy as np

from cardioquant.objects.indices import IndexVector, INDEX_NAMES, AREA_INDICES
from cardioquant.tensor import Tensor


def target_scale(image_size):
    """
        Per-index divisor: size^2 for areas, size for lengths.
    """
    size = float(image_size)
    if size <= 0:
        raise ValueError("image_size must be > 0, got {0}".format(
            image_size))
    return np.array([size * size if name in AREA_INDICES else size
                     for name in INDEX_NAMES])


def normalize_targets(values, image_size):
    """
        Brings indices to the unit range the networks regress.

        :param values: IndexVector, or array [..., 11] in px / px^2
        :return: Tensor with the same leading shape
    """
    if isinstance(values, IndexVector):
        values = values.as_array()
    return Tensor(np.asarray(values, dtype=np.float64) /
                  target_scale(image_size))


def denormalize_targets(values, image_size):
    """
        Inverse of normalize_targets.

        :param values: Tensor or array [..., 11]
        :return: float64 numpy array in px / px^2 (not clamped)
    """
    if isinstance(values, Tensor):
        values = values.array
    return np.asarray(values, dtype=np.float64) * target_scale(image_size)
