# -*- coding: utf-8 -*-
from collections import OrderedDict

import numpy as np

from cardioquant.objects.indices import INDEX_NAMES
from cardioquant.tensor import Tensor

WEIGHTS_FORMAT_VERSION = 1


class ModelWeights(object):
    """
        ModelWeights is the trained state of one network: ordered, named
        tensors (trainable parameters and batch-norm buffers), the
        architecture tag and training metadata.

        Weight records are treated as immutable once training returns them.
    """
    def __init__(self, architecture, image_size, tensors, metadata=None,
                 format_version=WEIGHTS_FORMAT_VERSION):
        self._architecture = architecture
        self._image_size = int(image_size)
        self._tensors = OrderedDict()
        for name, value in tensors.items():
            self._tensors[name] = (value if isinstance(value, Tensor)
                                   else Tensor(value))
        self._metadata = dict(metadata or {})
        self._format_version = format_version

    @property
    def architecture(self):
        return self._architecture

    @property
    def image_size(self):
        return self._image_size

    @property
    def tensors(self):
        return self._tensors

    @property
    def metadata(self):
        return self._metadata

    @property
    def format_version(self):
        return self._format_version

    @property
    def final_loss(self):
        return self._metadata.get('final_loss')

    def names(self):
        return list(self._tensors.keys())

    def shapes(self):
        """
            :return: list of (name, shape) in manifest order
        """
        return [(name, tuple(t.shape)) for name, t in self._tensors.items()]

    def __getitem__(self, name):
        return self._tensors[name]

    def __eq__(self, other):
        if not isinstance(other, ModelWeights):
            return False
        if (self._architecture != other._architecture or
                self._image_size != other._image_size or
                self.names() != other.names()):
            return False
        return all(np.array_equal(self._tensors[n].array,
                                  other._tensors[n].array)
                   for n in self._tensors)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "{0}: [{1} {2}px, {3} tensors]".format(
            self.__class__.__name__, self._architecture, self._image_size,
            len(self._tensors))


class EnsembleWeights(object):
    """
        EnsembleWeights holds, for each of the 11 indices, the affine
        coefficients (w_direct, w_seg, b) of the 2nd-level predictor plus
        the training metadata (sample count, per-index training MSE).
    """
    def __init__(self, coefficients, n_samples=0, residuals=None,
                 metadata=None):
        coef = np.array(coefficients, dtype=np.float64)
        if coef.shape != (len(INDEX_NAMES), 3):
            raise ValueError("ensemble coefficients must be 11 triplets, got "
                             "shape {0}".format(coef.shape))
        if not np.all(np.isfinite(coef)):
            raise ValueError("ensemble coefficients must be finite")
        self._coefficients = coef
        self._n_samples = int(n_samples)
        if residuals is None:
            residuals = [0.0] * len(INDEX_NAMES)
        self._residuals = np.array(residuals, dtype=np.float64)
        self._metadata = dict(metadata or {})

    @classmethod
    def identity(cls, base='direct'):
        """
            Weights that pass one base prediction through unchanged.
        """
        coef = np.zeros((len(INDEX_NAMES), 3))
        coef[:, 0 if base == 'direct' else 1] = 1.0
        return cls(coef)

    @property
    def coefficients(self):
        return self._coefficients.copy()

    @property
    def n_samples(self):
        return self._n_samples

    @property
    def residuals(self):
        """
            Per-index training mean squared error.
        """
        return self._residuals.copy()

    @property
    def metadata(self):
        return self._metadata

    def triplet(self, index):
        """
            :param index: position or name of the index
            :return: (w_direct, w_seg, b)
        """
        if isinstance(index, str):
            index = INDEX_NAMES.index(index)
        return tuple(float(v) for v in self._coefficients[index])

    def get_dict(self):
        rdict = OrderedDict()
        for pos, name in enumerate(INDEX_NAMES):
            w_d, w_s, b = self.triplet(pos)
            rdict[name] = OrderedDict([('w_direct', w_d), ('w_seg', w_s),
                                       ('b', b),
                                       ('residual',
                                        float(self._residuals[pos]))])
        return rdict

    def __eq__(self, other):
        return (isinstance(other, EnsembleWeights) and
                np.array_equal(self._coefficients, other._coefficients))

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "{0}: [{1} samples]".format(self.__class__.__name__,
                                           self._n_samples)


__all__ = ['ModelWeights', 'EnsembleWeights']
