# -*- coding: utf-8 -*-
from collections import OrderedDict

import numpy as np

INDEX_NAMES = ('A1', 'A2', 'D1', 'D2', 'D3',
               'RWT1', 'RWT2', 'RWT3', 'RWT4', 'RWT5', 'RWT6')

INDEX_GROUPS = OrderedDict([
    ('Area', ('A1', 'A2')),
    ('Dimension', ('D1', 'D2', 'D3')),
    ('RWT', ('RWT1', 'RWT2', 'RWT3', 'RWT4', 'RWT5', 'RWT6')),
])

# anatomical labels, in the same order as INDEX_NAMES
INDEX_LABELS = OrderedDict([
    ('A1', 'cavity'), ('A2', 'myocardium'),
    ('D1', 'AS-IL'), ('D2', 'IS-AL'), ('D3', 'I-AL'),
    ('RWT1', 'IS'), ('RWT2', 'I'), ('RWT3', 'IL'),
    ('RWT4', 'AL'), ('RWT5', 'A'), ('RWT6', 'AS'),
])

AREA_INDICES = INDEX_GROUPS['Area']


def group_of(name):
    """
        Returns the group (Area, Dimension, RWT) an index belongs to.
    """
    for group, members in INDEX_GROUPS.items():
        if name in members:
            return group
    raise KeyError(name)


class IndexVector(object):
    """
        IndexVector holds the 11 quantification targets of one frame,
        ordered [A1, A2, D1, D2, D3, RWT1..RWT6]. Areas are in px^2,
        lengths in px (unless scaled to mm by the harness).
    """
    def __init__(self, values):
        """
            :param values: 11 finite, non-negative numbers
        """
        arr = np.array(values, dtype=np.float64).reshape(-1)
        if arr.shape != (len(INDEX_NAMES),):
            raise ValueError("IndexVector needs {0} values, got {1}".format(
                len(INDEX_NAMES), arr.size))
        if not np.all(np.isfinite(arr)):
            raise ValueError("IndexVector values must be finite")
        if np.any(arr < 0):
            raise ValueError("IndexVector values must be non-negative")
        arr.setflags(write=False)
        self._values = arr

    @classmethod
    def from_dict(cls, rdict):
        return cls([rdict[name] for name in INDEX_NAMES])

    @classmethod
    def clamped(cls, values):
        """
            Builds an IndexVector from raw estimates, clamping negatives
            at 0. Non-finite values are rejected.
        """
        arr = np.array(values, dtype=np.float64).reshape(-1)
        return cls(np.maximum(arr, 0.0))

    def as_array(self):
        """
            :return: float64 numpy array of length 11 (a copy)
        """
        return self._values.copy()

    def get_dict(self):
        """
            :return: OrderedDict index name -> float
        """
        return OrderedDict((name, float(v))
                           for name, v in zip(INDEX_NAMES, self._values))

    def group(self, name):
        """
            :return: values of one index group as a numpy array
        """
        return np.array([self[n] for n in INDEX_GROUPS[name]])

    def __getitem__(self, key):
        if isinstance(key, str):
            key = INDEX_NAMES.index(key)
        return float(self._values[key])

    def __getattr__(self, name):
        if name in INDEX_NAMES:
            return self[name]
        raise AttributeError(name)

    def __len__(self):
        return len(INDEX_NAMES)

    def __iter__(self):
        return iter(float(v) for v in self._values)

    def __eq__(self, other):
        return (isinstance(other, IndexVector) and
                np.array_equal(self._values, other._values))

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self._values.tobytes())

    def __repr__(self):
        return "{0}({1})".format(
            self.__class__.__name__,
            ", ".join("{0}={1:.2f}".format(n, v)
                      for n, v in zip(INDEX_NAMES, self._values)))
