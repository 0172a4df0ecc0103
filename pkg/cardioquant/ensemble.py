# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.ensemble` -- the 2nd-level linear predictor
=============================================================

For each of the 11 indices independently, the final estimate is the
affine combination ``w_direct * p_direct + w_seg * p_seg + b`` fitted by
ordinary least squares on (direct prediction, seg prediction, truth)
triplets. The intercept keeps both base predictors inside the hypothesis
space, so the training error can never exceed either of theirs.
"""
import logging

import numpy as np
from scipy import linalg

from cardioquant.objects.indices import IndexVector, INDEX_NAMES
from cardioquant.objects.weights import EnsembleWeights

log = logging.getLogger(__name__)

RIDGE_LAMBDA = 1e-6
MIN_SAMPLES = 3


def _as_matrix(values, what):
    rows = [v.as_array() if isinstance(v, IndexVector) else v
            for v in values]
    arr = np.array(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != len(INDEX_NAMES):
        raise EnsembleValidationException("{0} must be an [n, 11] array, got "
                                          "shape {1}".format(what, arr.shape))
    if not np.all(np.isfinite(arr)):
        raise EnsembleValidationException("{0} contains non-finite "
                                          "values".format(what))
    return arr


def solve_index(p_direct, p_seg, truth):
    """
        Least squares on the design [p_direct, p_seg, 1] through the normal
        equations and a Cholesky factorisation; a rank-deficient design
        falls back to ridge with lambda 1e-6.

        :return: (w_direct, w_seg, b) numpy array, ridge flag
    """
    design = np.column_stack([p_direct, p_seg, np.ones_like(p_direct)])
    gram = design.T.dot(design)
    rhs = design.T.dot(truth)
    ridge = np.linalg.matrix_rank(design) < design.shape[1]
    if not ridge:
        try:
            return linalg.cho_solve(linalg.cho_factor(gram), rhs), False
        except linalg.LinAlgError:
            ridge = True
    gram = gram + RIDGE_LAMBDA * np.eye(design.shape[1])
    return linalg.cho_solve(linalg.cho_factor(gram), rhs), True


def combine(coefficients, direct, seg):
    """
        Unclamped affine combination, [n, 11] in and out.
    """
    coefficients = np.asarray(coefficients)
    return (direct * coefficients[:, 0] + seg * coefficients[:, 1] +
            coefficients[:, 2])


def fit_ensemble_arrays(direct, seg, truth, metadata=None):
    """
        :param direct: [n, 11] direct-estimation predictions
        :param seg: [n, 11] segmentation-module predictions
        :param truth: [n, 11] ground truth

        :return: EnsembleWeights with the per-index training MSE (of the
                 clamped prediction) as residuals
    """
    direct = _as_matrix(direct, 'direct predictions')
    seg = _as_matrix(seg, 'seg predictions')
    truth = _as_matrix(truth, 'truth')
    n = direct.shape[0]
    if n < MIN_SAMPLES:
        raise InsufficientDataException("the ensemble needs at least {0} "
                                        "samples, got {1}".format(
                                            MIN_SAMPLES, n))
    if seg.shape[0] != n or truth.shape[0] != n:
        raise EnsembleValidationException("sample counts differ: {0} direct, "
                                          "{1} seg, {2} truth".format(
                                              n, seg.shape[0],
                                              truth.shape[0]))
    coefficients = np.zeros((len(INDEX_NAMES), 3))
    ridged = []
    for i, name in enumerate(INDEX_NAMES):
        coefficients[i], ridge = solve_index(direct[:, i], seg[:, i],
                                             truth[:, i])
        if ridge:
            ridged.append(name)
    if ridged:
        log.debug("ensemble used the ridge fallback for %s", ridged)
    fitted = np.maximum(combine(coefficients, direct, seg), 0.0)
    residuals = np.mean((fitted - truth) ** 2, axis=0)
    meta = dict(metadata or {})
    meta['ridge'] = ridged
    return EnsembleWeights(coefficients, n, residuals, meta)


def fit_ensemble(pairs, metadata=None):
    """
        Fits the 2nd-level predictor.

        :param pairs: list of (direct prediction, seg prediction, truth),
                      each an IndexVector or 11 numbers

        :return: EnsembleWeights
    """
    pairs = list(pairs)
    if len(pairs) < MIN_SAMPLES:
        raise InsufficientDataException("the ensemble needs at least {0} "
                                        "samples, got {1}".format(
                                            MIN_SAMPLES, len(pairs)))
    direct, seg, truth = zip(*pairs)
    return fit_ensemble_arrays(direct, seg, truth, metadata)


def predict_ensemble_many(weights, direct, seg):
    """
        :return: [n, 11] ensemble estimates clamped at 0
    """
    direct = _as_matrix(direct, 'direct predictions')
    seg = _as_matrix(seg, 'seg predictions')
    return np.maximum(combine(weights.coefficients, direct, seg), 0.0)


def predict_ensemble(weights, direct, seg):
    """
        :param direct: IndexVector (or 11 numbers) from the direct CNN
        :param seg: IndexVector (or 11 numbers) from the segmentation module

        :return: IndexVector
    """
    return IndexVector(predict_ensemble_many(weights, [direct], [seg])[0])


def training_mse(weights, direct, seg, truth):
    """
        Per-index MSE of the ensemble and of each base predictor on the
        same samples.

        :return: dict method -> [11] array
    """
    direct = _as_matrix(direct, 'direct predictions')
    seg = _as_matrix(seg, 'seg predictions')
    truth = _as_matrix(truth, 'truth')
    fitted = predict_ensemble_many(weights, direct, seg)
    return {'ensemble': np.mean((fitted - truth) ** 2, axis=0),
            'direct': np.mean((direct - truth) ** 2, axis=0),
            'seg': np.mean((seg - truth) ** 2, axis=0)}


class EnsembleException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


class InsufficientDataException(EnsembleException):
    pass


class EnsembleValidationException(EnsembleException):
    pass
