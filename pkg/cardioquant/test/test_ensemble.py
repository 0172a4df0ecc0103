#!/usr/bin/env python
# -*- coding: utf-8 -*-

import unittest

import numpy as np
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from cardioquant.ensemble import (solve_index, fit_ensemble,
                                  fit_ensemble_arrays, predict_ensemble,
                                  predict_ensemble_many, training_mse,
                                  InsufficientDataException,
                                  EnsembleValidationException, MIN_SAMPLES)
from cardioquant.objects.indices import IndexVector, INDEX_NAMES
from cardioquant.objects.weights import EnsembleWeights

# relative slack for float64 round-off in the MSE comparisons
SLACK = 1e-9


def random_triplets(rng, n):
    truth = rng.uniform(0, 100, (n, 11))
    direct = np.abs(truth + rng.normal(0, 5, (n, 11)) + rng.uniform(-3, 3))
    seg = np.abs(0.9 * truth + rng.normal(0, 8, (n, 11)))
    return direct, seg, truth


class TestEnsemble(unittest.TestCase):
    def test_matches_lstsq(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(MIN_SAMPLES + 2, 60))
            direct, seg, truth = random_triplets(rng, n)
            weights = fit_ensemble_arrays(direct, seg, truth)
            for i in range(len(INDEX_NAMES)):
                design = np.column_stack([direct[:, i], seg[:, i],
                                          np.ones(n)])
                expected = np.linalg.lstsq(design, truth[:, i], rcond=None)[0]
                np.testing.assert_allclose(weights.triplet(i), expected,
                                           rtol=1e-6, atol=1e-6)

    def test_never_worse_than_either_base(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            direct, seg, truth = random_triplets(rng, 30)
            weights = fit_ensemble_arrays(direct, seg, truth)
            errors = training_mse(weights, direct, seg, truth)
            bound = np.minimum(errors['direct'], errors['seg'])
            self.assertTrue(np.all(errors['ensemble'] <=
                                   bound * (1 + SLACK) + SLACK))
            np.testing.assert_allclose(weights.residuals, errors['ensemble'])

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (8, 11),
                  elements=st.integers(0, 100).map(float)),
           arrays(np.float64, (8, 11),
                  elements=st.integers(0, 100).map(float)),
           arrays(np.float64, (8, 11),
                  elements=st.integers(0, 100).map(float)))
    def test_bound_holds_for_any_data(self, direct, seg, truth):
        weights = fit_ensemble_arrays(direct, seg, truth)
        errors = training_mse(weights, direct, seg, truth)
        bound = np.minimum(errors['direct'], errors['seg'])
        # the ridge fallback may cost a hair on degenerate designs
        self.assertTrue(np.all(errors['ensemble'] <=
                               bound * (1 + 1e-6) + 1e-6))

    def test_exact_recovery(self):
        rng = np.random.default_rng(13)
        direct = rng.uniform(0, 50, (20, 11))
        seg = rng.uniform(0, 50, (20, 11))
        truth = 0.7 * direct + 0.2 * seg + 3.0
        weights = fit_ensemble_arrays(direct, seg, truth)
        for i in range(11):
            np.testing.assert_allclose(weights.triplet(i), (0.7, 0.2, 3.0),
                                       atol=1e-8)
        self.assertEqual(weights.metadata['ridge'], [])
        self.assertEqual(weights.n_samples, 20)

    def test_ridge_fallback(self):
        rng = np.random.default_rng(14)
        direct = rng.uniform(0, 50, (10, 11))
        truth = direct + rng.normal(0, 1, (10, 11))
        coefficients, ridge = solve_index(direct[:, 0], direct[:, 0],
                                          truth[:, 0])
        self.assertTrue(ridge)
        self.assertTrue(np.all(np.isfinite(coefficients)))
        weights = fit_ensemble_arrays(direct, direct.copy(), truth,
                                      {'fold': 0})
        self.assertEqual(weights.metadata['ridge'], list(INDEX_NAMES))
        self.assertEqual(weights.metadata['fold'], 0)
        errors = training_mse(weights, direct, direct, truth)
        self.assertTrue(np.all(errors['ensemble'] <=
                               errors['direct'] * (1 + 1e-6) + 1e-6))

    def test_constant_predictions(self):
        truth = np.arange(44, dtype=np.float64).reshape(4, 11)
        flat = np.ones((4, 11))
        weights = fit_ensemble_arrays(flat, flat, truth)
        fitted = predict_ensemble_many(weights, flat, flat)
        np.testing.assert_allclose(fitted, np.tile(truth.mean(axis=0),
                                                   (4, 1)), rtol=1e-4)

    def test_insufficient_data(self):
        rows = np.ones((2, 11))
        self.assertRaises(InsufficientDataException, fit_ensemble_arrays,
                          rows, rows, rows)
        self.assertRaises(InsufficientDataException, fit_ensemble,
                          [(rows[0], rows[0], rows[0])])

    def test_validation(self):
        rows = np.ones((4, 11))
        self.assertRaises(EnsembleValidationException, fit_ensemble_arrays,
                          np.ones((4, 10)), rows, rows)
        self.assertRaises(EnsembleValidationException, fit_ensemble_arrays,
                          rows, np.ones((5, 11)), rows)
        bad = rows.copy()
        bad[1, 3] = np.nan
        self.assertRaises(EnsembleValidationException, fit_ensemble_arrays,
                          rows, rows, bad)

    def test_predict_clamps_at_zero(self):
        coef = np.zeros((11, 3))
        coef[:, 0] = 1.0
        coef[:, 2] = -10.0
        weights = EnsembleWeights(coef)
        estimate = predict_ensemble(weights, IndexVector(np.full(11, 4.0)),
                                    np.zeros(11))
        self.assertEqual(estimate.as_array().tolist(), [0.0] * 11)

    def test_fit_from_pairs(self):
        rng = np.random.default_rng(15)
        direct, seg, truth = random_triplets(rng, 12)
        pairs = [(IndexVector(d), s, IndexVector(t))
                 for d, s, t in zip(direct, seg, truth)]
        self.assertEqual(fit_ensemble(pairs),
                         fit_ensemble_arrays(direct, seg, truth))

    def test_sample_order_does_not_matter(self):
        rng = np.random.default_rng(16)
        direct, seg, truth = random_triplets(rng, 40)
        weights = fit_ensemble_arrays(direct, seg, truth)
        for _ in range(5):
            order = rng.permutation(40)
            shuffled = fit_ensemble_arrays(direct[order], seg[order],
                                           truth[order])
            np.testing.assert_allclose(shuffled.coefficients,
                                       weights.coefficients, rtol=1e-8,
                                       atol=1e-10)

    def test_identity_weights(self):
        direct = np.full((1, 11), 5.0)
        seg = np.full((1, 11), 9.0)
        np.testing.assert_array_equal(
            predict_ensemble_many(EnsembleWeights.identity('seg'), direct,
                                  seg), seg)


if __name__ == '__main__':
    test_suite = ['test_matches_lstsq', 'test_never_worse_than_either_base',
                  'test_bound_holds_for_any_data', 'test_exact_recovery',
                  'test_ridge_fallback', 'test_constant_predictions',
                  'test_insufficient_data', 'test_validation',
                  'test_predict_clamps_at_zero', 'test_fit_from_pairs',
                  'test_sample_order_does_not_matter',
                  'test_identity_weights']
    suite = unittest.TestSuite(map(TestEnsemble, test_suite))
    test_result = unittest.TextTestRunner(verbosity=2).run(suite)
