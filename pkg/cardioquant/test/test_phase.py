#!/usr/bin/env python
# -*- coding: utf-8 -*-

import unittest

import numpy as np

from cardioquant.phase import (PhaseSequence, cyclic_transitions,
                               threshold_phase, candidate_sequences,
                               regularize_phase, infer_phase, phase_accuracy,
                               DegeneratePhaseException)

N = 20


def all_regular_sequences(n=N):
    codes = np.arange(2 ** n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n)) & 1).astype(np.int8)
    changes = np.count_nonzero(bits != np.roll(bits, -1, axis=1), axis=1)
    return bits[changes <= 2]


class TestPhase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.regular = all_regular_sequences()

    def test_candidate_count(self):
        candidates = candidate_sequences(N)
        self.assertEqual(len(candidates), 382)
        self.assertEqual(len(self.regular), 382)
        seen = set(tuple(bits) for _, _, _, bits in candidates)
        self.assertEqual(seen, set(tuple(int(b) for b in row)
                                   for row in self.regular))

    def test_cyclic_transitions(self):
        self.assertEqual(cyclic_transitions([0] * N), 0)
        self.assertEqual(cyclic_transitions([1] + [0] * 18 + [1]), 2)
        self.assertEqual(cyclic_transitions([0, 1] * 10), 20)

    def test_threshold(self):
        a1 = np.array([10, 9, 8, 4, 2, 2, 3, 6, 9, 10], dtype=float)
        # tau = 6, strictly below is systolic
        np.testing.assert_array_equal(threshold_phase(a1),
                                      [0, 0, 0, 1, 1, 1, 1, 0, 0, 0])
        self.assertRaises(DegeneratePhaseException, threshold_phase,
                          np.full(N, 5.0))
        self.assertRaises(DegeneratePhaseException, threshold_phase, [])
        self.assertRaises(DegeneratePhaseException, threshold_phase,
                          [1.0, np.inf])

    def test_regularized_is_optimal(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            raw = rng.integers(0, 2, N)
            result = regularize_phase(raw)
            self.assertLessEqual(result.transitions, 2)
            best = np.count_nonzero(self.regular == raw, axis=1).max()
            self.assertEqual(np.count_nonzero(np.array(result.bits) == raw),
                             best)

    def test_regular_input_is_kept(self):
        raw = [0] * 6 + [1] * 6 + [0] * 8
        self.assertEqual(regularize_phase(raw), raw)
        self.assertEqual(regularize_phase([1] * N), [1] * N)

    def test_tie_break(self):
        raw = np.zeros(N, dtype=int)
        raw[[3, 10]] = 1
        # two single-frame arcs tie; the earlier start wins
        expected = np.zeros(N, dtype=int)
        expected[3] = 1
        self.assertEqual(regularize_phase(raw), expected.tolist())
        self.assertEqual(regularize_phase([0] * N), [0] * N)

    def test_infer_phase(self):
        t = np.arange(N)
        a1 = 300 - 120 * np.exp(-0.5 * ((t - 8.5) / 2.0) ** 2)
        raw, phase = infer_phase(a1)
        self.assertEqual(len(raw), N)
        self.assertEqual(phase.transitions, 2)
        self.assertEqual(phase[8], 1)
        self.assertEqual(phase[0], 0)
        raw, phase = infer_phase(np.full(N, 100.0))
        self.assertEqual(phase, [0] * N)
        self.assertEqual(raw.tolist(), [0] * N)

    def test_phase_sequence(self):
        seq = PhaseSequence([0, 1, 1, 0])
        self.assertEqual(seq.bits, (0, 1, 1, 0))
        self.assertEqual(repr(seq), 'PhaseSequence(0110)')
        self.assertRaises(ValueError, PhaseSequence, [0, 1, 0, 1])
        self.assertRaises(ValueError, PhaseSequence, [0, 2])
        self.assertRaises(ValueError, PhaseSequence, [])

    def test_phase_accuracy(self):
        truth = [[0, 0, 1, 1], [1, 1, 0, 0]]
        self.assertEqual(phase_accuracy(truth, truth), 1.0)
        predicted = [PhaseSequence([0, 1, 1, 0]), [1, 1, 0, 0]]
        self.assertEqual(phase_accuracy(predicted, truth), 6 / 8.0)
        self.assertRaises(ValueError, phase_accuracy, truth, truth[:1])
        self.assertRaises(ValueError, phase_accuracy, [[0, 1]], [[0, 1, 1]])
        self.assertRaises(ValueError, phase_accuracy, [], [])


if __name__ == '__main__':
    test_suite = ['test_candidate_count', 'test_cyclic_transitions',
                  'test_threshold', 'test_regularized_is_optimal',
                  'test_regular_input_is_kept', 'test_tie_break',
                  'test_infer_phase', 'test_phase_sequence',
                  'test_phase_accuracy']
    suite = unittest.TestSuite(map(TestPhase, test_suite))
    test_result = unittest.TextTestRunner(verbosity=2).run(suite)
