# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.phase` -- systolic / diastolic phase bits
===========================================================

The phase of each frame is obtained by thresholding the predicted cavity
area (small cavity = systole) and then regularising the bit sequence so
that the whole cycle holds at most two change points.

Transitions are counted cyclically: frame 19 is followed by frame 0.
"""
import numpy as np

SYSTOLIC, DIASTOLIC = 1, 0


def cyclic_transitions(bits):
    """
        Number of positions t where bits[t] != bits[(t + 1) mod n].
    """
    bits = np.asarray(bits)
    return int(np.count_nonzero(bits != np.roll(bits, -1)))


class PhaseSequence(object):
    """
        PhaseSequence is the per-frame phase of one cycle (1 systolic,
        0 diastolic) with at most two cyclic transitions.
    """
    def __init__(self, bits):
        arr = np.array(bits, dtype=np.int64).reshape(-1)
        if arr.size == 0:
            raise ValueError("empty phase sequence")
        if np.any((arr != 0) & (arr != 1)):
            raise ValueError("phase bits must be 0 or 1")
        if cyclic_transitions(arr) > 2:
            raise ValueError("phase sequence has {0} cyclic transitions, at "
                             "most 2 allowed".format(cyclic_transitions(arr)))
        self._bits = tuple(int(b) for b in arr)

    @property
    def bits(self):
        return self._bits

    @property
    def transitions(self):
        return cyclic_transitions(self._bits)

    def __len__(self):
        return len(self._bits)

    def __iter__(self):
        return iter(self._bits)

    def __getitem__(self, index):
        return self._bits[index]

    def __eq__(self, other):
        if isinstance(other, PhaseSequence):
            return self._bits == other._bits
        return self._bits == tuple(other)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash(self._bits)

    def __repr__(self):
        return "PhaseSequence({0})".format("".join(str(b)
                                                   for b in self._bits))


def threshold_phase(a1_sequence):
    """
        Mid-range thresholding of the cavity areas of one cycle:
        tau = (min + max) / 2, bit = 1 where a1 < tau.

        :param a1_sequence: predicted cavity areas, one per frame

        :return: numpy int array of raw bits
    """
    a1 = np.asarray(a1_sequence, dtype=np.float64).reshape(-1)
    if a1.size == 0 or not np.all(np.isfinite(a1)):
        raise DegeneratePhaseException("cavity areas must be finite and "
                                       "non-empty")
    low, high = a1.min(), a1.max()
    if low == high:
        raise DegeneratePhaseException("all cavity areas are equal, phase "
                                       "cannot be thresholded")
    tau = 0.5 * (low + high)
    return (a1 < tau).astype(np.int64)


def candidate_sequences(n):
    """
        Every cyclic binary sequence of length n with at most two
        transitions, in tie-break order: all-diastolic, all-systolic, then
        systolic arcs by start frame and length (1 .. n-1).

        :return: list of (transitions, start, length, bits)
    """
    candidates = [(0, -1, 0, np.zeros(n, dtype=np.int64)),
                  (0, -1, n, np.ones(n, dtype=np.int64))]
    frames = np.arange(n)
    for start in range(n):
        for length in range(1, n):
            bits = (np.mod(frames - start, n) < length).astype(np.int64)
            candidates.append((2, start, length, bits))
    return candidates


def regularize_phase(raw_bits):
    """
        Returns the sequence with at most two cyclic transitions that agrees
        with the raw bits on the most frames. The search enumerates all
        candidates (382 for a 20-frame cycle). Ties go to fewer
        transitions, then all-diastolic before all-systolic, then the
        earlier systole start, then the shorter arc.

        :return: PhaseSequence
    """
    raw = np.asarray(raw_bits, dtype=np.int64).reshape(-1)
    if raw.size < 2:
        return PhaseSequence(raw)
    best = None
    best_agreement = -1
    for _, _, _, bits in candidate_sequences(raw.size):
        agreement = int(np.count_nonzero(bits == raw))
        if agreement > best_agreement:
            best, best_agreement = bits, agreement
    return PhaseSequence(best)


def infer_phase(a1_sequence):
    """
        Threshold then regularise. A cycle whose areas are all equal falls
        back to all-diastolic.

        :return: (raw bits, PhaseSequence)
    """
    try:
        raw = threshold_phase(a1_sequence)
    except DegeneratePhaseException:
        raw = np.zeros(len(a1_sequence), dtype=np.int64)
    return raw, regularize_phase(raw)


def phase_accuracy(predicted, truth):
    """
        Mean per-frame agreement over all subjects and frames.

        :param predicted: list of PhaseSequence (or bit sequences)
        :param truth: list of PhaseSequence (or bit sequences)

        :return: fraction in [0, 1]
    """
    predicted = list(predicted)
    truth = list(truth)
    if len(predicted) != len(truth):
        raise ValueError("phase_accuracy: {0} predicted sequences for {1} "
                         "truth sequences".format(len(predicted), len(truth)))
    agree = 0
    total = 0
    for pred, true in zip(predicted, truth):
        pred = np.asarray(list(pred))
        true = np.asarray(list(true))
        if pred.shape != true.shape:
            raise ValueError("phase_accuracy: sequence lengths differ "
                             "({0} vs {1})".format(pred.size, true.size))
        agree += int(np.count_nonzero(pred == true))
        total += true.size
    if total == 0:
        raise ValueError("phase_accuracy: no frames to compare")
    return agree / float(total)


class DegeneratePhaseException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg
