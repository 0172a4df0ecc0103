# -*- coding: utf-8 -*-
import numpy as np

from cardioquant.objects.indices import IndexVector

FRAMES_PER_CYCLE = 20

BACKGROUND, MYOCARDIUM, CAVITY = 0, 1, 2


class Frame(object):
    """
        Frame is one time point of a cardiac cycle: the grayscale image,
        its label mask, the ground-truth indices and the phase bit.
    """
    def __init__(self, image, labels, truth, phase):
        """
            :param image: [1, H, W] (or [H, W]) floats in [0, 1]
            :param labels: [H, W] integers in {0, 1, 2}
            :param truth: IndexVector
            :param phase: 1 systolic, 0 diastolic
        """
        image = np.asarray(image, dtype=np.float32)
        if image.ndim == 2:
            image = image[None]
        labels = np.asarray(labels, dtype=np.uint8)
        if image.ndim != 3 or image.shape[0] != 1:
            raise ValueError("frame image must be [1, H, W], got "
                             "{0}".format(image.shape))
        if labels.shape != image.shape[1:]:
            raise ValueError("label mask shape {0} does not match image "
                             "{1}".format(labels.shape, image.shape))
        if labels.size and labels.max() > CAVITY:
            raise ValueError("label mask values must be in {0, 1, 2}")
        if int(phase) not in (0, 1):
            raise ValueError("phase must be 0 or 1, got {0}".format(phase))
        if not isinstance(truth, IndexVector):
            truth = IndexVector(truth)
        self._image = image
        self._labels = labels
        self._truth = truth
        self._phase = int(phase)

    @property
    def image(self):
        return self._image

    @property
    def labels(self):
        return self._labels

    @property
    def truth(self):
        return self._truth

    @property
    def phase(self):
        return self._phase

    @property
    def size(self):
        """
            :return: (H, W)
        """
        return self._labels.shape

    def __eq__(self, other):
        return (isinstance(other, Frame) and
                np.array_equal(self._image, other._image) and
                np.array_equal(self._labels, other._labels) and
                self._truth == other._truth and
                self._phase == other._phase)

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "{0}: [{1}x{2} phase={3}]".format(self.__class__.__name__,
                                                 self.size[0], self.size[1],
                                                 self._phase)


class Subject(object):
    """
        Subject is one cardiac cycle: exactly 20 ordered frames of the same
        size. Subjects are identified by their directory name
        (``subj_<k>``).
    """
    def __init__(self, subject_id, frames):
        frames = list(frames)
        if len(frames) != FRAMES_PER_CYCLE:
            raise ValueError("subject {0} has {1} frames, expected "
                             "{2}".format(subject_id, len(frames),
                                          FRAMES_PER_CYCLE))
        sizes = set(f.size for f in frames)
        if len(sizes) != 1:
            raise ValueError("subject {0} mixes frame sizes {1}".format(
                subject_id, sorted(sizes)))
        self._id = subject_id
        self._frames = frames

    @property
    def id(self):
        return self._id

    @property
    def frames(self):
        return self._frames

    @property
    def size(self):
        return self._frames[0].size

    @property
    def images(self):
        """
            :return: [20, 1, H, W] float32 array
        """
        return np.stack([f.image for f in self._frames])

    @property
    def labels(self):
        """
            :return: [20, H, W] uint8 array
        """
        return np.stack([f.labels for f in self._frames])

    @property
    def truths(self):
        """
            :return: [20, 11] float64 array of ground-truth indices
        """
        return np.stack([f.truth.as_array() for f in self._frames])

    @property
    def phases(self):
        return [f.phase for f in self._frames]

    def __len__(self):
        return len(self._frames)

    def __iter__(self):
        return iter(self._frames)

    def __getitem__(self, index):
        return self._frames[index]

    def __eq__(self, other):
        return (isinstance(other, Subject) and self._id == other._id and
                all(a == b for a, b in zip(self._frames, other._frames)))

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "{0}: [{1} {2}x{3}]".format(self.__class__.__name__, self._id,
                                           self.size[0], self.size[1])


def stack_frames(subjects):
    """
        Flattens subjects into frame-level arrays.

        :return: (images [F,1,H,W], labels [F,H,W], truths [F,11])
    """
    subjects = list(subjects)
    if not subjects:
        raise ValueError("no subjects to stack")
    images = np.concatenate([s.images for s in subjects])
    labels = np.concatenate([s.labels for s in subjects])
    truths = np.concatenate([s.truths for s in subjects])
    return images, labels, truths
