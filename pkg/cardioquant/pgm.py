# -*- coding: utf-8 -*-
"""
8-bit binary PGM (P5) encoding. Decoding lives in
:class:`cardioquant.parser.DatasetParser`.
"""
import numpy as np

MAXVAL = 255


def unit_to_gray(image):
    """
        Quantises [0, 1] floats to 8-bit gray levels.
    """
    image = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return np.rint(image * MAXVAL).astype(np.uint8)


def gray_to_unit(gray):
    """
        Inverse of unit_to_gray on the 256 representable levels.
    """
    return (np.asarray(gray, dtype=np.uint8).astype(np.float32) /
            np.float32(MAXVAL))


def encode_pgm(gray):
    """
        :param gray: [H, W] uint8 array
        :return: bytes of a binary PGM file
    """
    gray = np.asarray(gray)
    if gray.ndim != 2:
        raise ValueError("PGM images are 2-D, got shape {0}".format(
            gray.shape))
    if gray.dtype != np.uint8:
        if gray.min() < 0 or gray.max() > MAXVAL:
            raise ValueError("PGM values must be in [0, 255]")
        gray = gray.astype(np.uint8)
    header = "P5\n{0} {1}\n{2}\n".format(gray.shape[1], gray.shape[0],
                                         MAXVAL).encode('ascii')
    return header + np.ascontiguousarray(gray).tobytes()


def write_pgm(path, gray):
    """
        Writes an 8-bit PGM file.

        :return: the bytes written
    """
    payload = encode_pgm(gray)
    try:
        with open(path, 'wb') as fileobj:
            fileobj.write(payload)
    except (IOError, OSError) as error:
        raise IOError("cannot write PGM {0}: {1}".format(path, error))
    return payload


def labels_to_gray(labels):
    """
        Spreads class ids {0, 1, 2} over the gray range for viewing.
    """
    labels = np.asarray(labels, dtype=np.uint8)
    return (labels.astype(np.uint16) * 127).clip(0, MAXVAL).astype(np.uint8)
