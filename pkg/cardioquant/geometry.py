# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.geometry` -- measuring a label mask
=====================================================

Exact quantification of the 11 indices from a label mask. The same code
produces the ground truth of the synthetic phantoms and measures masks
predicted by the U-Net, so it is the single source of truth for what an
index means.

Conventions:

- pixel (row i, column j) has its centre at x = j, y = i;
- angles are measured from image "up" (the anterior-septal axis, -y) and
  grow counter-clockwise as seen on screen: direction(t) = (-sin t, -cos t);
- 360 rays at 1 degree from the cavity centroid, sampled every 0.1 px;
- a class is turned into a 0/1 indicator image, smoothed with a Gaussian
  of sigma 1 px and sampled along each ray by bilinear interpolation. The
  radius of the class along a ray is where the samples last drop below
  0.5. A rasterised disc of radius r then measures within a few tenths
  of a pixel of r on axis-aligned and oblique rays alike;
- the epicardial radius uses the indicator of class 1 or 2, so a ray
  where the myocardium is missing measures zero thickness.

Non-star-convex cavities are tolerated: the last crossing along a ray wins,
even after a gap.
"""
import logging

import numpy as np
from scipy import ndimage

from cardioquant.objects.indices import IndexVector
from cardioquant.objects.subject import BACKGROUND, MYOCARDIUM, CAVITY

log = logging.getLogger(__name__)

N_RAYS = 360
RAY_STEP = 0.1
SMOOTH_SIGMA = 1.0
LEVEL = 0.5
# blur support (4 sigma) plus the fractional centroid offset
REACH_MARGIN = 6
SECTOR_DEGREES = 60
DIAMETER_AXES = (0, 60, 120)
FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


def ray_directions(n_rays=N_RAYS):
    """
        :return: (dx, dy) arrays of unit vectors, ray k at k * 360/n degrees
    """
    theta = np.deg2rad(np.arange(n_rays) * (360.0 / n_rays))
    return -np.sin(theta), -np.cos(theta)


def pixel_angles(shape, cx, cy):
    """
        Polar coordinates of every pixel centre about (cx, cy) in the
        convention above.

        :return: (radius, angle in radians in [0, 2pi))
    """
    rows, cols = np.indices(shape, dtype=np.float64)
    dx = cols - cx
    dy = rows - cy
    radius = np.hypot(dx, dy)
    angle = np.mod(np.arctan2(-dx, -dy), 2 * np.pi)
    return radius, angle


def _centroid_split(mask):
    """
        Integer and fractional parts of the centroid of a boolean mask,
        computed from exact integer sums so that an integer shift of the
        mask shifts the integer part and leaves the fraction untouched.
    """
    rows, cols = np.nonzero(mask)
    count = rows.size
    sum_x = int(cols.sum())
    sum_y = int(rows.sum())
    ix, iy = sum_x // count, sum_y // count
    fx = (sum_x - ix * count) / float(count)
    fy = (sum_y - iy * count) / float(count)
    return ix, iy, fx, fy


def sample_rays(field, ix, iy, fx, fy, reach, n_rays=N_RAYS, step=RAY_STEP):
    """
        Bilinear samples of a field along the rays, zero outside the image.
        Sampling happens in a window centred on pixel (ix, iy), so an
        integer shift of the field leaves the samples bit-identical.

        :param reach: longest distance a ray needs to cover, in pixels

        :return: (distances [S], samples [n_rays, S])
    """
    nsteps = int(np.ceil(reach / step)) + 1
    t = np.arange(nsteps) * step
    padded = np.pad(field, reach, mode='constant')
    window = padded[iy:iy + 2 * reach + 1, ix:ix + 2 * reach + 1]
    dx, dy = ray_directions(n_rays)
    cols = reach + fx + dx[:, None] * t[None, :]
    rows = reach + fy + dy[:, None] * t[None, :]
    samples = ndimage.map_coordinates(window, [rows.ravel(), cols.ravel()],
                                      order=1, mode='constant', cval=0.0)
    return t, samples.reshape(rows.shape)


def _last_crossing(t, samples, step):
    """
        Distance at which each ray last drops below the 0.5 level,
        linearly interpolated between the two samples around it.
    """
    inside = samples >= LEVEL
    nsteps = samples.shape[1]
    last = nsteps - 1 - np.argmax(inside[:, ::-1], axis=1)
    after = np.minimum(last + 1, nsteps - 1)
    rays = np.arange(samples.shape[0])
    v_in = samples[rays, last]
    v_out = samples[rays, after]
    drop = v_in - v_out
    fraction = np.where(drop > 0, (v_in - LEVEL) / np.where(drop > 0, drop,
                                                            1.0), 0.0)
    radius = t[last] + step * fraction
    return np.where(inside.any(axis=1), radius, 0.0)


def _indicator(mask):
    return ndimage.gaussian_filter(mask.astype(np.float64), SMOOTH_SIGMA,
                                   mode='constant', cval=0.0)


def ray_profile(labels, n_rays=N_RAYS, step=RAY_STEP):
    """
        Endocardial and epicardial radius along every ray.

        :return: (endo radii [n_rays], epi radii [n_rays], (cx, cy))
    """
    labels = _check_mask(labels)
    ix, iy, fx, fy = _centroid_split(labels == CAVITY)
    rows, cols = np.nonzero(labels != BACKGROUND)
    reach = int(np.ceil(np.hypot(rows - iy, cols - ix).max())) + REACH_MARGIN
    t, cavity = sample_rays(_indicator(labels == CAVITY), ix, iy, fx, fy,
                            reach, n_rays, step)
    _, heart = sample_rays(_indicator(labels != BACKGROUND), ix, iy, fx, fy,
                           reach, n_rays, step)
    endo = _last_crossing(t, cavity, step)
    epi = np.maximum(_last_crossing(t, heart, step), endo)
    return endo, epi, (ix + fx, iy + fy)


def _check_mask(labels):
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise InvalidMaskException("label mask must be 2-D, got shape "
                                   "{0}".format(labels.shape))
    if not np.any(labels == CAVITY):
        raise InvalidMaskException("label mask has no cavity (class 2) "
                                   "pixel")
    if not np.any(labels == MYOCARDIUM):
        raise InvalidMaskException("label mask has no myocardium (class 1) "
                                   "pixel")
    return labels


def quantify_mask(labels):
    """
        Measures the 11 indices of a label mask.

        - A1, A2: pixel counts of class 2 and class 1;
        - D1..D3: sum of the two opposite endocardial radii along the axes
          at 0, 60 and 120 degrees from the anterior-septal axis;
        - RWT1..RWT6: mean of (epi - endo) radius over the six 60 degree
          sectors, counter-clockwise from the anterior-septal axis.

        :param labels: [H, W] mask with classes {0, 1, 2}

        :return: IndexVector
    """
    labels = _check_mask(labels)
    endo, epi, _ = ray_profile(labels)
    half = N_RAYS // 2
    per_degree = N_RAYS // 360
    dims = [endo[a * per_degree] + endo[a * per_degree + half]
            for a in DIAMETER_AXES]
    thickness = epi - endo
    width = SECTOR_DEGREES * per_degree
    rwt = [thickness[j * width:(j + 1) * width].mean() for j in range(6)]
    areas = [np.count_nonzero(labels == CAVITY),
             np.count_nonzero(labels == MYOCARDIUM)]
    return IndexVector(areas + dims + rwt)


def dice(predicted, truth, cls):
    """
        Dice overlap 2|P & T| / (|P| + |T|) of one class; 1.0 when the class
        is absent from both masks.
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise GeometryException("dice shape mismatch {0} vs {1}".format(
            predicted.shape, truth.shape))
    p = predicted == cls
    t = truth == cls
    total = int(p.sum()) + int(t.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(p, t).sum()) / total


def _keep_largest(mask):
    components, count = ndimage.label(mask, structure=FOUR_CONNECTED)
    if count <= 1:
        return mask
    sizes = np.bincount(components.ravel())[1:]
    return components == (int(np.argmax(sizes)) + 1)


def mask_from_probs(probs):
    """
        Turns [3, H, W] channel probabilities into a label mask: per-pixel
        argmax (ties go to the lowest class id), then only the largest
        4-connected cavity component and the largest 4-connected
        foreground (class 1 or 2) component are kept; stray pixels become
        background. Degenerate masks are returned as they are.

        :return: [H, W] uint8 mask
    """
    probs = np.asarray(probs)
    if probs.ndim != 3 or probs.shape[0] != 3:
        raise GeometryException("mask_from_probs expects [3, H, W], got "
                                "{0}".format(probs.shape))
    labels = np.argmax(probs, axis=0).astype(np.uint8)

    cavity = labels == CAVITY
    if cavity.any():
        labels[cavity & ~_keep_largest(cavity)] = BACKGROUND
    foreground = labels != BACKGROUND
    if foreground.any():
        labels[foreground & ~_keep_largest(foreground)] = BACKGROUND
    return labels


def count_components(mask):
    """
        Number of 4-connected components of a boolean mask.
    """
    return int(ndimage.label(np.asarray(mask, dtype=bool),
                             structure=FOUR_CONNECTED)[1])


class GeometryException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


class InvalidMaskException(GeometryException):
    pass
