# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.phantom` -- synthetic short-axis cine phantoms
================================================================

Each subject is a 20-frame cardiac cycle. The endocardium and epicardium
are smooth star-convex curves

    r(theta) = base * (1 + a2 cos(2 theta + p2) + a3 cos(3 theta + p3))

around a (jittered) centre. Over the cycle the endocardium contracts by a
smooth profile that is flat at its maximum between the systole onset and
offset frames; the epicardium follows r_epi^2 - r_endo^2 = const, so the
myocardial area is conserved and the wall thickens in systole.

Masks are rasterised by pixel-centre inclusion. The ground truth of every
frame is measured on that mask by :func:`cardioquant.geometry.quantify_mask`.
"""
import csv
import hashlib
import io
import json
import logging
import os
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.ndimage import gaussian_filter

from cardioquant import geometry, phase
from cardioquant.objects.indices import INDEX_NAMES
from cardioquant.objects.subject import (Frame, Subject, FRAMES_PER_CYCLE,
                                         BACKGROUND, MYOCARDIUM, CAVITY)
from cardioquant.pgm import unit_to_gray, gray_to_unit, encode_pgm
from cardioquant.rng import substream

log = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1
TRUTH_HEADER = ('frame',) + INDEX_NAMES + ('phase',)
MIN_ENDO_RADIUS = 2.0
MIN_SUBJECTS = 3


class PhantomSpec(object):
    """
        Shape, motion and appearance parameters of the phantom generator.
        Lengths are in pixels, amplitudes are fractions of the radius,
        intensities are gray levels in [0, 1].
    """
    FIELDS = OrderedDict([
        ('image_size', 64),
        ('center_jitter', 3.0),
        ('endo_radius', 10.0),
        ('epi_radius', 16.0),
        ('radius_jitter', 0.15),
        ('wall_jitter', 0.2),
        ('endo_perturbation', (0.08, 0.04)),
        ('epi_perturbation', (0.05, 0.03)),
        ('contraction_depth', 0.3),
        ('depth_jitter', 0.15),
        ('systole_onset', 6),
        ('systole_offset', 11),
        ('ramp_frames', 3),
        ('phase_jitter', 1),
        ('noise_sigma', 0.05),
        ('texture_amplitude', 0.04),
        ('texture_smoothness', 3.0),
        ('blur_sigma', 0.5),
        ('cavity_intensity', 0.85),
        ('myocardium_intensity', 0.45),
        ('background_intensity', 0.15),
        ('seed', 7),
    ])

    def __init__(self, **kwargs):
        unknown = set(kwargs) - set(self.FIELDS)
        if unknown:
            raise PhantomSpecException("unknown phantom spec fields: "
                                       "{0}".format(sorted(unknown)))
        for name, default in self.FIELDS.items():
            value = kwargs.get(name, default)
            if isinstance(default, tuple):
                value = tuple(float(v) for v in value)
            setattr(self, name, value)
        self.image_size = int(self.image_size)
        self.systole_onset = int(self.systole_onset)
        self.systole_offset = int(self.systole_offset)
        self.ramp_frames = int(self.ramp_frames)
        self.phase_jitter = int(self.phase_jitter)
        self.validate()

    @classmethod
    def from_dict(cls, rdict):
        return cls(**dict(rdict))

    @classmethod
    def scaled(cls, image_size, **overrides):
        """
            Default anatomy rescaled from 64px to another image size.
        """
        ratio = int(image_size) / 64.0
        values = dict(image_size=int(image_size))
        for name in ('center_jitter', 'endo_radius', 'epi_radius'):
            values[name] = cls.FIELDS[name] * ratio
        values.update(overrides)
        return cls(**values)

    def to_dict(self):
        rdict = OrderedDict()
        for name in self.FIELDS:
            value = getattr(self, name)
            rdict[name] = list(value) if isinstance(value, tuple) else value
        return rdict

    def validate(self):
        """
            Checks that every subject these parameters can produce keeps a
            positive wall thickness, an endocardial radius of at least 2 px
            and fits in the image.
        """
        def fail(msg):
            raise PhantomSpecException("invalid phantom spec: " + msg)

        if not 16 <= self.image_size <= 128:
            fail("image_size must be in [16, 128]")
        if not 0.1 <= self.contraction_depth <= 0.5:
            fail("contraction_depth must be in [0.1, 0.5]")
        if not 0 <= self.depth_jitter < 1:
            fail("depth_jitter must be in [0, 1)")
        for name in ('systole_onset', 'systole_offset'):
            if not 0 <= getattr(self, name) < FRAMES_PER_CYCLE:
                fail("{0} must be a frame index in [0, 19]".format(name))
        arc = (self.systole_offset - self.systole_onset) % FRAMES_PER_CYCLE
        if arc + 2 * (self.ramp_frames + self.phase_jitter) >= \
                FRAMES_PER_CYCLE - 2:
            fail("systolic arc and ramps leave no diastolic frames")
        if self.ramp_frames < 0 or self.phase_jitter < 0:
            fail("ramp_frames and phase_jitter must be >= 0")
        if len(self.endo_perturbation) != 2 or \
                len(self.epi_perturbation) != 2:
            fail("perturbations are (harmonic 2, harmonic 3) amplitudes")
        if min(self.endo_perturbation + self.epi_perturbation) < 0:
            fail("perturbation amplitudes must be >= 0")
        endo_amp = sum(self.endo_perturbation)
        epi_amp = sum(self.epi_perturbation)
        if endo_amp >= 0.5 or epi_amp >= 0.5:
            fail("perturbation amplitudes must sum below 0.5")
        if not 0 <= self.radius_jitter < 1 or not 0 <= self.wall_jitter < 1:
            fail("radius_jitter and wall_jitter must be in [0, 1)")
        if self.epi_radius <= self.endo_radius:
            fail("epi_radius must exceed endo_radius")

        wall = self.epi_radius - self.endo_radius
        depth_max = min(self.contraction_depth * (1 + self.depth_jitter), 0.5)
        endo_min = self.endo_radius * (1 - self.radius_jitter) * (1 - endo_amp)
        if endo_min * (1 - depth_max) < MIN_ENDO_RADIUS:
            fail("contracted endocardial radius can drop below 2 px")
        for scale in (1 - self.radius_jitter, 1 + self.radius_jitter):
            endo_base = self.endo_radius * scale
            epi_base = endo_base + wall * (1 - self.wall_jitter)
            if epi_base * (1 - epi_amp) <= endo_base * (1 + endo_amp):
                fail("epicardium can cross the endocardium")
        epi_max = ((self.endo_radius * (1 + self.radius_jitter) +
                    wall * (1 + self.wall_jitter)) * (1 + epi_amp))
        if self.center_jitter < 0:
            fail("center_jitter must be >= 0")
        if epi_max + self.center_jitter + 2 > self.image_size / 2.0:
            fail("heart does not fit in a {0}px image".format(
                self.image_size))
        if self.noise_sigma < 0 or self.texture_amplitude < 0:
            fail("noise_sigma and texture_amplitude must be >= 0")
        for name in ('cavity_intensity', 'myocardium_intensity',
                     'background_intensity'):
            if not 0 <= getattr(self, name) <= 1:
                fail("{0} must be in [0, 1]".format(name))
        return True

    def __eq__(self, other):
        return isinstance(other, PhantomSpec) and \
            self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "PhantomSpec({0})".format(", ".join(
            "{0}={1}".format(k, v) for k, v in self.to_dict().items()))


def contraction_profile(onset, offset, ramp, n_frames=FRAMES_PER_CYCLE):
    """
        Smooth cyclic profile in [0, 1]: 1 on the systolic arc
        onset..offset, raised-cosine ramps of ``ramp`` frames on both
        sides, 0 elsewhere.
    """
    frames = np.arange(n_frames)
    arc = (offset - onset) % n_frames
    into_arc = np.mod(frames - onset, n_frames)
    before = np.mod(onset - frames, n_frames)
    after = np.mod(frames - offset, n_frames)
    profile = np.zeros(n_frames)
    on_arc = into_arc <= arc
    profile[on_arc] = 1.0
    distance = np.minimum(before, after)
    ramping = (~on_arc) & (distance <= ramp) & (ramp > 0)
    profile[ramping] = 0.5 * (1 + np.cos(np.pi * distance[ramping] /
                                         (ramp + 1.0)))
    return profile


def star_radius(base, amplitudes, phases, angle):
    """
        r(theta) = base * (1 + sum_k a_k cos(k theta + p_k)), k in {2, 3}.
    """
    radius = np.ones_like(angle)
    for harmonic, amp, ph in zip((2, 3), amplitudes, phases):
        radius = radius + amp * np.cos(harmonic * angle + ph)
    return base * radius


def rasterize(shape, cx, cy, endo_radius, epi_radius):
    """
        Pixel-centre inclusion of the two nested star-convex contours.

        :param endo_radius: callable angle -> endocardial radius
        :param epi_radius: callable angle -> epicardial radius

        :return: [H, W] uint8 label mask
    """
    radius, angle = geometry.pixel_angles(shape, cx, cy)
    labels = np.full(shape, BACKGROUND, dtype=np.uint8)
    labels[radius <= epi_radius(angle)] = MYOCARDIUM
    labels[radius <= endo_radius(angle)] = CAVITY
    return labels


class _SubjectShape(object):
    """
        Random anatomy of one subject, drawn once per subject.
    """
    def __init__(self, spec, rng):
        half = spec.image_size / 2.0
        self.cx = half + rng.uniform(-spec.center_jitter, spec.center_jitter)
        self.cy = half + rng.uniform(-spec.center_jitter, spec.center_jitter)
        self.endo_base = spec.endo_radius * rng.uniform(
            1 - spec.radius_jitter, 1 + spec.radius_jitter)
        wall = (spec.epi_radius - spec.endo_radius) * rng.uniform(
            1 - spec.wall_jitter, 1 + spec.wall_jitter)
        self.epi_base = self.endo_base + wall
        self.endo_amp = [rng.uniform(0, a) for a in spec.endo_perturbation]
        self.epi_amp = [rng.uniform(0, a) for a in spec.epi_perturbation]
        self.endo_phase = rng.uniform(0, 2 * np.pi, size=2)
        self.epi_phase = rng.uniform(0, 2 * np.pi, size=2)
        self.depth = float(np.clip(spec.contraction_depth * rng.uniform(
            1 - spec.depth_jitter, 1 + spec.depth_jitter), 0.1, 0.5))
        shift = int(rng.integers(-spec.phase_jitter, spec.phase_jitter + 1))
        onset = (spec.systole_onset + shift) % FRAMES_PER_CYCLE
        offset = (spec.systole_offset + shift) % FRAMES_PER_CYCLE
        self.profile = contraction_profile(onset, offset, spec.ramp_frames)

    def endo_at(self, angle):
        return star_radius(self.endo_base, self.endo_amp, self.endo_phase,
                           angle)

    def epi_at(self, angle):
        return star_radius(self.epi_base, self.epi_amp, self.epi_phase,
                           angle)

    def frame_labels(self, shape, frame):
        scale = 1.0 - self.depth * self.profile[frame]

        def endo(angle):
            return self.endo_at(angle) * scale

        def epi(angle):
            rest_endo = self.endo_at(angle)
            return np.sqrt(endo(angle) ** 2 + self.epi_at(angle) ** 2 -
                           rest_endo ** 2)

        return rasterize(shape, self.cx, self.cy, endo, epi)


def render_image(spec, labels, texture, rng):
    """
        Class intensities, partial-volume blur, tissue texture and Gaussian
        noise, clamped to [0, 1] and quantised to 8-bit levels.
    """
    intensity = np.choose(labels, (spec.background_intensity,
                                   spec.myocardium_intensity,
                                   spec.cavity_intensity)).astype(np.float64)
    if spec.blur_sigma > 0:
        intensity = gaussian_filter(intensity, spec.blur_sigma)
    image = intensity + texture
    if spec.noise_sigma > 0:
        image = image + rng.normal(0.0, spec.noise_sigma, size=labels.shape)
    return gray_to_unit(unit_to_gray(image))


def _texture(spec, rng):
    shape = (spec.image_size, spec.image_size)
    if spec.texture_amplitude <= 0:
        return np.zeros(shape)
    field = gaussian_filter(rng.standard_normal(shape),
                            spec.texture_smoothness)
    std = field.std()
    if std > 0:
        field = field / std
    return spec.texture_amplitude * field


def generate_subject(spec, rng, subject_id='subj_0'):
    """
        Generates one 20-frame subject.

        :param spec: PhantomSpec
        :param rng: numpy Generator dedicated to this subject

        :return: Subject
    """
    spec.validate()
    shape = (spec.image_size, spec.image_size)
    anatomy = _SubjectShape(spec, rng)
    texture = _texture(spec, rng)

    labels = [anatomy.frame_labels(shape, t) for t in range(FRAMES_PER_CYCLE)]
    truths = [geometry.quantify_mask(lab) for lab in labels]
    images = [render_image(spec, lab, texture, rng) for lab in labels]

    raw = phase.threshold_phase([v['A1'] for v in truths])
    bits = phase.regularize_phase(raw)
    if bits.transitions != 2:
        raise PhantomSpecException("subject {0}: cycle has no distinct "
                                   "systole".format(subject_id))
    frames = [Frame(img, lab, truth, bit)
              for img, lab, truth, bit in zip(images, labels, truths, bits)]
    return Subject(subject_id, frames)


def subject_dirname(index):
    return "subj_{0}".format(index)


def truth_csv(subject):
    """
        :return: text of truth.csv for one subject
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(TRUTH_HEADER)
    for t, frame in enumerate(subject.frames):
        writer.writerow([t] + [repr(v) for v in frame.truth] + [frame.phase])
    return buf.getvalue()


def _write(path, payload):
    try:
        with open(path, 'wb') as fileobj:
            fileobj.write(payload)
    except (IOError, OSError) as error:
        raise PhantomIOException("cannot write {0}: {1}".format(path, error))
    return hashlib.sha256(payload).hexdigest()


def write_subject(root, subject):
    """
        Writes one subject directory; returns {relative path: sha256}.
    """
    dirname = subject.id
    path = os.path.join(root, dirname)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as error:
        raise PhantomIOException("cannot create {0}: {1}".format(path, error))
    checksums = OrderedDict()
    for t, frame in enumerate(subject.frames):
        for stem, gray in (('frame', unit_to_gray(frame.image[0])),
                           ('label', frame.labels)):
            name = "{0}_{1}.pgm".format(stem, t)
            checksums["{0}/{1}".format(dirname, name)] = _write(
                os.path.join(path, name), encode_pgm(gray))
    checksums["{0}/truth.csv".format(dirname)] = _write(
        os.path.join(path, 'truth.csv'), truth_csv(subject).encode('utf-8'))
    return checksums


def generate_dataset(spec, n_subjects, seed, root=None, threads=1):
    """
        Generates ``n_subjects`` independent subjects, each from its own
        sub-stream of ``seed``, and optionally writes the dataset layout::

            <root>/manifest.json
            <root>/subj_<k>/frame_<t>.pgm, label_<t>.pgm, truth.csv

        :return: (list of Subject, manifest dict)
    """
    if int(n_subjects) < MIN_SUBJECTS:
        raise PhantomSpecException("a dataset needs at least {0} subjects, "
                                   "got {1}".format(MIN_SUBJECTS, n_subjects))
    spec.validate()

    def make(index):
        rng = substream(seed, 'dataset', 'subject', index)
        return generate_subject(spec, rng, subject_dirname(index))

    indices = range(int(n_subjects))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            subjects = list(pool.map(make, indices))
    else:
        subjects = [make(k) for k in indices]
    log.info("generated %d subjects (%dpx, seed %d)", len(subjects),
             spec.image_size, seed)

    manifest = OrderedDict([
        ('format_version', DATASET_FORMAT_VERSION),
        ('seed', int(seed)),
        ('subject_count', len(subjects)),
        ('frames_per_subject', FRAMES_PER_CYCLE),
        ('image_size', spec.image_size),
        ('spec', spec.to_dict()),
    ])
    if root is not None:
        checksums = OrderedDict()
        for subject in subjects:
            checksums.update(write_subject(root, subject))
        manifest['checksums'] = checksums
        _write(os.path.join(root, 'manifest.json'), manifest_bytes(manifest))
    return subjects, manifest


def manifest_bytes(manifest):
    return (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode(
        'utf-8')


def manifest_digest(root):
    """
        SHA-256 of ``<root>/manifest.json``; identifies a dataset since the
        manifest lists the checksum of every file.
    """
    path = os.path.join(root, 'manifest.json')
    try:
        with open(path, 'rb') as fileobj:
            return hashlib.sha256(fileobj.read()).hexdigest()
    except (IOError, OSError) as error:
        raise PhantomIOException("cannot read {0}: {1}".format(path, error))


class PhantomSpecException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


class PhantomIOException(PhantomSpecException):
    pass
