# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.parser` -- reading a dataset back from disk
=============================================================

The on-disk layout is the one written by
:func:`cardioquant.phantom.generate_dataset`; externally prepared data
in the same layout is accepted too (the manifest is then optional)::

    <root>/manifest.json
    <root>/subj_<k>/frame_<t>.pgm     8-bit image
    <root>/subj_<k>/label_<t>.pgm     class ids 0/1/2
    <root>/subj_<k>/truth.csv         frame,A1,...,RWT6,phase
"""
import csv
import hashlib
import io
import json
import logging
import os
import re

import numpy as np

from cardioquant.objects.indices import IndexVector, INDEX_NAMES
from cardioquant.objects.subject import Frame, Subject, FRAMES_PER_CYCLE
from cardioquant.pgm import gray_to_unit, MAXVAL

log = logging.getLogger(__name__)

SUBJECT_DIR = re.compile(r'^subj_(\d+)$')
TRUTH_HEADER = ['frame'] + list(INDEX_NAMES) + ['phase']
SUPPORTED_FORMAT_VERSIONS = (1,)


class DatasetParser(object):
    @classmethod
    def parse_pgm(cls, pgm_data, source='<bytes>'):
        """
            Decodes a binary (P5) 8-bit PGM image.

            :param pgm_data: raw file content
            :type pgm_data: bytes
            :param source: name used in error messages

            :return: [H, W] uint8 numpy array
        """
        if not isinstance(pgm_data, (bytes, bytearray)):
            raise DatasetParserException("{0}: PGM data must be bytes".format(
                source))
        tokens = []
        pos = 0
        size = len(pgm_data)
        while len(tokens) < 4:
            while pos < size and pgm_data[pos:pos + 1].isspace():
                pos += 1
            if pos < size and pgm_data[pos:pos + 1] == b'#':
                while pos < size and pgm_data[pos:pos + 1] not in b'\r\n':
                    pos += 1
                continue
            start = pos
            while pos < size and not pgm_data[pos:pos + 1].isspace():
                pos += 1
            if start == pos:
                raise DatasetParserException("{0}: truncated PGM header".format(
                    source))
            tokens.append(bytes(pgm_data[start:pos]))
        if tokens[0] != b'P5':
            raise DatasetParserException("{0}: not a binary PGM (magic "
                                         "{1!r})".format(source, tokens[0]))
        try:
            width, height, maxval = (int(t) for t in tokens[1:])
        except ValueError:
            raise DatasetParserException("{0}: malformed PGM header".format(
                source))
        if width < 1 or height < 1 or not 0 < maxval <= MAXVAL:
            raise DatasetParserException("{0}: unsupported PGM geometry "
                                         "{1}x{2} maxval {3}".format(
                                             source, width, height, maxval))
        pixels = pgm_data[pos + 1:]
        if len(pixels) != width * height:
            raise DatasetParserException("{0}: expected {1} pixel bytes, found "
                                         "{2}".format(source, width * height,
                                                      len(pixels)))
        return np.frombuffer(bytes(pixels), dtype=np.uint8).reshape(height,
                                                                    width)

    @classmethod
    def parse_pgm_fromfile(cls, pgm_path):
        try:
            with open(pgm_path, 'rb') as fileobj:
                data = fileobj.read()
        except (IOError, OSError) as error:
            raise DatasetParserException("cannot read {0}: {1}".format(
                pgm_path, error))
        return cls.parse_pgm(data, source=pgm_path)

    @classmethod
    def parse_truth_csv(cls, csv_data, source='truth.csv'):
        """
            Parses the per-frame ground truth of one subject.

            :return: list of (IndexVector, phase bit), one per frame, ordered
                     by the frame column
        """
        reader = csv.reader(io.StringIO(csv_data))
        rows = [row for row in reader if row]
        if not rows or rows[0] != TRUTH_HEADER:
            raise DatasetParserException("{0}: unexpected header {1}".format(
                source, rows[0] if rows else None))
        records = {}
        for lineno, row in enumerate(rows[1:], start=2):
            if len(row) != len(TRUTH_HEADER):
                raise DatasetParserException("{0}:{1}: expected {2} columns, "
                                             "got {3}".format(
                                                 source, lineno,
                                                 len(TRUTH_HEADER), len(row)))
            try:
                frame = int(row[0])
                truth = IndexVector([float(v) for v in row[1:-1]])
                bit = int(row[-1])
            except ValueError as error:
                raise DatasetParserException("{0}:{1}: {2}".format(
                    source, lineno, error))
            if frame in records:
                raise DatasetParserException("{0}: frame {1} listed twice".format(
                    source, frame))
            records[frame] = (truth, bit)
        if sorted(records) != list(range(len(records))):
            raise DatasetParserException("{0}: frame column must count from 0 "
                                         "without gaps".format(source))
        return [records[k] for k in sorted(records)]

    @classmethod
    def parse_manifest(cls, manifest_data, source='manifest.json'):
        try:
            manifest = json.loads(manifest_data)
        except ValueError as error:
            raise DatasetParserException("{0}: invalid JSON: {1}".format(
                source, error))
        if not isinstance(manifest, dict):
            raise DatasetParserException("{0}: manifest must be a JSON "
                                         "object".format(source))
        version = manifest.get('format_version')
        if version not in SUPPORTED_FORMAT_VERSIONS:
            raise DatasetParserException("{0}: unsupported format_version "
                                         "{1}".format(source, version))
        return manifest

    @classmethod
    def parse_subject(cls, subject_path, subject_id=None):
        """
            Reads one ``subj_<k>`` directory.

            :return: Subject
        """
        subject_id = subject_id or os.path.basename(
            os.path.normpath(subject_path))
        images = cls.__collect(subject_path, subject_id, 'frame')
        labels = cls.__collect(subject_path, subject_id, 'label')
        truth_path = os.path.join(subject_path, 'truth.csv')
        try:
            with open(truth_path, 'r') as fileobj:
                records = cls.parse_truth_csv(fileobj.read(), truth_path)
        except (IOError, OSError) as error:
            raise DatasetParserException("subject {0}: cannot read truth.csv: "
                                         "{1}".format(subject_id, error))
        if len(records) != FRAMES_PER_CYCLE:
            raise DatasetParserException("subject {0}: truth.csv has {1} rows, "
                                         "expected {2}".format(
                                             subject_id, len(records),
                                             FRAMES_PER_CYCLE))
        frames = []
        for t in range(FRAMES_PER_CYCLE):
            truth, bit = records[t]
            if labels[t].max() > 2:
                raise DatasetParserException("subject {0}: label_{1}.pgm has "
                                             "values outside 0/1/2".format(
                                                 subject_id, t))
            try:
                frames.append(Frame(gray_to_unit(images[t]), labels[t],
                                    truth, bit))
            except ValueError as error:
                raise DatasetParserException("subject {0}, frame {1}: "
                                             "{2}".format(subject_id, t,
                                                          error))
        try:
            return Subject(subject_id, frames)
        except ValueError as error:
            raise DatasetParserException(str(error))

    @classmethod
    def __collect(cls, subject_path, subject_id, stem):
        found = []
        for t in range(FRAMES_PER_CYCLE):
            path = os.path.join(subject_path, "{0}_{1}.pgm".format(stem, t))
            if os.path.isfile(path):
                found.append(path)
        if len(found) != FRAMES_PER_CYCLE:
            missing = [t for t in range(FRAMES_PER_CYCLE)
                       if not os.path.isfile(os.path.join(
                           subject_path, "{0}_{1}.pgm".format(stem, t)))]
            raise DatasetParserException("subject {0}: found {1} {2} files, "
                                         "expected {3} (missing {4})".format(
                                             subject_id, len(found), stem,
                                             FRAMES_PER_CYCLE, missing))
        extra = [name for name in os.listdir(subject_path)
                 if name.startswith(stem + '_') and name.endswith('.pgm') and
                 os.path.join(subject_path, name) not in found]
        if extra:
            raise DatasetParserException("subject {0}: unexpected {1} files "
                                         "{2}".format(subject_id, stem,
                                                      sorted(extra)))
        return [cls.parse_pgm_fromfile(p) for p in found]

    @classmethod
    def __verify_checksums(cls, root, checksums):
        for relpath, digest in sorted(checksums.items()):
            path = os.path.join(root, *relpath.split('/'))
            try:
                with open(path, 'rb') as fileobj:
                    actual = hashlib.sha256(fileobj.read()).hexdigest()
            except (IOError, OSError) as error:
                raise DatasetParserException("cannot read {0}: {1}".format(
                    path, error))
            if actual != digest:
                raise DatasetParserException("checksum mismatch for "
                                             "{0}".format(path))

    @classmethod
    def parse_fromdirectory(cls, root, verify=True):
        """
            Loads every subject of a dataset directory, ordered by the
            numeric suffix of ``subj_<k>``.

            :param verify: check the manifest checksums when present

            :return: list of Subject
        """
        if not os.path.isdir(root):
            raise DatasetParserException("dataset directory {0} does not "
                                         "exist".format(root))
        entries = []
        for name in os.listdir(root):
            match = SUBJECT_DIR.match(name)
            if match and os.path.isdir(os.path.join(root, name)):
                entries.append((int(match.group(1)), name))
        if not entries:
            raise EmptyDatasetException("dataset directory {0} holds no "
                                        "subject".format(root))
        entries.sort()

        subjects = [cls.parse_subject(os.path.join(root, name), name)
                    for _, name in entries]

        manifest_path = os.path.join(root, 'manifest.json')
        if os.path.isfile(manifest_path):
            with open(manifest_path, 'r') as fileobj:
                manifest = cls.parse_manifest(fileobj.read(), manifest_path)
            expected = manifest.get('subject_count')
            if expected is not None and expected != len(entries):
                raise DatasetParserException("{0}: manifest lists {1} subjects, "
                                             "found {2}".format(
                                                 root, expected, len(entries)))
            if verify and manifest.get('checksums'):
                cls.__verify_checksums(root, manifest['checksums'])

        sizes = set(s.size for s in subjects)
        if len(sizes) != 1:
            raise DatasetParserException("{0}: subjects have different image "
                                         "sizes {1}".format(root,
                                                            sorted(sizes)))
        log.debug("loaded %d subjects from %s", len(subjects), root)
        return subjects


def load_dataset(path, verify=True):
    """
        Shortcut for DatasetParser.parse_fromdirectory().
    """
    return DatasetParser.parse_fromdirectory(path, verify)


class DatasetParserException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


class EmptyDatasetException(DatasetParserException):
    pass
