#!/usr/bin/env python
# -*- coding: utf-8 -*-

import json
import os
import shutil
import tempfile
import unittest

import numpy as np

from cardioquant.parser import (DatasetParser, load_dataset,
                                DatasetParserException, EmptyDatasetException)
from cardioquant.pgm import encode_pgm
from cardioquant.phantom import PhantomSpec, generate_dataset, truth_csv


class TestDatasetParser(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='cardioquant-parser-')
        self.root = os.path.join(self.tmpdir, 'data')
        self.subjects, self.manifest = generate_dataset(
            PhantomSpec.scaled(32), 3, 7, self.root)

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def _path(self, *parts):
        return os.path.join(self.root, *parts)

    def test_roundtrip(self):
        loaded = load_dataset(self.root)
        self.assertEqual(len(loaded), 3)
        for written, read in zip(self.subjects, loaded):
            self.assertEqual(written, read)

    def test_subject_order_is_numeric(self):
        for k in range(3, 11):
            shutil.copytree(self._path('subj_0'), self._path(
                'subj_{0}'.format(k)))
        os.remove(self._path('manifest.json'))
        ids = [s.id for s in load_dataset(self.root)]
        self.assertEqual(ids, ['subj_{0}'.format(k) for k in range(11)])

    def test_parse_pgm(self):
        gray = np.arange(12, dtype=np.uint8).reshape(3, 4)
        np.testing.assert_array_equal(
            DatasetParser.parse_pgm(encode_pgm(gray)), gray)
        commented = b"P5\n# made by hand\n4 3\n# max\n255\n" + gray.tobytes()
        np.testing.assert_array_equal(DatasetParser.parse_pgm(commented), gray)
        self.assertRaises(DatasetParserException, DatasetParser.parse_pgm,
                          b"P2\n4 3\n255\n" + gray.tobytes())
        self.assertRaises(DatasetParserException, DatasetParser.parse_pgm,
                          b"P5\n4 3\n255\n" + gray.tobytes()[:-1])
        self.assertRaises(DatasetParserException, DatasetParser.parse_pgm,
                          b"P5\n4")
        self.assertRaises(DatasetParserException, DatasetParser.parse_pgm,
                          u"P5 text")

    def test_parse_truth_csv(self):
        text = truth_csv(self.subjects[0])
        records = DatasetParser.parse_truth_csv(text)
        self.assertEqual(len(records), 20)
        self.assertEqual(records[4][0], self.subjects[0][4].truth)
        self.assertEqual(records[4][1], self.subjects[0][4].phase)

        lines = text.splitlines()
        self.assertRaises(DatasetParserException,
                          DatasetParser.parse_truth_csv,
                          "\n".join(['bad,header'] + lines[1:]))
        self.assertRaises(DatasetParserException,
                          DatasetParser.parse_truth_csv,
                          "\n".join(lines[:3] + lines[4:]))
        self.assertRaises(DatasetParserException,
                          DatasetParser.parse_truth_csv,
                          "\n".join(lines + [lines[1]]))
        negative = lines[1].split(',')
        negative[1] = '-1.0'
        self.assertRaises(DatasetParserException,
                          DatasetParser.parse_truth_csv,
                          "\n".join([lines[0], ','.join(negative)]))

    def test_missing_frame_names_subject(self):
        os.remove(self._path('subj_1', 'frame_7.pgm'))
        try:
            load_dataset(self.root)
        except DatasetParserException as error:
            self.assertIn('subj_1', str(error))
            self.assertIn('7', str(error))
        else:
            self.fail("missing frame not reported")

    def test_checksum_mismatch(self):
        path = self._path('subj_2', 'frame_0.pgm')
        with open(path, 'rb') as fileobj:
            data = bytearray(fileobj.read())
        data[-1] = (data[-1] + 1) % 256
        with open(path, 'wb') as fileobj:
            fileobj.write(bytes(data))
        self.assertRaises(DatasetParserException, load_dataset, self.root)
        self.assertEqual(len(load_dataset(self.root, verify=False)), 3)

    def test_manifest_checks(self):
        manifest_path = self._path('manifest.json')
        with open(manifest_path) as fileobj:
            manifest = json.load(fileobj)
        manifest['format_version'] = 99
        with open(manifest_path, 'w') as fileobj:
            json.dump(manifest, fileobj)
        self.assertRaises(DatasetParserException, load_dataset, self.root)

        manifest['format_version'] = 1
        manifest['subject_count'] = 4
        with open(manifest_path, 'w') as fileobj:
            json.dump(manifest, fileobj)
        self.assertRaises(DatasetParserException, load_dataset, self.root)

    def test_dataset_without_manifest(self):
        os.remove(self._path('manifest.json'))
        self.assertEqual(len(load_dataset(self.root)), 3)

    def test_bad_label_values(self):
        gray = np.full((32, 32), 3, dtype=np.uint8)
        with open(self._path('subj_0', 'label_0.pgm'), 'wb') as fileobj:
            fileobj.write(encode_pgm(gray))
        self.assertRaises(DatasetParserException, load_dataset, self.root,
                          False)

    def test_empty_and_missing_directories(self):
        empty = os.path.join(self.tmpdir, 'empty')
        os.makedirs(empty)
        self.assertRaises(EmptyDatasetException, load_dataset, empty)
        self.assertRaises(DatasetParserException, load_dataset,
                          os.path.join(self.tmpdir, 'nowhere'))


if __name__ == '__main__':
    test_suite = ['test_roundtrip', 'test_subject_order_is_numeric',
                  'test_parse_pgm', 'test_parse_truth_csv',
                  'test_missing_frame_names_subject', 'test_checksum_mismatch',
                  'test_manifest_checks', 'test_dataset_without_manifest',
                  'test_bad_label_values',
                  'test_empty_and_missing_directories']
    suite = unittest.TestSuite(map(TestDatasetParser, test_suite))
    test_result = unittest.TextTestRunner(verbosity=2).run(suite)
