#!/usr/bin/env python
# -*- coding: utf-8 -*-

import io
import os
import shutil
import tempfile
import unittest
from unittest import mock

from cardioquant.cli import main, build_parser, EXIT_OK, EXIT_RUNTIME, \
    EXIT_USAGE
from cardioquant.parser import DatasetParser
from cardioquant.reportjson import dumps
from cardioquant.test.test_harness import stub_trainers
from cardioquant.test.test_report import sample_report


def run(argv):
    """
        :return: (exit code, captured stdout)
    """
    with mock.patch('sys.stdout', new_callable=io.StringIO) as out, \
            mock.patch('sys.stderr', new_callable=io.StringIO):
        code = main(argv)
    return code, out.getvalue()


class TestCli(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.shared = tempfile.mkdtemp(prefix='cardioquant-cli-data-')
        cls.data = os.path.join(cls.shared, 'data')
        code, _ = run(['gen', '--subjects', '3', '--size', '32', '--seed',
                       '7', '--out', cls.data])
        assert code == EXIT_OK

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.shared, ignore_errors=True)

    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='cardioquant-cli-')

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def _train(self, model):
        return run(['train', '--model', model, '--data', self.data,
                    '--folds-exclude', '0', '--epochs', '1',
                    '--batch-size', '20', '--out', self.tmpdir])

    def test_gen_is_reproducible(self):
        code, text = run(['gen', '--subjects', '3', '--size', '32',
                          '--seed', '7', '--out',
                          os.path.join(self.tmpdir, 'again')])
        self.assertEqual(code, EXIT_OK)
        self.assertIn('3 subjects written to', text)
        digest = text.split('manifest sha256 ')[1].strip()
        _, first = run(['gen', '--subjects', '3', '--size', '32', '--seed',
                        '7', '--out', os.path.join(self.tmpdir, 'third')])
        self.assertEqual(first.split('manifest sha256 ')[1].strip(), digest)
        self.assertEqual(len(digest), 64)

    def test_usage_errors(self):
        self.assertEqual(run(['gen', '--subjects', '0'])[0], EXIT_USAGE)
        self.assertEqual(run(['gen', '--subjects', '2', '--size', '32'])[0],
                         EXIT_USAGE)
        self.assertEqual(run(['eval', '--subjects', '2'])[0], EXIT_USAGE)
        self.assertEqual(run(['train', '--model', 'direct', '--data',
                              self.data, '--lr', '0'])[0], EXIT_USAGE)
        self.assertEqual(run(['eval', '--pixel-spacing-mm', '-1'])[0],
                         EXIT_USAGE)
        self.assertEqual(run(['eval', '--pixel-spacing-mm', 'nan'])[0],
                         EXIT_USAGE)
        self.assertEqual(run(['gen', '--size', 'big'])[0], EXIT_USAGE)
        self.assertEqual(run(['train', '--model', 'direct'])[0], EXIT_USAGE)
        self.assertEqual(run(['train', '--model', 'resnet', '--data',
                              self.data])[0], EXIT_USAGE)
        self.assertEqual(run(['viz', '--kind', 'movie', '--weights',
                              'w'])[0], EXIT_USAGE)
        self.assertEqual(run(['frobnicate'])[0], EXIT_USAGE)
        self.assertEqual(run([])[0], EXIT_USAGE)
        self.assertEqual(run(['eval', '--config',
                              os.path.join(self.tmpdir, 'none.json')])[0],
                         EXIT_USAGE)
        self.assertEqual(run(['eval', '--inner-folds', '1'])[0], EXIT_USAGE)
        self.assertEqual(run(['train', '--model', 'direct', '--data',
                              self.data, '--folds-exclude', '3'])[0],
                         EXIT_USAGE)

    def test_runtime_errors(self):
        self.assertEqual(run(['train', '--model', 'direct', '--data',
                              os.path.join(self.tmpdir, 'nowhere')])[0],
                         EXIT_RUNTIME)
        self.assertEqual(run(['viz', '--kind', 'featmaps', '--weights',
                              os.path.join(self.tmpdir, 'none'),
                              '--data', self.data])[0], EXIT_RUNTIME)

    def test_version(self):
        self.assertEqual(run(['--version'])[0], EXIT_OK)

    def test_parser_keeps_global_flags(self):
        args = build_parser().parse_args(['--seed', '3', 'gen',
                                          '--subjects', '4'])
        self.assertEqual(args.seed, 3)
        self.assertEqual(args.subjects, 4)
        args = build_parser().parse_args(['gen', '--seed', '5'])
        self.assertEqual(args.seed, 5)

    def test_train_and_viz(self):
        code, text = self._train('direct')
        self.assertEqual(code, EXIT_OK)
        self.assertIn('final loss', text)
        weights = os.path.join(self.tmpdir, 'models', '0', 'direct')
        self.assertTrue(os.path.isfile(weights + '.weights.json'))

        viz = os.path.join(self.tmpdir, 'viz')
        code, text = run(['viz', '--kind', 'featmaps', '--weights', weights,
                          '--data', self.data, '--subject', '1', '--frame',
                          '3', '--out', viz])
        self.assertEqual(code, EXIT_OK)
        path = os.path.join(viz, 'subj_1_f3_direct_conv1.pgm')
        self.assertEqual(text.strip(), path)
        with open(path, 'rb') as fileobj:
            grid = DatasetParser.parse_pgm(fileobj.read())
        self.assertEqual(grid.shape, (4 * 32 + 3, 4 * 32 + 3))

        self.assertEqual(run(['viz', '--kind', 'featmaps', '--weights',
                              weights, '--data', self.data, '--layer',
                              'enc1', '--out', viz])[0], EXIT_RUNTIME)
        self.assertEqual(run(['viz', '--kind', 'segtriptych', '--weights',
                              weights, '--data', self.data, '--out',
                              viz])[0], EXIT_USAGE)
        self.assertEqual(run(['viz', '--kind', 'featmaps', '--weights',
                              weights, '--data', self.data, '--subject',
                              'subj_9', '--out', viz])[0], EXIT_USAGE)
        self.assertEqual(run(['viz', '--kind', 'featmaps', '--weights',
                              weights, '--data', self.data, '--frame',
                              '20', '--out', viz])[0], EXIT_USAGE)

    def test_unet_triptych(self):
        code, text = self._train('unet')
        self.assertEqual(code, EXIT_OK)
        self.assertIn('held-out cavity dice', text)
        weights = os.path.join(self.tmpdir, 'models', '0', 'unet')
        viz = os.path.join(self.tmpdir, 'viz')
        code, text = run(['viz', '--kind', 'segtriptych', '--weights',
                          weights, '--data', self.data, '--subject', '0',
                          '--out', viz])
        self.assertEqual(code, EXIT_OK)
        for suffix in ('input', 'truth', 'pred'):
            path = os.path.join(viz, 'subj_0_f0_{0}.pgm'.format(suffix))
            self.assertTrue(os.path.isfile(path))
            self.assertIn(path, text)

    def test_eval(self):
        out = os.path.join(self.tmpdir, 'eval')
        with mock.patch('cardioquant.harness.TRAINERS', stub_trainers()):
            code, text = run(['eval', '--data', self.data, '--folds', '3',
                              '--stacking', 'in-sample', '--out', out])
        self.assertEqual(code, EXIT_OK)
        self.assertIn('direct: Area=', text)
        for name in ('report.csv', 'curves.csv', 'phase.csv', 'report.md',
                     'report.json'):
            self.assertTrue(os.path.isfile(os.path.join(out, name)))

    def test_diff(self):
        old = os.path.join(self.tmpdir, 'old.json')
        new = os.path.join(self.tmpdir, 'new.json')
        with open(old, 'w') as fileobj:
            fileobj.write(dumps(sample_report()))
        with open(new, 'w') as fileobj:
            fileobj.write(dumps(sample_report(phase=0.95)))
        code, text = run(['diff', old, new])
        self.assertEqual(code, EXIT_OK)
        self.assertIn('~ phase::direct: 0.9 -> 0.95', text)
        self.assertIn('changed: [4]', text)

        broken = os.path.join(self.tmpdir, 'broken.json')
        with open(broken, 'w') as fileobj:
            fileobj.write('not json')
        self.assertEqual(run(['diff', old, broken])[0], EXIT_RUNTIME)
        self.assertEqual(run(['diff', old, os.path.join(self.tmpdir,
                                                        'gone.json')])[0],
                         EXIT_RUNTIME)
        other = os.path.join(self.tmpdir, 'other.json')
        with open(other, 'w') as fileobj:
            fileobj.write(dumps(sample_report(dataset_hash='zzz')))
        self.assertEqual(run(['diff', old, other])[0], EXIT_RUNTIME)


if __name__ == '__main__':
    test_suite = ['test_gen_is_reproducible', 'test_usage_errors',
                  'test_runtime_errors', 'test_version',
                  'test_parser_keeps_global_flags', 'test_train_and_viz',
                  'test_unet_triptych', 'test_eval', 'test_diff']
    suite = unittest.TestSuite(map(TestCli, test_suite))
    test_result = unittest.TextTestRunner(verbosity=2).run(suite)
