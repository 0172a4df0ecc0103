#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Desk-scale benchmark reproductions. They train every network for real and
take from minutes (smoke) to hours (three benchmark seeds) on a CPU, so
they only run with CARDIOQUANT_BENCH=1.
"""
import os
import shutil
import tempfile
import unittest

import numpy as np

from cardioquant.config import RunConfig
from cardioquant.geometry import quantify_mask
from cardioquant.harness import make_folds, run_experiment
from cardioquant.models.networks import one_hot
from cardioquant.models.predict import (evaluate_dice, predict_seg_many,
                                        run_network)
from cardioquant.models.targets import denormalize_targets
from cardioquant.models.training import (train_direct, train_masknet,
                                         train_unet)
from cardioquant.objects.indices import INDEX_GROUPS
from cardioquant.phantom import PhantomSpec, generate_dataset

CONFIG_DIR = os.path.join(os.path.dirname(os.path.realpath(__file__)),
                          '..', '..', 'config')
ENABLED = os.environ.get('CARDIOQUANT_BENCH') == '1'


def bench_config(name, **overrides):
    config = RunConfig.from_file(os.path.join(CONFIG_DIR, name))
    return config.override(**overrides)


@unittest.skipUnless(ENABLED, "set CARDIOQUANT_BENCH=1 to run benchmarks")
class TestBenchmark(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='cardioquant-bench-')

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def _split(self, config):
        subjects, _ = generate_dataset(PhantomSpec.scaled(config.image_size),
                                       config.subjects, config.seed)
        plan = make_folds([s.id for s in subjects], config.folds,
                          config.seed)
        held = set(plan.test_ids(0))
        return ([s for s in subjects if s.id not in held],
                [s for s in subjects if s.id in held])

    def test_masknet_area_error(self):
        config = bench_config('bench.json')
        train, test = self._split(config)
        weights = train_masknet(train, config.models['masknet'], config.seed)
        labels = np.concatenate([s.labels for s in test])
        truths = np.concatenate([s.truths for s in test])
        values = np.maximum(denormalize_targets(
            run_network(weights, one_hot(labels)), config.image_size), 0.0)
        mae = np.mean(np.abs(values[:, 0] - truths[:, 0]))
        self.assertLess(mae, 0.05 * np.mean(truths[:, 0]))

    def test_predicted_masks_agree_with_masknet(self):
        config = bench_config('bench.json')
        train, test = self._split(config)
        unet = train_unet(train, config.models['unet'], config.seed)
        masknet = train_masknet(train, config.models['masknet'], config.seed)
        images = np.concatenate([s.images for s in test])
        masks, values = predict_seg_many(unet, masknet, images)
        measured = [quantify_mask(m).as_array()[0] for m in masks]
        r = np.corrcoef(measured, values[:, 0])[0, 1]
        self.assertGreater(r, 0.9)

    def test_direct_loss_decreases(self):
        config = bench_config('bench.json')
        train, _ = self._split(config)
        weights = train_direct(train, config.models['direct'], config.seed)
        history = weights.metadata['loss_history']
        self.assertLess(weights.final_loss, history[0])

    def test_smoke_reports_are_byte_identical(self):
        texts = []
        for run in ('a', 'b'):
            out = os.path.join(self.tmpdir, run)
            config = bench_config('smoke.json', out=out,
                                  dataset=os.path.join(out, 'data'))
            run_experiment(config)
            with open(os.path.join(out, 'report.csv'), 'rb') as fileobj:
                texts.append(fileobj.read())
        self.assertEqual(texts[0], texts[1])

    def test_unet_dice(self):
        config = bench_config('bench.json')
        train, test = self._split(config)
        weights = train_unet(train, config.models['unet'], config.seed)
        self.assertGreaterEqual(evaluate_dice(weights, test), 0.90)

    def test_ensemble_and_phase(self):
        wins = dict((group, 0) for group in INDEX_GROUPS)
        for seed in (7, 8, 9):
            out = os.path.join(self.tmpdir, 'seed{0}'.format(seed))
            report = run_experiment(bench_config(
                'bench.json', seed=seed, out=out,
                dataset=os.path.join(out, 'data')))
            for group in INDEX_GROUPS:
                bound = min(report.group_mae('direct', group),
                            report.group_mae('seg', group))
                if report.group_mae('ensemble', group) <= 1.05 * bound:
                    wins[group] += 1
            if seed == 7:
                self.assertGreaterEqual(report.phase_accuracy('ensemble'),
                                        report.phase_accuracy('ensemble_raw'))
                self.assertGreaterEqual(report.phase_accuracy('ensemble'),
                                        0.85)
        for group, count in wins.items():
            self.assertGreaterEqual(count, 2, group)


if __name__ == '__main__':
    test_suite = ['test_smoke_reports_are_byte_identical', 'test_unet_dice',
                  'test_masknet_area_error',
                  'test_predicted_masks_agree_with_masknet',
                  'test_direct_loss_decreases', 'test_ensemble_and_phase']
    suite = unittest.TestSuite(map(TestBenchmark, test_suite))
    test_result = unittest.TextTestRunner(verbosity=2).run(suite)
