#!/usr/bin/env python
# -*- coding: utf-8 -*-

import unittest

import numpy as np

from cardioquant.geometry import (quantify_mask, dice, mask_from_probs,
                                  count_components, ray_directions,
                                  ray_profile, InvalidMaskException,
                                  GeometryException)
from cardioquant.objects.subject import BACKGROUND, MYOCARDIUM, CAVITY
from cardioquant.phantom import rasterize, star_radius


def rings(size=64, cx=32.0, cy=32.0, endo=10.0, epi=16.0, epi_shift=0.0):
    rows, cols = np.indices((size, size), dtype=np.float64)
    labels = np.zeros((size, size), dtype=np.uint8)
    labels[np.hypot(cols - cx + epi_shift, rows - cy) <= epi] = MYOCARDIUM
    labels[np.hypot(cols - cx, rows - cy) <= endo] = CAVITY
    return labels


def random_star(rng, rotation=0.0):
    endo_base = rng.uniform(8, 11)
    epi_base = endo_base + rng.uniform(4, 7)
    endo_amp = rng.uniform(0, 0.06, 2)
    epi_amp = rng.uniform(0, 0.04, 2)
    endo_phase = rng.uniform(0, 2 * np.pi, 2)
    epi_phase = rng.uniform(0, 2 * np.pi, 2)
    cx, cy = rng.uniform(30, 34, 2)

    def shape(rot):
        return rasterize(
            (64, 64), cx, cy,
            lambda a: star_radius(endo_base, endo_amp, endo_phase, a - rot),
            lambda a: star_radius(epi_base, epi_amp, epi_phase, a - rot))
    return shape(0.0), shape(rotation)


class TestGeometry(unittest.TestCase):
    def test_ray_convention(self):
        dx, dy = ray_directions()
        self.assertEqual(len(dx), 360)
        # ray 0 points up, ray 90 points left (counter-clockwise on screen)
        self.assertAlmostEqual(dx[0], 0.0)
        self.assertAlmostEqual(dy[0], -1.0)
        self.assertAlmostEqual(dx[90], -1.0)
        self.assertAlmostEqual(dy[90], 0.0, places=12)

    def test_concentric_circles(self):
        labels = rings()
        rows, cols = np.indices(labels.shape)
        radius = np.hypot(cols - 32, rows - 32)
        values = quantify_mask(labels)
        self.assertEqual(values['A1'], np.count_nonzero(radius <= 10))
        self.assertEqual(values['A2'], np.count_nonzero((radius > 10) &
                                                        (radius <= 16)))
        for name in ('D1', 'D2', 'D3'):
            self.assertLessEqual(abs(values[name] - 20.0), 1.0, name)
        for k in range(1, 7):
            self.assertLessEqual(abs(values['RWT{0}'.format(k)] - 6.0), 0.5)

    def test_radius_is_direction_independent(self):
        endo, epi, centre = ray_profile(rings())
        self.assertEqual(centre, (32.0, 32.0))
        self.assertAlmostEqual(endo[0], endo[180], places=6)
        self.assertAlmostEqual(endo[90], endo[270], places=6)
        for ray in (0, 30, 45, 60, 90, 120, 135):
            self.assertLessEqual(abs(endo[ray] - 10.0), 0.5, ray)
            self.assertLessEqual(abs(epi[ray] - 16.0), 0.5, ray)
        self.assertLessEqual(endo.max() - endo.min(), 0.8)

    def test_ellipse_diameters(self):
        rows, cols = np.indices((64, 64), dtype=np.float64)
        labels = np.zeros((64, 64), dtype=np.uint8)
        # semi-axis 12 along the vertical 0 degree axis, 8 across it
        labels[((cols - 32) / 12.0) ** 2 + ((rows - 32) / 18.0) ** 2
               <= 1] = MYOCARDIUM
        labels[((cols - 32) / 8.0) ** 2 + ((rows - 32) / 12.0) ** 2
               <= 1] = CAVITY
        endo, _, _ = ray_profile(labels)
        self.assertLessEqual(abs(endo[0] + endo[180] - 24.0), 1.0)
        self.assertLessEqual(abs(endo[90] + endo[270] - 16.0), 1.0)
        self.assertLessEqual(abs(quantify_mask(labels)['D1'] - 24.0), 1.0)

    def test_thick_wall_sector(self):
        # epicardium pushed left: the wall is thickest around ray 90 (second
        # sector) and thinnest around ray 270 (fifth sector)
        values = quantify_mask(rings(epi=15.0, epi_shift=2.0))
        rwt = values.group('RWT')
        self.assertEqual(int(np.argmax(rwt)), 1)
        self.assertEqual(int(np.argmin(rwt)), 4)

    def test_rotation_permutes_indices(self):
        rng = np.random.default_rng(42)
        worst_d = worst_rwt = 0.0
        for _ in range(20):
            rest, turned = random_star(rng, np.deg2rad(60))
            a = quantify_mask(rest)
            b = quantify_mask(turned)
            rwt_a = np.array(a.group('RWT'))
            rwt_b = np.array(b.group('RWT'))
            worst_rwt = max(worst_rwt,
                            np.abs(rwt_b - np.roll(rwt_a, 1)).max())
            dims_a = np.array(a.group('Dimension'))
            dims_b = np.array(b.group('Dimension'))
            worst_d = max(worst_d,
                          np.abs(dims_b - np.roll(dims_a, 1)).max())
        self.assertLessEqual(worst_d, 1.0)
        self.assertLessEqual(worst_rwt, 1.0)

    def test_translation_invariance(self):
        labels = rings(cx=30.0, cy=31.0)
        shifted = np.roll(np.roll(labels, 3, axis=0), 2, axis=1)
        self.assertEqual(quantify_mask(labels), quantify_mask(shifted))

    def test_invalid_masks(self):
        empty = np.zeros((16, 16), dtype=np.uint8)
        self.assertRaises(InvalidMaskException, quantify_mask, empty)
        no_wall = empty.copy()
        no_wall[4:8, 4:8] = CAVITY
        self.assertRaises(InvalidMaskException, quantify_mask, no_wall)
        self.assertRaises(InvalidMaskException, quantify_mask,
                          np.ones((2, 2, 2)))

    def test_dice(self):
        a = np.zeros((4, 4), dtype=np.uint8)
        b = a.copy()
        self.assertEqual(dice(a, b, CAVITY), 1.0)
        a[0, :2] = CAVITY
        b[0, 1:3] = CAVITY
        self.assertAlmostEqual(dice(a, b, CAVITY), 0.5)
        self.assertEqual(dice(a, a, CAVITY), 1.0)
        self.assertEqual(dice(a, np.zeros_like(a), CAVITY), 0.0)
        self.assertRaises(GeometryException, dice, a, np.zeros((3, 3)),
                          CAVITY)

    def test_dice_half_and_full(self):
        full = np.full((2, 2), CAVITY, dtype=np.uint8)
        left = np.zeros((2, 2), dtype=np.uint8)
        left[:, 0] = CAVITY
        self.assertAlmostEqual(dice(left, full, CAVITY), 2.0 / 3)
        self.assertEqual(dice(left, full, CAVITY), dice(full, left, CAVITY))

    def test_dice_is_symmetric(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            p = rng.integers(0, 3, size=(8, 8))
            t = rng.integers(0, 3, size=(8, 8))
            for cls in (MYOCARDIUM, CAVITY):
                self.assertEqual(dice(p, t, cls), dice(t, p, cls))

    def test_mask_from_probs_keeps_largest(self):
        labels = rings(size=32, cx=16, cy=16, endo=5, epi=8)
        labels[1, 1] = CAVITY
        labels[30, 1] = MYOCARDIUM
        probs = np.stack([(labels == c).astype(np.float32)
                          for c in (BACKGROUND, MYOCARDIUM, CAVITY)])
        cleaned = mask_from_probs(probs)
        self.assertEqual(cleaned[1, 1], BACKGROUND)
        self.assertEqual(cleaned[30, 1], BACKGROUND)
        self.assertEqual(count_components(cleaned == CAVITY), 1)
        self.assertEqual(count_components(cleaned != BACKGROUND), 1)
        self.assertRaises(GeometryException, mask_from_probs,
                          np.zeros((2, 4, 4)))

    def test_argmax_ties_go_to_lowest_class(self):
        probs = np.full((3, 2, 2), 1.0 / 3)
        np.testing.assert_array_equal(mask_from_probs(probs),
                                      np.zeros((2, 2)))

    def test_count_components_four_connected(self):
        mask = np.array([[1, 0], [0, 1]], dtype=bool)
        self.assertEqual(count_components(mask), 2)


if __name__ == '__main__':
    test_suite = ['test_ray_convention', 'test_concentric_circles',
                  'test_radius_is_direction_independent',
                  'test_ellipse_diameters', 'test_thick_wall_sector',
                  'test_rotation_permutes_indices',
                  'test_translation_invariance', 'test_invalid_masks',
                  'test_dice', 'test_dice_half_and_full',
                  'test_dice_is_symmetric',
                  'test_mask_from_probs_keeps_largest',
                  'test_argmax_ties_go_to_lowest_class',
                  'test_count_components_four_connected']
    suite = unittest.TestSuite(map(TestGeometry, test_suite))
    test_result = unittest.TextTestRunner(verbosity=2).run(suite)
