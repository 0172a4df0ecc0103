#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import shutil
import tempfile
import unittest

from cardioquant.plugins.backendplugin import ReportBackendPlugin
from cardioquant.plugins.backendpluginFactory import (BackendPluginFactory,
                                                      BackendPluginException)
from cardioquant.test.test_report import sample_report


class TestReportBackendPlugin(unittest.TestCase):
    """
    Every storage url in self.urls goes through the same checks:
       - the factory returns a ReportBackendPlugin
       - insert / get / getall / delete behave (insert must insert)
    To support a new plugin, add its create() parameters to self.urls.
    """
    def setUp(self):
        self.tmpdir = tempfile.mkdtemp(prefix='cardioquant-store-')
        self.reportList = [sample_report(),
                           sample_report(base=2.0, seed=8),
                           sample_report(phase=0.8, dataset_hash='def')]
        self.urls = [{'plugin_name': 'sql', 'url': 'sqlite://',
                      'echo': False},
                     {'plugin_name': 'sql',
                      'url': 'sqlite:///' + os.path.join(self.tmpdir,
                                                         'reports.sql'),
                      'echo': False}]

    def tearDown(self):
        shutil.rmtree(self.tmpdir, ignore_errors=True)

    def test_backend_factory(self):
        for url in self.urls:
            backend = BackendPluginFactory.create(**url)
            self.assertTrue(isinstance(backend, ReportBackendPlugin))
            self.assertEqual(backend.__class__.__name__, 'ReportSqlPlugin')
        backend = BackendPluginFactory.from_url('sqlite://')
        self.assertEqual(backend.url, 'sqlite://')

    def test_backend_factory_errors(self):
        self.assertRaises(BackendPluginException,
                          BackendPluginFactory.create, 'nosuchstore')
        self.assertRaises(BackendPluginException,
                          BackendPluginFactory.create, 'sql')
        self.assertRaises(BackendPluginException,
                          BackendPluginFactory.from_url, 'nosuchdb://x')

    def test_backend_insert(self):
        for report in self.reportList:
            for url in self.urls:
                backend = BackendPluginFactory.create(**url)
                self.assertNotEqual(report.save(backend), None)
        self.assertRaises(RuntimeError, self.reportList[0].save, None)

    def test_backend_get(self):
        for url in self.urls:
            backend = BackendPluginFactory.create(**url)
            id_list = [report.save(backend) for report in self.reportList]
            result_list = [backend.get(rep_id) for rep_id in id_list]
            self.assertEqual(result_list, self.reportList)
            self.assertEqual(backend.get(10 ** 6), None)
            self.assertRaises(ValueError, backend.get)

    def test_backend_getall(self):
        for url in self.urls:
            backend = BackendPluginFactory.create(**url)
            for report in self.reportList:
                report.save(backend)
            everything = backend.getall()
            self.assertEqual([r for _, r in everything], self.reportList)
            seeded = backend.getall({'seed': 8})
            self.assertEqual([r for _, r in seeded], [self.reportList[1]])
            hashed = backend.getall({'dataset_hash': 'def'})
            self.assertEqual(len(hashed), 1)
            self.assertEqual(backend.getall({'stacking': 'in-sample'}), [])

    def test_backend_delete(self):
        for url in self.urls:
            backend = BackendPluginFactory.create(**url)
            id_list = [report.save(backend) for report in self.reportList]
            for rep_id in id_list:
                self.assertEqual(backend.delete(rep_id), 1)
                self.assertEqual(backend.get(rep_id), None)
            self.assertEqual(backend.getall(), [])


if __name__ == '__main__':
    test_suite = ['test_backend_factory', 'test_backend_factory_errors',
                  'test_backend_insert', 'test_backend_get',
                  'test_backend_getall', 'test_backend_delete']
    suite = unittest.TestSuite(map(TestReportBackendPlugin, test_suite))
    test_result = unittest.TextTestRunner(verbosity=2).run(suite)
