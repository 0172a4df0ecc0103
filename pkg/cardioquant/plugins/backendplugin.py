# -*- coding: utf-8 -*-


class ReportBackendPlugin(object):
    """
        Abstract class showing the minimal implementation of a report
        storage plugin. All subclasses MUST implement the methods below.
    """
    def __init__(self):
        self.dbname = 'cardioquant'
        self.store = 'reports'

    def insert(self, report):
        """
            Stores an EvalReport.

            :return: the ident of the stored report, or None
        """
        raise NotImplementedError

    def delete(self, report_id):
        raise NotImplementedError

    def get(self, report_id):
        """
            :return: EvalReport
        """
        raise NotImplementedError

    def getall(self, filter=None):
        """
            :return: list of (id, EvalReport)
        """
        raise NotImplementedError
