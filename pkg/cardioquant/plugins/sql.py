# -*- coding: utf-8 -*-
import json
from datetime import datetime

from sqlalchemy import create_engine
from sqlalchemy.orm import declarative_base, sessionmaker
from sqlalchemy.schema import Column
from sqlalchemy.types import Integer, DateTime, LargeBinary, String

from cardioquant.plugins.backendplugin import ReportBackendPlugin
from cardioquant.reportjson import ReportEncoder, ReportDecoder

Base = declarative_base()


class ReportSqlPlugin(ReportBackendPlugin):
    """
        Persists EvalReport objects in any database sqlalchemy supports.
        Usage::

            from cardioquant.plugins.backendpluginFactory import \\
                BackendPluginFactory
            backend = BackendPluginFactory.create(
                plugin_name='sql', url='sqlite:////tmp/cardioquant.sql')
            report_id = report.save(backend)
            backend.get(report_id)
            backend.getall({'stacking': 'in-sample'})
    """
    class Reports(Base):
        """
            ORM mapping of one report: the JSON document plus the few
            metadata fields reports are filtered on.
        """
        __tablename__ = 'reports'

        id = Column('report_id', Integer, primary_key=True)
        inserted = Column('inserted', DateTime(), default=datetime.utcnow)
        seed = Column('seed', Integer)
        stacking = Column('stacking', String(32))
        dataset_hash = Column('dataset_hash', String(64))
        report_json = Column('report_json', LargeBinary())

        def __init__(self, report):
            metadata = report.metadata
            self.inserted = datetime.utcnow()
            self.seed = metadata.get('seed')
            self.stacking = metadata.get('stacking')
            self.dataset_hash = metadata.get('dataset_hash')
            dumped_json = json.dumps(report, cls=ReportEncoder)
            self.report_json = bytes(dumped_json.encode('utf-8'))

        def decode(self):
            return json.loads(self.report_json.decode('utf-8'),
                              cls=ReportDecoder)

    def __init__(self, **kwargs):
        """
            Receives the keyword arguments of sqlalchemy's create_engine()
            plus a mandatory ``url``, e.g. ``url='sqlite://'`` for an
            in-memory database.

            :raises: ValueError if no url is given
        """
        ReportBackendPlugin.__init__(self)
        self.Session = sessionmaker()
        if 'url' not in kwargs:
            raise ValueError("the sql backend needs an url")
        self.url = kwargs.pop('url')
        self.engine = create_engine(self.url, **kwargs)
        Base.metadata.create_all(bind=self.engine, checkfirst=True)
        self.Session.configure(bind=self.engine)

    def insert(self, report):
        sess = self.Session()
        row = ReportSqlPlugin.Reports(report)
        sess.add(row)
        sess.commit()
        report_id = row.id
        sess.close()
        return report_id if report_id else None

    def get(self, report_id=None):
        if report_id is None:
            raise ValueError("report_id is required")
        sess = self.Session()
        row = sess.query(ReportSqlPlugin.Reports).filter_by(
            id=report_id).first()
        sess.close()
        return row.decode() if row else None

    def getall(self, filter=None):
        """
            :param filter: optional dict on seed, stacking or dataset_hash

            :return: list of (id, EvalReport) in insertion order
        """
        sess = self.Session()
        query = sess.query(ReportSqlPlugin.Reports)
        if filter:
            query = query.filter_by(**filter)
        reports = [(row.id, row.decode()) for row in
                   query.order_by(ReportSqlPlugin.Reports.id)]
        sess.close()
        return reports

    def delete(self, report_id=None):
        """
            :return: number of rows deleted
        """
        if report_id is None:
            raise ValueError("report_id is required")
        sess = self.Session()
        nb_line = sess.query(ReportSqlPlugin.Reports).filter_by(
            id=report_id).delete()
        sess.commit()
        sess.close()
        return nb_line
