# -*- coding: utf-8 -*-
from collections import OrderedDict

from cardioquant.diff import ReportDiff
from cardioquant.objects.indices import INDEX_NAMES, INDEX_GROUPS

METHODS = ('direct', 'seg', 'ensemble')


class EvalReport(object):
    """
        EvalReport is the output interface of a cross-validation run.

        An EvalReport has the following structure:

        - per method and per index: MAE and std of the absolute error
        - per method: averages over the Area, Dimension and RWT groups
        - frame-wise MAE curves (20 points per method and group)
        - phase accuracies (regularised and raw threshold)
        - per-fold stacking diagnostics
        - run metadata (seed, configs, dataset manifest hash)

        Raw per-frame predictions are attached by the harness when the
        report is built; they are written by emit_report() but are not part
        of the serialised report.
    """
    def __init__(self, raw_data=None):
        self._metrics = OrderedDict()
        self._curves = OrderedDict()
        self._phase = OrderedDict()
        self._diagnostics = []
        self._metadata = OrderedDict()
        self.predictions = None
        if raw_data is not None:
            self.__set_raw_data(raw_data)

    def save(self, backend):
        """
            Stores the report through a storage plugin created by
            BackendPluginFactory.

            :param backend: cardioquant.plugins.backendplugin.ReportBackendPlugin

            :return: primary key of the stored report
        """
        if backend is not None:
            _id = backend.insert(self)
        else:
            raise RuntimeError("no storage backend given")
        return _id

    def diff(self, other):
        """
            Compares this report to another one.

            :return: ReportDiff
        """
        return ReportDiff(self, other)

    @property
    def methods(self):
        return tuple(self._metrics.keys())

    @property
    def metadata(self):
        return self._metadata

    @property
    def diagnostics(self):
        """
            Per-fold stacking diagnostics: list of dicts with the training
            fold MSE of the ensemble and of both base predictors, per index.
        """
        return self._diagnostics

    @property
    def id(self):
        """
            Reports are identified by the dataset they were computed on.
        """
        return self._metadata.get('dataset_hash')

    def mae(self, method, index):
        return self._metrics[method][index][0]

    def std(self, method, index):
        return self._metrics[method][index][1]

    def group_mae(self, method, group):
        """
            Mean of the per-index MAEs of one index group.
        """
        names = INDEX_GROUPS[group]
        return sum(self.mae(method, n) for n in names) / float(len(names))

    def group_std(self, method, group):
        names = INDEX_GROUPS[group]
        return sum(self.std(method, n) for n in names) / float(len(names))

    def curve(self, method, group):
        return list(self._curves[method][group])

    def curve_groups(self, method):
        return tuple(self._curves.get(method, {}).keys())

    def phase_accuracy(self, method='ensemble'):
        return self._phase[method]

    @property
    def phase_methods(self):
        return tuple(self._phase.keys())

    def best_method(self, index):
        """
            Method with the smallest MAE for an index; ties go to the method
            listed first.
        """
        return min(self.methods, key=lambda m: self.mae(m, index))

    def best_group_method(self, group):
        return min(self.methods, key=lambda m: self.group_mae(m, group))

    @property
    def summary(self):
        """
            One-line digest: group MAEs of every method.
        """
        parts = []
        for method in self.methods:
            parts.append("{0}: {1}".format(method, " ".join(
                "{0}={1:.3f}".format(g, self.group_mae(method, g))
                for g in INDEX_GROUPS)))
        return "; ".join(parts)

    def get_raw_data(self):
        """
            Serialisable content of the report, as consumed by
            EvalReport(raw_data).
        """
        metrics = OrderedDict()
        for method, per_index in self._metrics.items():
            metrics[method] = OrderedDict(
                (name, [float(mae), float(std)])
                for name, (mae, std) in per_index.items())
        curves = OrderedDict()
        for method, groups in self._curves.items():
            curves[method] = OrderedDict(
                (group, [float(v) for v in values])
                for group, values in groups.items())
        return OrderedDict([
            ('_metrics', metrics),
            ('_curves', curves),
            ('_phase', OrderedDict((k, float(v))
                                   for k, v in self._phase.items())),
            ('_diagnostics', list(self._diagnostics)),
            ('_metadata', OrderedDict(self._metadata)),
        ])

    def __set_raw_data(self, raw_data):
        for method, per_index in raw_data.get('_metrics', {}).items():
            entries = OrderedDict()
            for name in INDEX_NAMES:
                mae, std = per_index[name]
                if mae < 0 or std < 0:
                    raise ValueError("{0}/{1}: MAE and std must be >= 0".format(
                        method, name))
                entries[name] = (float(mae), float(std))
            self._metrics[method] = entries
        for method, groups in raw_data.get('_curves', {}).items():
            self._curves[method] = OrderedDict(
                (group, tuple(float(v) for v in values))
                for group, values in groups.items())
        self._phase = OrderedDict((k, float(v)) for k, v in
                                  raw_data.get('_phase', {}).items())
        self._diagnostics = list(raw_data.get('_diagnostics', []))
        self._metadata = OrderedDict(raw_data.get('_metadata', {}))

    def get_dict(self):
        """
            Flat view used by ReportDiff: one key per MAE, group average
            and phase accuracy.

            :return: dict
        """
        rdict = OrderedDict()
        for method in self.methods:
            for name in INDEX_NAMES:
                rdict["mae::{0}::{1}".format(method, name)] = \
                    self.mae(method, name)
            for group in INDEX_GROUPS:
                rdict["group::{0}::{1}".format(method, group)] = \
                    self.group_mae(method, group)
        for method, acc in self._phase.items():
            rdict["phase::{0}".format(method)] = acc
        return rdict

    def __eq__(self, other):
        return (isinstance(other, EvalReport) and
                self.get_raw_data() == other.get_raw_data())

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "{0}: [{1} methods, folds={2}, seed={3}]".format(
            self.__class__.__name__, len(self._metrics),
            self._metadata.get('folds'), self._metadata.get('seed'))
