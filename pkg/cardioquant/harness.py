# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.harness` -- the cross-validation experiment
=============================================================

Subject-level k-fold cross-validation of the three estimators:

- direct: the direct estimation CNN;
- seg: U-Net, mask cleanup and the mask CNN;
- ensemble: the per-index linear combination of both, fitted on the
  training folds (out-of-fold base predictions by default).

Errors are absolute differences per frame and per index, in pixel units
unless ``pixel_spacing_mm`` is set.
"""
import csv
import io
import logging
import os
from collections import OrderedDict

import numpy as np

from cardioquant import geometry, phase
from cardioquant.ensemble import (fit_ensemble_arrays, predict_ensemble_many,
                                  training_mse, EnsembleException)
from cardioquant.models.persistence import save_weights
from cardioquant.models.predict import predict_direct_many, predict_seg_many
from cardioquant.models.training import TRAINERS, TrainingException
from cardioquant.objects.indices import INDEX_NAMES, INDEX_GROUPS, group_of
from cardioquant.objects.report import EvalReport, METHODS
from cardioquant.objects.subject import FRAMES_PER_CYCLE, CAVITY, MYOCARDIUM
from cardioquant.parser import load_dataset
from cardioquant.phantom import PhantomSpec, generate_dataset, manifest_digest
from cardioquant.plugins.backendpluginFactory import BackendPluginFactory
from cardioquant.process import run_folds
from cardioquant.reportjson import dumps
from cardioquant.rng import substream, derive_seed

log = logging.getLogger(__name__)

METHOD_TITLES = OrderedDict([('direct', 'Direct Estimation'),
                             ('seg', 'Segmentation'),
                             ('ensemble', 'Ensemble')])
PHASE_METHODS = ('direct', 'seg', 'ensemble', 'ensemble_raw')


class FoldPlan(object):
    """
        FoldPlan assigns every subject to one of k disjoint folds.
    """
    def __init__(self, k, assignments, seed=None):
        self.k = int(k)
        self.assignments = OrderedDict(assignments)
        self.seed = seed
        if set(self.assignments.values()) - set(range(self.k)):
            raise HarnessException("fold ids must be in [0, {0})".format(
                self.k))

    def test_ids(self, fold):
        return [sid for sid, f in self.assignments.items() if f == fold]

    def train_ids(self, fold):
        return [sid for sid, f in self.assignments.items() if f != fold]

    @property
    def sizes(self):
        return tuple(len(self.test_ids(f)) for f in range(self.k))

    def get_dict(self):
        return OrderedDict([('k', self.k), ('seed', self.seed),
                            ('assignments', self.assignments)])

    def __eq__(self, other):
        return isinstance(other, FoldPlan) and \
            self.get_dict() == other.get_dict()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "FoldPlan(k={0}, sizes={1})".format(self.k, self.sizes)


def make_folds(subject_ids, k=3, seed=7):
    """
        Seeded shuffle of the sorted ids, then round-robin assignment, so
        fold sizes differ by at most one.

        :return: FoldPlan
    """
    ids = sorted(subject_ids)
    if len(set(ids)) != len(ids):
        raise HarnessException("subject ids must be unique")
    if k < 1 or k > len(ids):
        raise HarnessException("cannot split {0} subjects into {1} "
                               "folds".format(len(ids), k))
    order = substream(seed, 'folds', k).permutation(len(ids))
    assignments = OrderedDict()
    for position, index in enumerate(order):
        assignments[ids[index]] = position % k
    assignments = OrderedDict((sid, assignments[sid]) for sid in ids)
    return FoldPlan(k, assignments, seed)


def _check_leakage(weights, held_out, where):
    seen = set(weights.metadata.get('subjects', ())) & set(held_out)
    if seen:
        raise LeakageException("{0}: {1} model was trained on held-out "
                               "subjects {2}".format(where,
                                                     weights.architecture,
                                                     sorted(seen)))


class _FoldRunner(object):
    """
        Everything one outer fold does; called from a FoldProcess.
    """
    def __init__(self, by_id, plan, config, models_dir=None):
        self.by_id = by_id
        self.plan = plan
        self.config = config
        self.models_dir = models_dir

    def train_bases(self, subjects, seed, progress, suffix=''):
        def report(arch, epoch, epochs, loss):
            if progress is not None:
                progress(arch + suffix, epoch, epochs, loss)
        return OrderedDict(
            (arch, TRAINERS[arch](subjects, self.config.models[arch], seed,
                                  report))
            for arch in TRAINERS)

    def predict(self, bases, subjects, where, held_out=True):
        """
            :param held_out: the subjects must not be in any training set
                             of ``bases``

            :return: (direct [F, 11], seg [F, 11], masks [F, H, W])
        """
        if held_out:
            ids = [s.id for s in subjects]
            for weights in bases.values():
                _check_leakage(weights, ids, where)
        images = np.concatenate([s.images for s in subjects])
        direct = predict_direct_many(bases['direct'], images)
        masks, seg = predict_seg_many(bases['unet'], bases['masknet'], images)
        return direct, seg, masks

    def stacking_inputs(self, fold, train, bases, progress):
        if self.config.stacking == 'in-sample':
            direct, seg, _ = self.predict(bases, train,
                                          "fold {0}".format(fold),
                                          held_out=False)
            return direct, seg
        k = min(self.config.inner_folds, len(train))
        inner = make_folds([s.id for s in train], k,
                           derive_seed(self.config.seed, 'fold', fold,
                                       'inner'))
        direct = OrderedDict()
        seg = OrderedDict()
        for j in range(k):
            held = set(inner.test_ids(j))
            inner_train = [s for s in train if s.id not in held]
            inner_test = [s for s in train if s.id in held]
            seed = derive_seed(self.config.seed, 'fold', fold, 'inner', j)
            inner_bases = self.train_bases(inner_train, seed, progress,
                                           ".inner{0}".format(j))
            d, s, _ = self.predict(inner_bases, inner_test,
                                   "fold {0} inner {1}".format(fold, j))
            for pos, subject in enumerate(inner_test):
                rows = slice(pos * FRAMES_PER_CYCLE,
                             (pos + 1) * FRAMES_PER_CYCLE)
                direct[subject.id] = d[rows]
                seg[subject.id] = s[rows]
        ids = [s.id for s in train]
        return (np.concatenate([direct[i] for i in ids]),
                np.concatenate([seg[i] for i in ids]))

    def __call__(self, fold, progress=None):
        log.info("fold %d: start", fold)
        train = [self.by_id[i] for i in self.plan.train_ids(fold)]
        test = [self.by_id[i] for i in self.plan.test_ids(fold)]
        try:
            bases = self.train_bases(
                train, derive_seed(self.config.seed, 'fold', fold, 'base'),
                progress)
            stack_direct, stack_seg = self.stacking_inputs(fold, train, bases,
                                                           progress)
            truth = np.concatenate([s.truths for s in train])
            ensemble = fit_ensemble_arrays(stack_direct, stack_seg, truth,
                                           {'fold': fold,
                                            'stacking': self.config.stacking})
        except (TrainingException, EnsembleException) as error:
            raise HarnessException("fold {0}: {1}".format(fold, error))

        direct, seg, masks = self.predict(bases, test, "fold {0}".format(fold))
        combined = predict_ensemble_many(ensemble, direct, seg)
        labels = np.concatenate([s.labels for s in test])
        dice = OrderedDict(
            (name, float(np.mean([geometry.dice(m, t, cls)
                                  for m, t in zip(masks, labels)])))
            for name, cls in (('cavity', CAVITY), ('myocardium', MYOCARDIUM)))

        mse = training_mse(ensemble, stack_direct, stack_seg, truth)
        diagnostics = OrderedDict([
            ('fold', fold),
            ('train_subjects', len(train)),
            ('test_subjects', len(test)),
            ('stacking_samples', ensemble.n_samples),
            ('dice', dice),
            ('coefficients', ensemble.get_dict()),
            ('training_mse', OrderedDict(
                (method, OrderedDict(zip(INDEX_NAMES,
                                         (float(v) for v in mse[method]))))
                for method in METHODS)),
        ])
        if self.models_dir is not None:
            self.save(fold, bases, ensemble)

        predictions = OrderedDict((m, OrderedDict()) for m in METHODS)
        for pos, subject in enumerate(test):
            rows = slice(pos * FRAMES_PER_CYCLE, (pos + 1) * FRAMES_PER_CYCLE)
            for method, values in (('direct', direct), ('seg', seg),
                                   ('ensemble', combined)):
                predictions[method][subject.id] = values[rows]
        log.info("fold %d: done, cavity dice %.3f", fold, dice['cavity'])
        return predictions, diagnostics

    def save(self, fold, bases, ensemble):
        directory = os.path.join(self.models_dir, str(fold))
        for arch, weights in bases.items():
            save_weights(weights, os.path.join(directory, arch))
        path = os.path.join(directory, 'ensemble.json')
        try:
            with open(path, 'w') as fileobj:
                fileobj.write(dumps(ensemble))
        except (IOError, OSError) as error:
            raise HarnessException("cannot write {0}: {1}".format(path, error))


def unit_scale(pixel_spacing_mm=None):
    """
        Per-index factor converting px / px^2 to mm / mm^2.
    """
    if pixel_spacing_mm is None:
        return np.ones(len(INDEX_NAMES))
    s = float(pixel_spacing_mm)
    return np.array([s * s if group_of(n) == 'Area' else s
                     for n in INDEX_NAMES])


def framewise_curves(errors, groups=None):
    """
        Mean absolute error per frame index.

        :param errors: dict method -> [S, 20, 11] absolute errors
        :param groups: index groups to build curves for (default: all)

        :return: OrderedDict method -> OrderedDict group -> 20 floats
    """
    groups = list(groups or INDEX_GROUPS)
    curves = OrderedDict()
    for method, err in errors.items():
        err = np.asarray(err, dtype=np.float64)
        if err.ndim != 3 or err.shape[1:] != (FRAMES_PER_CYCLE,
                                              len(INDEX_NAMES)):
            raise HarnessException("errors of {0} must be [S, 20, 11], got "
                                   "{1}".format(method, err.shape))
        curves[method] = OrderedDict()
        for group in groups:
            cols = [INDEX_NAMES.index(n) for n in INDEX_GROUPS[group]]
            curves[method][group] = [float(v) for v in
                                     err[:, :, cols].mean(axis=(0, 2))]
    return curves


def build_report(subjects, predictions, diagnostics, metadata,
                 pixel_spacing_mm=None):
    """
        Aggregates held-out predictions of every fold into an EvalReport.

        :param predictions: method -> subject id -> [20, 11] (px units)
    """
    scale = unit_scale(pixel_spacing_mm)
    truths = np.stack([s.truths for s in subjects]) * scale
    errors = OrderedDict()
    metrics = OrderedDict()
    dumped = OrderedDict()
    phases = OrderedDict()
    truth_phases = [s.phases for s in subjects]
    for method in METHODS:
        values = np.stack([predictions[method][s.id] for s in subjects])
        err = np.abs(values * scale - truths)
        errors[method] = err
        flat = err.reshape(-1, len(INDEX_NAMES))
        metrics[method] = OrderedDict(
            (name, [float(flat[:, i].mean()), float(flat[:, i].std())])
            for i, name in enumerate(INDEX_NAMES))
        inferred = [phase.infer_phase(v[:, 0]) for v in values]
        phases[method] = phase.phase_accuracy([reg for _, reg in inferred],
                                              truth_phases)
        if method == 'ensemble':
            phases['ensemble_raw'] = phase.phase_accuracy(
                [raw for raw, _ in inferred], truth_phases)
        dumped[method] = OrderedDict(
            (s.id, (v * scale, list(reg)))
            for s, v, (_, reg) in zip(subjects, values, inferred))

    report = EvalReport({
        '_metrics': metrics,
        '_curves': framewise_curves(errors),
        '_phase': OrderedDict((m, phases[m]) for m in PHASE_METHODS),
        '_diagnostics': diagnostics,
        '_metadata': metadata,
    })
    report.predictions = dumped
    return report


def run_cv(subjects, plan, config, dataset_hash=None, models_dir=None,
           event_callback=None):
    """
        Runs the whole experiment.

        :param subjects: list of Subject
        :param plan: FoldPlan over the subject ids
        :param config: RunConfig (models, stacking, threads, seed, ...)
        :param models_dir: when given, weights are saved to
                           ``<models_dir>/<fold>/``
        :param event_callback: optional FoldProcess callback

        :return: EvalReport, held-out predictions attached
    """
    subjects = sorted(subjects, key=lambda s: s.id)
    by_id = OrderedDict((s.id, s) for s in subjects)
    if set(by_id) != set(plan.assignments):
        raise HarnessException("fold plan and dataset list different "
                               "subjects")
    runner = _FoldRunner(by_id, plan, config, models_dir)
    targets = OrderedDict((fold, runner) for fold in range(plan.k))
    results = run_folds(targets, config.threads, event_callback)

    predictions = OrderedDict((m, OrderedDict()) for m in METHODS)
    diagnostics = []
    for fold, (fold_predictions, fold_diagnostics) in results.items():
        for method in METHODS:
            predictions[method].update(fold_predictions[method])
        diagnostics.append(fold_diagnostics)

    metadata = OrderedDict([
        ('seed', config.seed),
        ('folds', plan.k),
        ('fold_sizes', list(plan.sizes)),
        ('stacking', config.stacking),
        ('inner_folds', config.inner_folds),
        ('subjects', len(subjects)),
        ('image_size', subjects[0].size[0]),
        ('models', OrderedDict((k, v.to_dict())
                               for k, v in config.models.items())),
        ('pixel_spacing_mm', config.pixel_spacing_mm),
        ('units', 'px' if config.pixel_spacing_mm is None else 'mm'),
        ('dataset_hash', dataset_hash),
    ])
    report = build_report(subjects, predictions, diagnostics, metadata,
                          config.pixel_spacing_mm)
    log.info("cross-validation done: %s", report.summary)
    return report


# -- report files ----------------------------------------------------------

def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def report_csv(report):
    rows = []
    for method in report.methods:
        for name in INDEX_NAMES:
            rows.append([method, group_of(name), name,
                         repr(report.mae(method, name)),
                         repr(report.std(method, name))])
    for method in report.methods:
        for group in INDEX_GROUPS:
            rows.append([method, group, 'average',
                         repr(report.group_mae(method, group)),
                         repr(report.group_std(method, group))])
    return _csv_text(['method', 'group', 'index', 'mae', 'std'], rows)


def curves_csv(report):
    rows = []
    for method in report.methods:
        for group in report.curve_groups(method):
            for frame, value in enumerate(report.curve(method, group)):
                rows.append([frame, method, group, repr(value)])
    return _csv_text(['frame', 'method', 'group', 'mae'], rows)


def phase_csv(report):
    return _csv_text(['method', 'accuracy'],
                     [[m, repr(report.phase_accuracy(m))]
                      for m in report.phase_methods])


def predictions_csv(values, bits):
    rows = [[t] + [repr(float(v)) for v in values[t]] + [bits[t]]
            for t in range(len(bits))]
    return _csv_text(['frame'] + list(INDEX_NAMES) + ['phase'], rows)


def report_markdown(report):
    """
        Table-style grid: one row per index plus one average row per group,
        one column per method, MAE +/- std, best MAE of each row in bold.
    """
    methods = report.methods
    units = report.metadata.get('units', 'px')
    lines = ["| Group | Index | {0} |".format(" | ".join(
                 METHOD_TITLES.get(m, m) for m in methods)),
             "|" + "---|" * (len(methods) + 2)]

    def row(group, label, cells, best):
        text = []
        for method, (mae, std) in zip(methods, cells):
            cell = "{0:.2f} ± {1:.2f}".format(mae, std)
            text.append("**{0}**".format(cell) if method == best else cell)
        lines.append("| {0} | {1} | {2} |".format(group, label,
                                                  " | ".join(text)))

    for group, names in INDEX_GROUPS.items():
        for name in names:
            row(group, name, [(report.mae(m, name), report.std(m, name))
                              for m in methods], report.best_method(name))
        row(group, 'average', [(report.group_mae(m, group),
                                report.group_std(m, group))
                               for m in methods],
            report.best_group_method(group))
    lines.append("")
    lines.append("Errors in {0} (areas in {0}^2).".format(units))
    lines.append("")
    lines.append("| Phase estimator | Accuracy |")
    lines.append("|---|---|")
    for method in report.phase_methods:
        lines.append("| {0} | {1:.4f} |".format(method,
                                                report.phase_accuracy(method)))
    return "\n".join(lines) + "\n"


def _write_text(path, text):
    try:
        with open(path, 'w', encoding='utf-8', newline='') as fileobj:
            fileobj.write(text)
    except (IOError, OSError) as error:
        raise HarnessException("cannot write {0}: {1}".format(path, error))
    return path


def emit_report(report, out_dir, formats=('csv', 'markdown', 'json')):
    """
        Writes the report files:

        - csv: report.csv, curves.csv, phase.csv and, when the report
          carries them, predictions/<method>/<subject>.csv
        - markdown: report.md
        - json: report.json

        :return: list of written paths
    """
    unknown = set(formats) - set(('csv', 'markdown', 'json'))
    if unknown:
        raise HarnessException("unknown report formats {0}".format(
            sorted(unknown)))
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as error:
        raise HarnessException("cannot create {0}: {1}".format(out_dir,
                                                                error))
    written = []
    if 'csv' in formats:
        for name, text in (('report.csv', report_csv(report)),
                           ('curves.csv', curves_csv(report)),
                           ('phase.csv', phase_csv(report))):
            written.append(_write_text(os.path.join(out_dir, name), text))
        for method, per_subject in (report.predictions or {}).items():
            directory = os.path.join(out_dir, 'predictions', method)
            try:
                os.makedirs(directory, exist_ok=True)
            except OSError as error:
                raise HarnessException("cannot create {0}: {1}".format(
                    directory, error))
            for sid, (values, bits) in per_subject.items():
                written.append(_write_text(
                    os.path.join(directory, "{0}.csv".format(sid)),
                    predictions_csv(values, bits)))
    if 'markdown' in formats:
        written.append(_write_text(os.path.join(out_dir, 'report.md'),
                                   report_markdown(report)))
    if 'json' in formats:
        written.append(_write_text(os.path.join(out_dir, 'report.json'),
                                   dumps(report)))
    return written


def prepare_dataset(config):
    """
        Loads the dataset at ``config.dataset``; when that directory is
        missing or empty (or no dataset path is set) a phantom dataset is
        generated there first (``<out>/data`` by default).

        :return: (list of Subject, manifest sha256 or None)
    """
    root = config.dataset or os.path.join(config.out, 'data')
    manifest = os.path.join(root, 'manifest.json')
    if not os.path.isdir(root) or not os.listdir(root):
        spec = PhantomSpec.scaled(config.image_size)
        generate_dataset(spec, config.subjects, config.seed, root,
                         config.threads)
    subjects = load_dataset(root)
    digest = manifest_digest(root) if os.path.isfile(manifest) else None
    return subjects, digest


def run_experiment(config, event_callback=None):
    """
        ``eval`` end to end: dataset, folds, cross-validation, report files
        under ``config.out`` and, when ``config.store_url`` is set, the
        report stored through the sql backend.

        :return: EvalReport
    """
    subjects, digest = prepare_dataset(config)
    plan = make_folds([s.id for s in subjects], config.folds, config.seed)
    log.info("folds %s, stacking %s", plan.sizes, config.stacking)
    report = run_cv(subjects, plan, config, dataset_hash=digest,
                    models_dir=os.path.join(config.out, 'models'),
                    event_callback=event_callback)
    emit_report(report, config.out)
    if config.store_url:
        backend = BackendPluginFactory.from_url(config.store_url)
        report.save(backend)
    return report


class HarnessException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


class LeakageException(HarnessException):
    pass
