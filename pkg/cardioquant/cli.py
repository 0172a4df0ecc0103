# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.cli` -- command line
======================================

::

    cardioquant gen   --subjects 45 --size 64 --seed 7 --out data/
    cardioquant train --model unet --data data/ --folds-exclude 0
    cardioquant eval  --config config/bench.json
    cardioquant viz   --kind segtriptych --weights out/models/0/unet \\
                      --data data/ --subject 3 --frame 0
    cardioquant diff  out_a/report.json out_b/report.json

Exit codes: 0 success, 1 runtime or I/O error, 2 usage error.
Set CARDIOQUANT_LOG=info|debug for diagnostics on standard error.
"""
import argparse
import logging
import os
import sys

from cardioquant import __version__
from cardioquant.config import RunConfig, ConfigException, MODEL_NAMES
from cardioquant.diff import ReportDiffException
from cardioquant.ensemble import EnsembleException
from cardioquant.geometry import GeometryException, mask_from_probs
from cardioquant.harness import (make_folds, run_experiment,
                                 HarnessException)
from cardioquant.log import configure_logging
from cardioquant.models.featuremaps import (export_feature_maps,
                                            UnknownLayerException)
from cardioquant.models.persistence import (load_weights, save_weights,
                                            WeightsLoadException)
from cardioquant.models.predict import (evaluate_dice, segment,
                                        PredictionException)
from cardioquant.models.training import TRAINERS, TrainingException
from cardioquant.parser import load_dataset, DatasetParserException
from cardioquant.pgm import unit_to_gray, labels_to_gray, write_pgm
from cardioquant.phantom import (PhantomSpec, generate_dataset,
                                 manifest_digest, PhantomSpecException,
                                 MIN_SUBJECTS)
from cardioquant.plugins.backendpluginFactory import BackendPluginException
from cardioquant.reportjson import loads
from cardioquant.tensor import TensorException

log = logging.getLogger(__name__)

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
VIZ_KINDS = ('featmaps', 'segtriptych')

RUNTIME_ERRORS = (DatasetParserException, PhantomSpecException,
                  TrainingException, WeightsLoadException,
                  PredictionException, UnknownLayerException,
                  EnsembleException, GeometryException, HarnessException,
                  ReportDiffException, BackendPluginException,
                  TensorException, IOError, OSError, ValueError)


class UsageException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("{0!r} is not an integer".format(
            text))
    if value < 1:
        raise argparse.ArgumentTypeError("{0} must be >= 1".format(value))
    return value


def non_negative_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("{0!r} is not an integer".format(
            text))
    if value < 0:
        raise argparse.ArgumentTypeError("{0} must be >= 0".format(value))
    return value


def subject_count(text):
    value = positive_int(text)
    if value < MIN_SUBJECTS:
        raise argparse.ArgumentTypeError(
            "a dataset needs at least {0} subjects, got {1}".format(
                MIN_SUBJECTS, value))
    return value


def positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("{0!r} is not a number".format(
            text))
    if not value > 0 or value == float('inf'):
        raise argparse.ArgumentTypeError("{0} must be > 0".format(value))
    return value


def _common_flags():
    # SUPPRESS keeps a flag given before the subcommand from being reset
    # by the subparser default
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=non_negative_int,
                        default=argparse.SUPPRESS, help="master seed")
    common.add_argument('--out', default=argparse.SUPPRESS,
                        help="output directory")
    common.add_argument('--config', default=argparse.SUPPRESS,
                        help="RunConfig JSON file; flags override it")
    common.add_argument('--threads', type=positive_int,
                        default=argparse.SUPPRESS,
                        help="worker cap (default 1, fully deterministic)")
    return common


def build_parser():
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog='cardioquant', parents=[common],
        description="Left-ventricle quantification workbench: phantom "
                    "data, direct / segmentation / ensemble estimators and "
                    "their cross-validation.")
    parser.add_argument('--version', action='version',
                        version="%(prog)s {0}".format(__version__))
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    gen = commands.add_parser('gen', parents=[common],
                              help="generate a phantom dataset")
    gen.add_argument('--subjects', type=subject_count)
    gen.add_argument('--size', type=positive_int, dest='image_size')

    train = commands.add_parser('train', parents=[common],
                                help="train one network")
    train.add_argument('--model', required=True, choices=MODEL_NAMES)
    train.add_argument('--data', required=True, dest='dataset')
    train.add_argument('--folds', type=positive_int)
    train.add_argument('--folds-exclude', type=non_negative_int,
                       help="held-out fold of the cross-validation plan")
    train.add_argument('--epochs', type=positive_int)
    train.add_argument('--batch-size', type=positive_int)
    train.add_argument('--lr', type=positive_float)

    evaluate = commands.add_parser('eval', parents=[common],
                                   help="run the cross-validation")
    evaluate.add_argument('--data', dest='dataset')
    evaluate.add_argument('--subjects', type=subject_count)
    evaluate.add_argument('--size', type=positive_int, dest='image_size')
    evaluate.add_argument('--folds', type=positive_int)
    evaluate.add_argument('--stacking', choices=('out-of-fold', 'in-sample'))
    evaluate.add_argument('--inner-folds', type=positive_int)
    evaluate.add_argument('--pixel-spacing-mm', type=positive_float)
    evaluate.add_argument('--store', dest='store_url',
                          help="store URL, e.g. sqlite:////tmp/cq.sql")

    viz = commands.add_parser('viz', parents=[common],
                              help="export feature maps or mask triptychs")
    viz.add_argument('--kind', required=True, choices=VIZ_KINDS)
    viz.add_argument('--weights', required=True,
                     help="weight record (path without .weights.json)")
    viz.add_argument('--data', dest='dataset')
    viz.add_argument('--layer', default='conv1')
    viz.add_argument('--subject', default='0',
                     help="subject number or id (subj_<k>)")
    viz.add_argument('--frame', type=non_negative_int, default=0)

    diff = commands.add_parser('diff', parents=[common],
                               help="compare two report.json files")
    diff.add_argument('report_a')
    diff.add_argument('report_b')
    return parser


def load_config(args):
    """
        RunConfig from --config (or defaults), with every flag the command
        defines overriding the file value.
    """
    path = getattr(args, 'config', None)
    config = RunConfig.from_file(path) if path else RunConfig()
    flags = dict((name, getattr(args, name, None))
                 for name in RunConfig.FIELDS)
    models = None
    if getattr(args, 'model', None):
        changes = dict((k, getattr(args, k, None))
                       for k in ('epochs', 'batch_size', 'lr'))
        changes = dict((k, v) for k, v in changes.items() if v is not None)
        if changes:
            models = config.to_dict()['models']
            models[args.model].update(changes)
    config = config.override(**flags)
    if models is not None:
        config = RunConfig.from_dict(dict(config.to_dict(), models=models))
    return config


def _pick_subject(subjects, token):
    by_id = dict((s.id, s) for s in subjects)
    key = token if token in by_id else "subj_{0}".format(token)
    if key not in by_id:
        raise UsageException("no subject {0!r} in the dataset".format(token))
    return by_id[key]


def cmd_gen(args, config, out):
    root = out if getattr(args, 'out', None) else (config.dataset or out)
    spec = PhantomSpec.scaled(config.image_size)
    generate_dataset(spec, config.subjects, config.seed, root,
                     config.threads)
    digest = manifest_digest(root)
    print("{0} subjects written to {1}".format(config.subjects, root))
    print("manifest sha256 {0}".format(digest))
    return EXIT_OK


def cmd_train(args, config, out):
    subjects = load_dataset(config.dataset)
    held_out = []
    fold = 'all'
    if args.folds_exclude is not None:
        if args.folds_exclude >= config.folds:
            raise UsageException("--folds-exclude {0} with {1} folds".format(
                args.folds_exclude, config.folds))
        plan = make_folds([s.id for s in subjects], config.folds,
                          config.seed)
        fold = args.folds_exclude
        held = set(plan.test_ids(fold))
        held_out = [s for s in subjects if s.id in held]
        subjects = [s for s in subjects if s.id not in held]

    def progress(arch, epoch, epochs, loss):
        log.debug("%s %d/%d loss %.6f", arch, epoch, epochs, loss)

    weights = TRAINERS[args.model](subjects, config.models[args.model],
                                   config.seed, progress)
    paths = save_weights(weights, os.path.join(out, 'models', str(fold),
                                               args.model))
    print("final loss {0!r}".format(weights.final_loss))
    print("weights {0}".format(paths[0]))
    if args.model == 'unet' and held_out:
        print("held-out cavity dice {0:.4f}".format(
            evaluate_dice(weights, held_out)))
    return EXIT_OK


def cmd_eval(args, config, out):
    report = run_experiment(config)
    print(report.summary)
    print("report written to {0}".format(config.out))
    if config.store_url:
        print("report stored in {0}".format(config.store_url))
    return EXIT_OK


def cmd_viz(args, config, out):
    weights = load_weights(args.weights)
    if config.dataset is None:
        raise UsageException("viz needs --data (or dataset in --config)")
    subject = _pick_subject(load_dataset(config.dataset), args.subject)
    if args.frame >= len(subject):
        raise UsageException("--frame must be < {0}".format(len(subject)))
    frame = subject[args.frame]
    os.makedirs(out, exist_ok=True)
    stem = os.path.join(out, "{0}_f{1}".format(subject.id, args.frame))

    if args.kind == 'featmaps':
        image = frame.image if weights.architecture != 'masknet' \
            else frame.labels
        path = "{0}_{1}_{2}.pgm".format(stem, weights.architecture,
                                         args.layer)
        export_feature_maps(weights, image, args.layer, path)
        print(path)
        return EXIT_OK

    if weights.architecture != 'unet':
        raise UsageException("segtriptych needs unet weights, got "
                             "{0}".format(weights.architecture))
    predicted = mask_from_probs(segment(weights, frame.image[None])[0])
    for suffix, gray in (('input', unit_to_gray(frame.image[0])),
                         ('truth', labels_to_gray(frame.labels)),
                         ('pred', labels_to_gray(predicted))):
        path = "{0}_{1}.pgm".format(stem, suffix)
        write_pgm(path, gray)
        print(path)
    return EXIT_OK


def _read_report(path):
    try:
        with open(path, 'r') as fileobj:
            return loads(fileobj.read())
    except ValueError as error:
        raise ReportDiffException("{0} is not a report: {1}".format(path,
                                                                     error))


def cmd_diff(args, config, out):
    old = _read_report(args.report_a)
    new = _read_report(args.report_b)
    diff = new.diff(old)
    for key, before, after in diff.changes():
        print("~ {0}: {1!r} -> {2!r}".format(key, before, after))
    for key in sorted(diff.added()):
        print("+ {0}".format(key))
    for key in sorted(diff.removed()):
        print("- {0}".format(key))
    print(repr(diff))
    return EXIT_OK


COMMANDS = {
    'gen': cmd_gen,
    'train': cmd_train,
    'eval': cmd_eval,
    'viz': cmd_viz,
    'diff': cmd_diff,
}


def main(argv=None):
    """
        :return: process exit code
    """
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as error:
        return error.code if isinstance(error.code, int) else EXIT_USAGE
    try:
        config = load_config(args)
    except ConfigException as error:
        sys.stderr.write("cardioquant: usage error: {0}\n".format(error))
        return EXIT_USAGE
    out = getattr(args, 'out', None) or config.out
    try:
        return COMMANDS[args.command](args, config, out)
    except UsageException as error:
        sys.stderr.write("cardioquant: usage error: {0}\n".format(error))
        return EXIT_USAGE
    except RUNTIME_ERRORS as error:
        log.debug("%s failed", args.command, exc_info=True)
        sys.stderr.write("cardioquant: error: {0}\n".format(error))
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
