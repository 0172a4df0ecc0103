# -*- coding: utf-8 -*-
"""
Run configuration. A RunConfig is a JSON document whose keys mirror the
command-line flags; flags given on the command line override the file.
``config/bench.json`` holds the desk-scale experiment.
"""
import json
from collections import OrderedDict

STACKING_MODES = ('out-of-fold', 'in-sample')
MODEL_NAMES = ('direct', 'unet', 'masknet')


class ModelConfig(object):
    """
        Training hyper-parameters of one network.
    """
    def __init__(self, epochs=40, batch_size=32, lr=1e-3):
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.lr = float(lr)
        if self.epochs < 1 or self.batch_size < 1 or not self.lr > 0:
            raise ConfigException("epochs, batch_size and lr must be "
                                  "positive, got {0}".format(self.to_dict()))

    def to_dict(self):
        return OrderedDict([('epochs', self.epochs),
                            ('batch_size', self.batch_size),
                            ('lr', self.lr)])

    def replace(self, **kwargs):
        values = self.to_dict()
        values.update((k, v) for k, v in kwargs.items() if v is not None)
        return ModelConfig(**values)

    def __eq__(self, other):
        return isinstance(other, ModelConfig) and \
            self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "ModelConfig(epochs={0}, batch_size={1}, lr={2})".format(
            self.epochs, self.batch_size, self.lr)


DEFAULT_MODELS = OrderedDict([
    ('direct', ModelConfig(40, 32, 1e-3)),
    ('unet', ModelConfig(30, 8, 1e-3)),
    ('masknet', ModelConfig(40, 32, 1e-3)),
])


class RunConfig(object):
    """
        Everything a cross-validation run depends on.
    """
    FIELDS = OrderedDict([
        ('dataset', None),
        ('seed', 7),
        ('image_size', 64),
        ('subjects', 45),
        ('folds', 3),
        ('stacking', 'out-of-fold'),
        ('inner_folds', 5),
        ('pixel_spacing_mm', None),
        ('out', 'out'),
        ('threads', 1),
        ('store_url', None),
    ])

    def __init__(self, models=None, **kwargs):
        unknown = set(kwargs) - set(self.FIELDS)
        if unknown:
            raise ConfigException("unknown configuration keys {0}".format(
                sorted(unknown)))
        for name, default in self.FIELDS.items():
            setattr(self, name, kwargs.get(name, default))
        self.models = OrderedDict((k, v) for k, v in DEFAULT_MODELS.items())
        for name, value in (models or {}).items():
            if name not in MODEL_NAMES:
                raise ConfigException("unknown model {0!r}".format(name))
            self.models[name] = (value if isinstance(value, ModelConfig)
                                 else ModelConfig(**value))
        self.validate()

    def validate(self):
        for name in ('seed',):
            if int(getattr(self, name)) < 0:
                raise ConfigException("{0} must be >= 0".format(name))
        for name in ('image_size', 'subjects', 'folds', 'inner_folds',
                     'threads'):
            value = getattr(self, name)
            if int(value) != value or int(value) < 1:
                raise ConfigException("{0} must be a positive integer, got "
                                      "{1!r}".format(name, value))
            setattr(self, name, int(value))
        self.seed = int(self.seed)
        if self.inner_folds < 2:
            raise ConfigException("inner_folds must be >= 2")
        if self.stacking not in STACKING_MODES:
            raise ConfigException("stacking must be one of {0}, got "
                                  "{1!r}".format(STACKING_MODES,
                                                 self.stacking))
        if self.pixel_spacing_mm is not None and \
                not float(self.pixel_spacing_mm) > 0:
            raise ConfigException("pixel_spacing_mm must be > 0")
        return True

    @classmethod
    def from_dict(cls, rdict):
        rdict = dict(rdict)
        models = rdict.pop('models', None)
        return cls(models=models, **rdict)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, 'r') as fileobj:
                rdict = json.load(fileobj)
        except (IOError, OSError) as error:
            raise ConfigException("cannot read config {0}: {1}".format(
                path, error))
        except ValueError as error:
            raise ConfigException("config {0} is not valid JSON: {1}".format(
                path, error))
        if not isinstance(rdict, dict):
            raise ConfigException("config {0} must hold a JSON object".format(
                path))
        return cls.from_dict(rdict)

    def to_dict(self):
        rdict = OrderedDict((name, getattr(self, name))
                            for name in self.FIELDS)
        rdict['models'] = OrderedDict((k, v.to_dict())
                                      for k, v in self.models.items())
        return rdict

    def override(self, **flags):
        """
            Returns a copy where every non-None flag replaces the file value.
        """
        rdict = self.to_dict()
        for name, value in flags.items():
            if value is not None:
                rdict[name] = value
        return RunConfig.from_dict(rdict)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and \
            self.to_dict() == other.to_dict()

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "RunConfig({0})".format(dict(self.to_dict()))


class ConfigException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg
