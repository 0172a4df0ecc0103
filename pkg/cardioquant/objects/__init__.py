# -*- coding: utf-8 -*-

from cardioquant.objects.indices import IndexVector
from cardioquant.objects.subject import Frame, Subject
from cardioquant.objects.weights import ModelWeights, EnsembleWeights
from cardioquant.objects.report import EvalReport

__all__ = ['IndexVector', 'Frame', 'Subject', 'ModelWeights',
           'EnsembleWeights', 'EvalReport']
