# -*- coding: utf-8 -*-
from collections import OrderedDict

import numpy as np

from cardioquant.tensor import Tensor, ShapeException


class AdamState(object):
    """
        Moment estimates and hyper-parameters of the Adam optimizer.

        The state is owned by one training loop. ``m`` and ``v`` are created
        lazily with the shapes of the parameters they follow.
    """
    def __init__(self, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.step = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = OrderedDict()
        self.v = OrderedDict()

    def __repr__(self):
        return "AdamState(step={0}, lr={1})".format(self.step, self.lr)


def adam_step(state, params, grads):
    """
        Applies one Adam update in place.

        The step counter is incremented before bias correction, so the first
        update moves every parameter by about -lr * sign(g).

        :param state: AdamState
        :param params: mapping name -> Tensor, updated in place
        :param grads: mapping name -> Tensor

        :return: params
    """
    for name, param in params.items():
        if name not in grads:
            raise ShapeException("no gradient for parameter {0}".format(name))
        if grads[name].shape != param.shape:
            raise ShapeException("gradient shape {0} does not match parameter "
                                 "{1} shape {2}".format(grads[name].shape,
                                                        name, param.shape))

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.step
    correction2 = 1.0 - b2 ** state.step
    for name, param in params.items():
        g = grads[name].array.astype(np.float64)
        if name not in state.m:
            state.m[name] = Tensor.zeros(param.shape)
            state.v[name] = Tensor.zeros(param.shape)
        m = b1 * state.m[name].array.astype(np.float64) + (1.0 - b1) * g
        v = b2 * state.v[name].array.astype(np.float64) + (1.0 - b2) * g * g
        state.m[name].array[...] = m
        state.v[name].array[...] = v
        mhat = m / correction1
        vhat = v / correction2
        update = state.lr * mhat / (np.sqrt(vhat) + state.eps)
        param.array[...] = param.array.astype(np.float64) - update
    return params
