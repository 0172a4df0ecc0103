# -*- coding: utf-8 -*-
"""
:mod:`cardioquant.tensor` -- dense tensors and reverse-mode differentiation
===========================================================================

.. module:: cardioquant.tensor

:synopsis: a minimal tape-based autodiff engine, sufficient to train the
           direct estimation CNN, the U-Net and the mask CNN on a CPU.

Every operation takes graph nodes (or plain Tensors, in which case a
throw-away Graph is created) and returns a new node recorded on the graph.
A training step looks like::

    graph.reset()
    x = graph.constant(batch)
    out = network.forward(graph, x, mode='train')
    loss = mse(out, targets)
    graph.backward(loss)
    adam_step(state, graph.parameters, graph.gradients)

Storage is 32-bit. Matrix products run through float32 BLAS; sums, means,
variances and losses accumulate in 64-bit before being stored back.
"""
import logging
from collections import OrderedDict

import numpy as np
from scipy.special import expit

log = logging.getLogger(__name__)

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9
PROB_FLOOR = 1e-7

__all__ = [
    'Tensor', 'Node', 'Graph', 'BatchNormState',
    'conv2d', 'max_pool2', 'batch_norm', 'dense', 'relu', 'sigmoid',
    'softmax_channels', 'upsample2', 'upsample2_concat', 'flatten', 'mul',
    'reduce_sum', 'mse', 'cross_entropy', 'backward', 'init_uniform',
]


class Tensor(object):
    """
        Tensor is a dense N-dimensional array of 32-bit floats stored
        row-major. It is the numeric carrier for images, feature maps and
        weights.

        :param data: anything numpy can turn into an array
        :param shape: optional shape to reshape data to
    """
    def __init__(self, data, shape=None):
        arr = np.array(data, dtype=np.float32)
        if shape is not None:
            try:
                arr = arr.reshape(tuple(shape))
            except ValueError:
                raise ShapeException("cannot reshape {0} values to {1}".format(
                    arr.size, tuple(shape)))
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if any(extent < 1 for extent in arr.shape):
            raise ShapeException("tensor extents must be >= 1, "
                                 "got {0}".format(arr.shape))
        self.array = np.ascontiguousarray(arr)

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(tuple(shape), dtype=np.float32))

    @classmethod
    def ones(cls, shape):
        return cls(np.ones(tuple(shape), dtype=np.float32))

    @property
    def shape(self):
        """
            Accessor for the tensor extents.

            :return: tuple of int
        """
        return self.array.shape

    @property
    def data(self):
        """
            Accessor for the flat row-major buffer (a view, not a copy).

            :return: 1-D numpy float32 array
        """
        return self.array.reshape(-1)

    @property
    def size(self):
        return int(self.array.size)

    def numpy(self):
        return self.array

    def copy(self):
        return Tensor(self.array.copy())

    def __repr__(self):
        return "{0}(shape={1})".format(self.__class__.__name__, self.shape)


class Node(object):
    """
        A value recorded on a Graph: a leaf (parameter or constant) or the
        output of an operation. ``backward_fn`` maps the gradient of the
        output to one gradient per input (None for inputs that need none).
    """
    __slots__ = ('graph', 'index', 'op', 'inputs', 'value', 'backward_fn',
                 'name', 'extra')

    def __init__(self, graph, index, op, inputs, value, backward_fn=None,
                 name=None):
        self.graph = graph
        self.index = index
        self.op = op
        self.inputs = inputs
        self.value = value
        self.backward_fn = backward_fn
        self.name = name
        self.extra = None

    @property
    def shape(self):
        return self.value.shape

    def tensor(self):
        """
            Returns a Tensor copy of the node value.
        """
        return Tensor(self.value)

    def __repr__(self):
        return "Node({0}#{1}, shape={2})".format(self.op, self.index,
                                                  self.shape)


class Graph(object):
    """
        Graph records operations in execution order (hence topologically
        sorted) and owns the named trainable parameters plus their
        gradients.

        Parameters survive reset(); nodes do not. A graph is owned by a
        single training loop and must not be shared between threads.
    """
    def __init__(self):
        self.nodes = []
        self.parameters = OrderedDict()
        self.gradients = OrderedDict()
        self._param_nodes = {}

    def add_parameter(self, name, tensor):
        """
            Registers a trainable parameter. The tensor is used in place:
            optimizer updates are visible to the next forward pass.
        """
        if name in self.parameters:
            raise GraphStateException("duplicate parameter {0}".format(name))
        if not isinstance(tensor, Tensor):
            tensor = Tensor(tensor)
        self.parameters[name] = tensor
        self.gradients[name] = Tensor.zeros(tensor.shape)
        return tensor

    def param(self, name):
        """
            Returns the leaf node of a parameter for the current pass.
        """
        if name not in self.parameters:
            raise GraphStateException("unknown parameter {0}".format(name))
        node = self._param_nodes.get(name)
        if node is None:
            node = self._append('parameter', (),
                                self.parameters[name].array, name=name)
            self._param_nodes[name] = node
        return node

    def constant(self, value):
        """
            Records a non-trainable leaf. Its gradient is never kept.
        """
        if isinstance(value, Node):
            return value
        if isinstance(value, Tensor):
            arr = value.array
        else:
            arr = Tensor(value).array
        return self._append('constant', (), arr)

    def record(self, op, inputs, value, backward_fn):
        return self._append(op, tuple(inputs), value, backward_fn)

    def _append(self, op, inputs, value, backward_fn=None, name=None):
        node = Node(self, len(self.nodes), op, inputs, value, backward_fn,
                    name)
        self.nodes.append(node)
        return node

    def reset(self):
        """
            Forgets the recorded pass, keeps parameters.
        """
        self.nodes = []
        self._param_nodes = {}

    def backward(self, loss):
        """
            Reverse-mode sweep from a scalar loss node. Fills
            ``self.gradients`` for every parameter; parameters the pass did
            not touch get zero gradients.

            :return: OrderedDict name -> Tensor
        """
        if (not isinstance(loss, Node) or loss.graph is not self or
                loss.index >= len(self.nodes) or
                self.nodes[loss.index] is not loss):
            raise GraphStateException("backward() called before a forward "
                                      "pass recorded the loss node")
        if loss.value.size != 1:
            raise ShapeException("loss must be a scalar, got shape "
                                 "{0}".format(loss.shape))

        grads = {loss.index: np.ones_like(loss.value)}
        for node in reversed(self.nodes[:loss.index + 1]):
            grad = grads.pop(node.index, None)
            if grad is None:
                continue
            if node.op == 'parameter':
                grads[node.index] = grad
                continue
            if node.backward_fn is None:
                continue
            input_grads = node.backward_fn(grad)
            for inp, igrad in zip(node.inputs, input_grads):
                if igrad is None or inp.op == 'constant':
                    continue
                igrad = np.asarray(igrad, dtype=np.float32)
                if igrad.shape != inp.value.shape:
                    raise ShapeException("gradient shape {0} does not match "
                                         "{1} for {2}".format(
                                             igrad.shape, inp.value.shape,
                                             inp))
                if inp.index in grads:
                    grads[inp.index] = grads[inp.index] + igrad
                else:
                    grads[inp.index] = igrad

        for name, tensor in self.parameters.items():
            pnode = self._param_nodes.get(name)
            if pnode is not None and pnode.index in grads:
                self.gradients[name] = Tensor(grads[pnode.index])
            else:
                self.gradients[name] = Tensor.zeros(tensor.shape)
        return self.gradients


class BatchNormState(object):
    """
        Running statistics of one batch-norm layer. The tensors are updated
        in place in train mode so that they can be shared with ModelWeights.
    """
    def __init__(self, mean, var, momentum=BN_MOMENTUM):
        self.mean = mean if isinstance(mean, Tensor) else Tensor(mean)
        self.var = var if isinstance(var, Tensor) else Tensor(var)
        self.momentum = momentum

    @classmethod
    def fresh(cls, channels):
        return cls(Tensor.zeros((channels,)), Tensor.ones((channels,)))


def backward(graph, loss):
    """
        Functional alias of Graph.backward().
    """
    return graph.backward(loss)


def init_uniform(rng, shape, fan_in):
    """
        Fan-in scaled uniform initialisation in +/- sqrt(6 / fan_in).
    """
    bound = np.sqrt(6.0 / float(fan_in))
    return Tensor(rng.uniform(-bound, bound, size=tuple(shape)))


# -- helpers ---------------------------------------------------------------

def _graph_of(*values):
    for value in values:
        if isinstance(value, Node):
            return value.graph
    return Graph()


def _lift(graph, value):
    if isinstance(value, Node):
        if value.graph is not graph:
            raise GraphStateException("cannot mix nodes of two graphs")
        return value
    return graph.constant(value)


def _sum64(arr, axis=None, keepdims=False):
    return np.sum(arr, axis=axis, dtype=np.float64, keepdims=keepdims)


def _f32(arr):
    return np.ascontiguousarray(arr, dtype=np.float32)


def _require_ndim(node, ndim, opname):
    if node.value.ndim != ndim:
        raise ShapeException("{0} expects a {1}-D input, got shape "
                             "{2}".format(opname, ndim, node.shape))


# -- layers ----------------------------------------------------------------

def _im2col(x):
    n, c, h, w = x.shape
    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3),
                                                       axis=(2, 3))
    return windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * h * w, c * 9)


def conv2d(x, kernel, bias):
    """
        3x3 cross-correlation, stride 1, zero same-padding.

        :param x: input [N, C, H, W]
        :param kernel: [K, C, 3, 3]
        :param bias: [K]

        :return: Node [N, K, H, W]
    """
    graph = _graph_of(x, kernel, bias)
    x, kernel, bias = (_lift(graph, v) for v in (x, kernel, bias))
    _require_ndim(x, 4, 'conv2d')
    n, c, h, w = x.shape
    k = kernel.shape[0]
    if kernel.value.ndim != 4 or kernel.shape[2:] != (3, 3):
        raise ShapeException("conv2d kernel must be [K, C, 3, 3], got "
                             "{0}".format(kernel.shape))
    if kernel.shape[1] != c:
        raise ShapeException("conv2d input has {0} channels, kernel expects "
                             "{1}".format(c, kernel.shape[1]))
    if bias.shape != (k,):
        raise ShapeException("conv2d bias must be [{0}], got {1}".format(
            k, bias.shape))

    cols = _im2col(x.value)
    kmat = kernel.value.reshape(k, c * 9)
    out = cols.dot(kmat.T) + bias.value
    out = _f32(out.reshape(n, h, w, k).transpose(0, 3, 1, 2))

    def backward_fn(grad):
        g2 = np.ascontiguousarray(grad.transpose(0, 2, 3, 1)).reshape(-1, k)
        dkernel = g2.T.dot(cols).reshape(kernel.shape)
        dbias = _sum64(g2, axis=0)
        dcols = g2.dot(kmat).reshape(n, h, w, c, 3, 3)
        dpadded = np.zeros((n, c, h + 2, w + 2), dtype=np.float32)
        for i in range(3):
            for j in range(3):
                dpadded[:, :, i:i + h, j:j + w] += \
                    dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dpadded[:, :, 1:h + 1, 1:w + 1], dkernel, dbias

    return graph.record('conv2d', (x, kernel, bias), out, backward_fn)


def max_pool2(x):
    """
        2x2 max pooling with stride 2. Ties go to the first element of the
        window in row-major order.

        :return: (Node [N, C, H/2, W/2], argmax indices in 0..3)
    """
    graph = _graph_of(x)
    x = _lift(graph, x)
    _require_ndim(x, 4, 'max_pool2')
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeException("max_pool2 needs even spatial extents, got "
                             "{0}x{1}".format(h, w))
    h2, w2 = h // 2, w // 2
    windows = x.value.reshape(n, c, h2, 2, w2, 2).transpose(
        0, 1, 2, 4, 3, 5).reshape(n, c, h2, w2, 4)
    argmax = windows.argmax(axis=-1)
    out = _f32(np.take_along_axis(windows, argmax[..., None], axis=-1)[..., 0])

    def backward_fn(grad):
        gwin = np.zeros((n, c, h2, w2, 4), dtype=np.float32)
        np.put_along_axis(gwin, argmax[..., None], grad[..., None], axis=-1)
        return (gwin.reshape(n, c, h2, w2, 2, 2).transpose(
            0, 1, 2, 4, 3, 5).reshape(n, c, h, w),)

    node = graph.record('max_pool2', (x,), out, backward_fn)
    node.extra = argmax
    return node, argmax


def batch_norm(x, gamma, beta, mode='train', state=None, eps=BN_EPSILON):
    """
        Per-channel batch normalisation over [N, C, H, W] (or [N, C]).

        In train mode the batch statistics are used and ``state`` (if
        given) is updated with momentum ``state.momentum``; in infer mode
        the running statistics of ``state`` are used.
    """
    graph = _graph_of(x, gamma, beta)
    x, gamma, beta = (_lift(graph, v) for v in (x, gamma, beta))
    if x.value.ndim == 4:
        axes = (0, 2, 3)
        bshape = (1, x.shape[1], 1, 1)
    elif x.value.ndim == 2:
        axes = (0,)
        bshape = (1, x.shape[1])
    else:
        raise ShapeException("batch_norm expects [N,C,H,W] or [N,C], got "
                             "{0}".format(x.shape))
    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ShapeException("batch_norm gamma/beta must be [{0}]".format(
            channels))
    count = int(np.prod([x.shape[a] for a in axes]))
    xv = x.value.astype(np.float64)

    if mode == 'train':
        if count < 2:
            raise DegenerateBatchException(
                "batch_norm in train mode needs at least 2 values per "
                "channel, got {0}".format(count))
        mean = xv.mean(axis=axes)
        var = ((xv - mean.reshape(bshape)) ** 2).mean(axis=axes)
        if state is not None:
            mom = state.momentum
            state.mean.array[...] = mom * state.mean.array + (1 - mom) * mean
            state.var.array[...] = mom * state.var.array + (1 - mom) * var
    elif mode == 'infer':
        if state is None:
            raise GraphStateException("batch_norm infer mode needs running "
                                      "statistics")
        mean = state.mean.array.astype(np.float64)
        var = state.var.array.astype(np.float64)
    else:
        raise ValueError("unknown batch_norm mode {0}".format(mode))

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xv - mean.reshape(bshape)) * inv_std.reshape(bshape)
    g64 = gamma.value.astype(np.float64).reshape(bshape)
    out = _f32(xhat * g64 + beta.value.astype(np.float64).reshape(bshape))

    def backward_fn(grad):
        grad = grad.astype(np.float64)
        dbeta = grad.sum(axis=axes)
        dgamma = (grad * xhat).sum(axis=axes)
        dxhat = grad * g64
        if mode == 'infer':
            dx = dxhat * inv_std.reshape(bshape)
        else:
            sum_dxhat = dxhat.sum(axis=axes).reshape(bshape)
            sum_dxhat_xhat = (dxhat * xhat).sum(axis=axes).reshape(bshape)
            dx = (inv_std.reshape(bshape) / count) * (
                count * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)
        return dx, dgamma, dbeta

    return graph.record('batch_norm', (x, gamma, beta), out, backward_fn)


def dense(x, weight, bias):
    """
        Affine map [N, F] x [F, G] + [G].
    """
    graph = _graph_of(x, weight, bias)
    x, weight, bias = (_lift(graph, v) for v in (x, weight, bias))
    _require_ndim(x, 2, 'dense')
    if weight.value.ndim != 2 or weight.shape[0] != x.shape[1]:
        raise ShapeException("dense inner dimensions differ: input {0}, "
                             "weight {1}".format(x.shape, weight.shape))
    if bias.shape != (weight.shape[1],):
        raise ShapeException("dense bias must be [{0}], got {1}".format(
            weight.shape[1], bias.shape))
    out = _f32(x.value.dot(weight.value) + bias.value)

    def backward_fn(grad):
        return (grad.dot(weight.value.T), x.value.T.dot(grad),
                _sum64(grad, axis=0))

    return graph.record('dense', (x, weight, bias), out, backward_fn)


def relu(x):
    graph = _graph_of(x)
    x = _lift(graph, x)
    mask = x.value > 0
    out = _f32(np.where(mask, x.value, 0.0))

    def backward_fn(grad):
        return (grad * mask,)

    return graph.record('relu', (x,), out, backward_fn)


def sigmoid(x):
    graph = _graph_of(x)
    x = _lift(graph, x)
    s = expit(x.value.astype(np.float64))
    out = _f32(s)

    def backward_fn(grad):
        return (grad * s * (1.0 - s),)

    return graph.record('sigmoid', (x,), out, backward_fn)


def softmax_channels(x):
    """
        Softmax over axis 1 (the channel axis).
    """
    graph = _graph_of(x)
    x = _lift(graph, x)
    if x.value.ndim < 2:
        raise ShapeException("softmax_channels needs a channel axis")
    xv = x.value.astype(np.float64)
    e = np.exp(xv - xv.max(axis=1, keepdims=True))
    s = e / e.sum(axis=1, keepdims=True)
    out = _f32(s)

    def backward_fn(grad):
        grad = grad.astype(np.float64)
        return (s * (grad - (grad * s).sum(axis=1, keepdims=True)),)

    return graph.record('softmax_channels', (x,), out, backward_fn)


def upsample2(x):
    """
        Nearest-neighbour 2x upsampling of [N, C, H, W].
    """
    graph = _graph_of(x)
    x = _lift(graph, x)
    _require_ndim(x, 4, 'upsample2')
    n, c, h, w = x.shape
    out = _f32(x.value.repeat(2, axis=2).repeat(2, axis=3))

    def backward_fn(grad):
        return (_sum64(grad.reshape(n, c, h, 2, w, 2), axis=(3, 5)),)

    return graph.record('upsample2', (x,), out, backward_fn)


def upsample2_concat(low, skip):
    """
        Upsamples ``low`` 2x and concatenates ``skip`` on the channel axis.

        :return: Node [N, C + C2, 2H, 2W]
    """
    graph = _graph_of(low, skip)
    low, skip = _lift(graph, low), _lift(graph, skip)
    _require_ndim(low, 4, 'upsample2_concat')
    _require_ndim(skip, 4, 'upsample2_concat')
    n, c, h, w = low.shape
    if skip.shape[0] != n or skip.shape[2:] != (2 * h, 2 * w):
        raise ShapeException("skip shape {0} is not twice the spatial size "
                             "of {1}".format(skip.shape, low.shape))
    up = low.value.repeat(2, axis=2).repeat(2, axis=3)
    out = _f32(np.concatenate([up, skip.value], axis=1))

    def backward_fn(grad):
        dlow = _sum64(grad[:, :c].reshape(n, c, h, 2, w, 2), axis=(3, 5))
        return dlow, grad[:, c:]

    return graph.record('upsample2_concat', (low, skip), out, backward_fn)


def flatten(x):
    graph = _graph_of(x)
    x = _lift(graph, x)
    shape = x.shape
    out = x.value.reshape(shape[0], -1)

    def backward_fn(grad):
        return (grad.reshape(shape),)

    return graph.record('flatten', (x,), out, backward_fn)


def mul(a, b):
    """
        Elementwise product of two equally shaped values.
    """
    graph = _graph_of(a, b)
    a, b = _lift(graph, a), _lift(graph, b)
    if a.shape != b.shape:
        raise ShapeException("mul shape mismatch {0} vs {1}".format(
            a.shape, b.shape))
    out = _f32(a.value.astype(np.float64) * b.value)

    def backward_fn(grad):
        return grad * b.value, grad * a.value

    return graph.record('mul', (a, b), out, backward_fn)


def reduce_sum(x):
    graph = _graph_of(x)
    x = _lift(graph, x)
    out = _f32(np.array([_sum64(x.value)]))

    def backward_fn(grad):
        return (np.full(x.shape, grad.reshape(-1)[0], dtype=np.float32),)

    return graph.record('reduce_sum', (x,), out, backward_fn)


# -- losses ----------------------------------------------------------------

def mse(pred, target):
    """
        Mean squared difference, a scalar node.
    """
    graph = _graph_of(pred, target)
    pred, target = _lift(graph, pred), _lift(graph, target)
    if pred.shape != target.shape:
        raise ShapeException("mse shape mismatch {0} vs {1}".format(
            pred.shape, target.shape))
    diff = pred.value.astype(np.float64) - target.value
    out = _f32(np.array([np.mean(diff ** 2)]))

    def backward_fn(grad):
        dpred = (2.0 / diff.size) * diff * grad.reshape(-1)[0]
        return dpred, -dpred

    return graph.record('mse', (pred, target), out, backward_fn)


def cross_entropy(probs, labels):
    """
        Mean negative log probability of the true class.

        :param probs: [N, K, ...] class probabilities (clamped at 1e-7)
        :param labels: integer class ids shaped like probs without axis 1

        :return: scalar node
    """
    graph = _graph_of(probs)
    probs = _lift(graph, probs)
    if isinstance(labels, Tensor):
        labels = labels.array
    elif isinstance(labels, Node):
        labels = labels.value
    labels = np.asarray(labels)
    if labels.dtype.kind == 'f':
        labels = np.rint(labels).astype(np.int64)
    expected = probs.shape[:1] + probs.shape[2:]
    if labels.shape != expected:
        raise ShapeException("cross_entropy labels shape {0} does not match "
                             "probabilities {1}".format(labels.shape,
                                                        probs.shape))
    nclass = probs.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= nclass):
        raise ShapeException("cross_entropy labels outside [0, {0})".format(
            nclass))
    index = labels[:, None].astype(np.int64)
    p_true = np.take_along_axis(probs.value, index, axis=1)[:, 0]
    p_true = p_true.astype(np.float64)
    clamped = np.maximum(p_true, PROB_FLOOR)
    count = p_true.size
    out = _f32(np.array([-np.mean(np.log(clamped))]))

    def backward_fn(grad):
        local = np.where(p_true > PROB_FLOOR, -1.0 / (count * clamped), 0.0)
        dprobs = np.zeros(probs.shape, dtype=np.float32)
        np.put_along_axis(dprobs, index,
                          (local * grad.reshape(-1)[0])[:, None], axis=1)
        return (dprobs,)

    return graph.record('cross_entropy', (probs,), out, backward_fn)


class TensorException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


class ShapeException(TensorException):
    pass


class DegenerateBatchException(TensorException):
    pass


class GraphStateException(TensorException):
    pass
