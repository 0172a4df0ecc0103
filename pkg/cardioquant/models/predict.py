# -*- coding: utf-8 -*-
"""
Inference with trained weights. Batch-norm runs on its running statistics,
so the output for a frame does not depend on the other frames of a batch.
"""
import numpy as np

from cardioquant.geometry import dice, mask_from_probs
from cardioquant.models.networks import network_for, one_hot
from cardioquant.models.persistence import ParameterPlanException
from cardioquant.models.targets import denormalize_targets
from cardioquant.objects.indices import IndexVector
from cardioquant.objects.subject import CAVITY
from cardioquant.tensor import Graph, Tensor

BATCH_SIZE = 64


def _require(weights, architecture):
    if weights.architecture != architecture:
        raise ParameterPlanException("expected {0} weights, got {1}".format(
            architecture, weights.architecture))


def _as_batch(images):
    if isinstance(images, Tensor):
        images = images.array
    images = np.asarray(images, dtype=np.float32)
    if images.ndim == 2:
        images = images[None, None]
    elif images.ndim == 3:
        images = images[:, None] if images.shape[0] != 1 else images[None]
    return images


def run_network(weights, inputs, taps=None, batch_size=BATCH_SIZE):
    """
        Forward pass in inference mode.

        :param inputs: float32 [N, C, H, W]
        :param taps: optional list of layer names whose outputs are also
                     returned (single batch only)

        :return: output array, or (output array, {layer: array}) with taps
    """
    network = network_for(weights)
    if inputs.shape[-1] != network.image_size or \
            inputs.shape[-2] != network.image_size:
        raise ParameterPlanException("{0} weights expect {1}px images, got "
                                     "{2}".format(weights.architecture,
                                                  network.image_size,
                                                  inputs.shape[-2:]))
    graph = Graph()
    network.bind(graph, weights.tensors)
    outputs = []
    captured = {}
    for start in range(0, inputs.shape[0], batch_size):
        graph.reset()
        nodes = {} if taps else None
        out = network.forward(graph,
                              graph.constant(inputs[start:start + batch_size]),
                              'infer', weights.tensors, nodes)
        outputs.append(out.value.copy())
        for name in taps or ():
            captured.setdefault(name, []).append(nodes[name].value.copy())
    output = np.concatenate(outputs)
    if taps:
        return output, dict((k, np.concatenate(v))
                            for k, v in captured.items())
    return output


def _to_indices(normalized, image_size):
    values = denormalize_targets(normalized, image_size)
    if not np.all(np.isfinite(values)):
        raise PredictionException("network produced non-finite indices")
    return np.maximum(values, 0.0)


def predict_direct_many(weights, images):
    """
        :param images: [F, 1, H, W]
        :return: [F, 11] float64 indices, clamped at 0
    """
    _require(weights, 'direct')
    return _to_indices(run_network(weights, _as_batch(images)),
                       weights.image_size)


def predict_direct(weights, image):
    """
        :param image: [1, H, W] or [H, W]
        :return: IndexVector
    """
    return IndexVector(predict_direct_many(weights, _as_batch(image))[0])


def segment(unet_weights, images):
    """
        :return: [F, 3, H, W] class probabilities
    """
    _require(unet_weights, 'unet')
    return run_network(unet_weights, _as_batch(images))


def predict_seg_many(unet_weights, masknet_weights, images):
    """
        UNet -> argmax and largest-component cleanup -> MaskNet.

        :return: (masks [F, H, W] uint8, indices [F, 11] clamped at 0)
    """
    _require(masknet_weights, 'masknet')
    probs = segment(unet_weights, images)
    masks = np.stack([mask_from_probs(p) for p in probs])
    values = _to_indices(run_network(masknet_weights, one_hot(masks)),
                         masknet_weights.image_size)
    return masks, values


def predict_seg(unet_weights, masknet_weights, image):
    """
        :return: (label mask [H, W], IndexVector)
    """
    masks, values = predict_seg_many(unet_weights, masknet_weights,
                                     _as_batch(image))
    return masks[0], IndexVector(values[0])


def evaluate_dice(unet_weights, subjects, cls=CAVITY):
    """
        Mean Dice of one class over every frame of the given subjects.
    """
    scores = []
    for subject in subjects:
        probs = segment(unet_weights, subject.images)
        for p, truth in zip(probs, subject.labels):
            scores.append(dice(mask_from_probs(p), truth, cls))
    if not scores:
        raise PredictionException("no frame to evaluate")
    return float(np.mean(scores))


class PredictionException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg
