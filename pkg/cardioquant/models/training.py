# -*- coding: utf-8 -*-
"""
Training loops of the three networks.

Every loop is single-threaded and deterministic given (seed, config,
data): initial weights come from the ``('init', <architecture>)`` stream of
the seed, the frame order of epoch e from ``('shuffle', <architecture>, e)``.
"""
import logging
from collections import OrderedDict

import numpy as np

from cardioquant.config import ModelConfig, DEFAULT_MODELS
from cardioquant.models.networks import build_network, one_hot
from cardioquant.models.targets import normalize_targets
from cardioquant.objects.subject import stack_frames
from cardioquant.objects.weights import ModelWeights
from cardioquant.optim import AdamState, adam_step
from cardioquant.rng import substream
from cardioquant.tensor import Graph, mse, cross_entropy

log = logging.getLogger(__name__)


def _prepare(subjects, architecture):
    subjects = list(subjects)
    if not subjects:
        raise EmptyTrainingSetException("cannot train {0} on an empty "
                                        "training set".format(architecture))
    images, labels, truths = stack_frames(subjects)
    return subjects, images, labels, truths


def fit(network, inputs, targets, loss, config, seed, subject_ids=(),
        progress=None):
    """
        Generic mini-batch Adam loop.

        :param network: Network
        :param inputs: float32 array [F, C, H, W]
        :param targets: [F, 11] normalised indices (loss 'mse') or
                        [F, H, W] class ids (loss 'cross_entropy')
        :param config: ModelConfig
        :param seed: integer seed of this training run
        :param subject_ids: ids of the training subjects, kept in metadata
        :param progress: optional callable(architecture, epoch, epochs, loss)

        :return: ModelWeights
    """
    arch = network.ARCHITECTURE
    n_frames = inputs.shape[0]
    tensors = network.init_tensors(substream(seed, 'init', arch))
    graph = Graph()
    network.bind(graph, tensors)
    state = AdamState(lr=config.lr)
    loss_fn = mse if loss == 'mse' else cross_entropy

    history = []
    for epoch in range(1, config.epochs + 1):
        order = substream(seed, 'shuffle', arch, epoch).permutation(n_frames)
        total = 0.0
        for start in range(0, n_frames, config.batch_size):
            batch = order[start:start + config.batch_size]
            graph.reset()
            out = network.forward(graph, graph.constant(inputs[batch]),
                                  'train', tensors)
            batch_loss = loss_fn(out, targets[batch])
            graph.backward(batch_loss)
            adam_step(state, graph.parameters, graph.gradients)
            total += float(batch_loss.value[0]) * len(batch)
        epoch_loss = total / n_frames
        if not np.isfinite(epoch_loss):
            raise TrainingException("{0} training diverged at epoch {1} "
                                    "(loss {2})".format(arch, epoch,
                                                        epoch_loss))
        history.append(epoch_loss)
        log.info("%s epoch %d/%d loss %.6g", arch, epoch, config.epochs,
                 epoch_loss)
        if progress is not None:
            progress(arch, epoch, config.epochs, epoch_loss)

    metadata = OrderedDict([
        ('seed', int(seed)),
        ('epochs', config.epochs),
        ('batch_size', config.batch_size),
        ('lr', config.lr),
        ('final_loss', history[-1]),
        ('loss_history', history),
        ('channels', list(network.channels)),
        ('hidden', network.hidden),
        ('frames', int(n_frames)),
        ('subjects', list(subject_ids)),
    ])
    return ModelWeights(arch, network.image_size, tensors, metadata)


def _config(config, architecture):
    if config is None:
        return DEFAULT_MODELS[architecture]
    if isinstance(config, dict):
        return ModelConfig(**config)
    return config


def train_direct(subjects, config=None, seed=7, progress=None, **arch):
    """
        Trains the direct estimation CNN (image -> 11 indices) with MSE on
        normalised targets.

        :param subjects: training Subjects (every frame is a sample)
        :param config: ModelConfig, defaults to 40 epochs, batch 32, lr 1e-3
        :param arch: optional ``channels`` / ``hidden`` overrides

        :return: ModelWeights, final loss in metadata['final_loss']
    """
    subjects, images, _, truths = _prepare(subjects, 'direct')
    size = images.shape[-1]
    network = build_network('direct', size, **arch)
    targets = normalize_targets(truths, size).array
    return fit(network, images, targets, 'mse',
               _config(config, 'direct'), seed,
               [s.id for s in subjects], progress)


def train_unet(subjects, config=None, seed=7, progress=None, **arch):
    """
        Trains the U-Net with pixel-wise 3-class cross-entropy.
    """
    subjects, images, labels, _ = _prepare(subjects, 'unet')
    network = build_network('unet', images.shape[-1], **arch)
    return fit(network, images, labels.astype(np.int64), 'cross_entropy',
               _config(config, 'unet'), seed, [s.id for s in subjects],
               progress)


def train_masknet(subjects, config=None, seed=7, progress=None, **arch):
    """
        Trains the mask CNN on ground-truth masks (one-hot) with MSE on
        normalised targets.
    """
    subjects, _, labels, truths = _prepare(subjects, 'masknet')
    size = labels.shape[-1]
    network = build_network('masknet', size, **arch)
    targets = normalize_targets(truths, size).array
    return fit(network, one_hot(labels), targets, 'mse',
               _config(config, 'masknet'), seed, [s.id for s in subjects],
               progress)


TRAINERS = OrderedDict([
    ('direct', train_direct),
    ('unet', train_unet),
    ('masknet', train_masknet),
])


class TrainingException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg


class EmptyTrainingSetException(TrainingException):
    pass
