# -*- coding: utf-8 -*-

from cardioquant.models.networks import (DirectNet, UNet, MaskNet,
                                         build_network, one_hot)
from cardioquant.models.targets import normalize_targets, denormalize_targets
from cardioquant.models.training import (train_direct, train_unet,
                                         train_masknet, TrainingException)
from cardioquant.models.persistence import (save_weights, load_weights,
                                            WeightsLoadException,
                                            ChecksumException,
                                            FormatVersionException,
                                            ParameterPlanException)
from cardioquant.models.predict import (predict_direct, predict_direct_many,
                                        predict_seg, predict_seg_many,
                                        segment, evaluate_dice)
from cardioquant.models.featuremaps import export_feature_maps

__all__ = ['DirectNet', 'UNet', 'MaskNet', 'build_network', 'one_hot',
           'normalize_targets', 'denormalize_targets',
           'train_direct', 'train_unet', 'train_masknet', 'TrainingException',
           'save_weights', 'load_weights', 'WeightsLoadException',
           'ChecksumException', 'FormatVersionException',
           'ParameterPlanException',
           'predict_direct', 'predict_direct_many', 'predict_seg',
           'predict_seg_many', 'segment', 'evaluate_dice',
           'export_feature_maps']
