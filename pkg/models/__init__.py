"""
Módulo de modelos do detetor RGB/IR.

Contém o backbone, as cabeças, a perda, a descodificação com NMS, o
detetor composto e o contentor de checkpoints.
"""

from models.backbone import (
    BackboneInputError,
    ConvStream,
    DualStreamBackbone,
    SingleStreamBackbone,
    as_three_channels,
)
from models.box_coder import decode_box, decode_grid, encode_box, positive_cell
from models.head import DecoupledHead, HeadOutput
from models.loss import LossOutput, TargetError, assign_level, assign_targets, compute_loss
from models.postprocess import Detection, decode_and_nms, greedy_nms, nms_detections, sort_detections
from models.detector import Detector
from models.checkpoint import (
    CheckpointError,
    CheckpointState,
    load_checkpoint,
    restore_rng_state,
    save_checkpoint,
)

__all__ = [
    'BackboneInputError',
    'ConvStream',
    'DualStreamBackbone',
    'SingleStreamBackbone',
    'as_three_channels',
    'decode_box',
    'decode_grid',
    'encode_box',
    'positive_cell',
    'DecoupledHead',
    'HeadOutput',
    'LossOutput',
    'TargetError',
    'assign_level',
    'assign_targets',
    'compute_loss',
    'Detection',
    'decode_and_nms',
    'greedy_nms',
    'nms_detections',
    'sort_detections',
    'Detector',
    'CheckpointError',
    'CheckpointState',
    'load_checkpoint',
    'restore_rng_state',
    'save_checkpoint'
]
