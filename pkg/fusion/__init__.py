"""
Fusão RGB/IR: gates, Fusion-Shuffle, DGC-MFM e fusão por concatenação.
"""

from fusion.gates import (
    DifferenceGate,
    FusionShapeError,
    GateOutputs,
    IlluminationGate,
    dual_gated_fuse,
)
from fusion.shuffle import FusionShuffle, channel_shuffle, inverse_channel_shuffle
from fusion.dgc_mfm import ConcatFusion, DGCMFM, residual_integrate

__all__ = [
    'DifferenceGate',
    'FusionShapeError',
    'GateOutputs',
    'IlluminationGate',
    'dual_gated_fuse',
    'FusionShuffle',
    'channel_shuffle',
    'inverse_channel_shuffle',
    'ConcatFusion',
    'DGCMFM',
    'residual_integrate'
]
