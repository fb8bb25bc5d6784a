"""
Pescoços da pirâmide: HFAN (CRU, GAD, AWF, ASFB) e FPN de referência.
"""

from neck.pyramid import PYRAMID_LEVELS, FeaturePyramid, PyramidError, check_pyramid
from neck.cru import ContentReconstructionUpsampler, ReassemblyKernelField, cru_upsample, reassemble
from neck.gad import (
    DeformableSamplingField,
    GeometricAlignmentDownsampler,
    deformable_sample_conv,
    gad_downsample,
)
from neck.awf import AdaptiveWeightedFuser, FusionWeights, awf_fuse, mean_fuse
from neck.asfb import AdaptiveScaleFusionBlock
from neck.hfan import HierarchicalFeatureAggregationNeck
from neck.fpn import FeaturePyramidNeck
from neck.layers import ConvBNAct

__all__ = [
    'PYRAMID_LEVELS',
    'FeaturePyramid',
    'PyramidError',
    'check_pyramid',
    'ContentReconstructionUpsampler',
    'ReassemblyKernelField',
    'cru_upsample',
    'reassemble',
    'DeformableSamplingField',
    'GeometricAlignmentDownsampler',
    'deformable_sample_conv',
    'gad_downsample',
    'AdaptiveWeightedFuser',
    'FusionWeights',
    'awf_fuse',
    'mean_fuse',
    'AdaptiveScaleFusionBlock',
    'HierarchicalFeatureAggregationNeck',
    'FeaturePyramidNeck',
    'ConvBNAct'
]
