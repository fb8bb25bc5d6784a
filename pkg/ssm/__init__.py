"""
Núcleo de espaço de estados: varrimento seletivo e bloco Mamba bidirecional.
"""

from ssm.scan import (
    DEFAULT_CHUNK_SIZE,
    NonFiniteError,
    ScanParameters,
    ScanShapeError,
    TokenSequence,
    discretize,
    require_finite,
    selective_scan,
    selective_scan_naive,
)
from ssm.bidirectional import (
    BidirectionalMambaBlock,
    SelectiveSSM,
    bidirectional_block,
    directional_features,
)

__all__ = [
    'DEFAULT_CHUNK_SIZE',
    'NonFiniteError',
    'ScanParameters',
    'ScanShapeError',
    'TokenSequence',
    'discretize',
    'require_finite',
    'selective_scan',
    'selective_scan_naive',
    'BidirectionalMambaBlock',
    'SelectiveSSM',
    'bidirectional_block',
    'directional_features'
]
