"""
Módulo de factories (padrões de criação).

Contém a DetectorFactory (Factory Method) e as grelhas de ablação.
"""

from factories.detector_factory import DetectorFactory
from factories.ablation_grids import ABLATION_GRIDS, AblationRow, available_grids, get_grid

__all__ = [
    'DetectorFactory',
    'ABLATION_GRIDS',
    'AblationRow',
    'available_grids',
    'get_grid'
]
