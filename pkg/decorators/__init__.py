"""
Decorators para adicionar funcionalidades extras aos Detectors.

Padrão de Estrutura: Decorator
Permite adicionar responsabilidades a objetos dinamicamente.
"""

from decorators.detector_decorator import DetectorDecorator
from decorators.modality_decorator import MODALITIES, ModalityMaskDecorator
from decorators.timed_decorator import TimedDetectorDecorator

__all__ = [
    'DetectorDecorator',
    'MODALITIES',
    'ModalityMaskDecorator',
    'TimedDetectorDecorator'
]
