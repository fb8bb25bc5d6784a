"""
ModalityMaskDecorator - Entrada de uma só modalidade.

Padrão de Estrutura: Decorator (Concrete Decorator)
Zera o fluxo ausente antes do forward, o que dá as execuções "só RGB" e
"só IR" com a mesma arquitetura de fluxo duplo.
"""
from typing import Any, Dict, Optional

import torch

from decorators.detector_decorator import DetectorDecorator
from models.head import HeadOutput


MODALITIES = ('both', 'rgb', 'ir')


class ModalityMaskDecorator(DetectorDecorator):
    """
    Args:
        detector: Detector a decorar
        modality: 'both' (sem efeito), 'rgb' (IR a zero) ou 'ir' (RGB a zero)
    """

    def __init__(self, detector, modality: str = 'both'):
        if modality not in MODALITIES:
            raise ValueError(f"modalidade inválida: '{modality}'. Disponíveis: {', '.join(MODALITIES)}")
        super().__init__(detector)
        self.modality = modality

    def mask_inputs(self, rgb: torch.Tensor, ir: Optional[torch.Tensor]):
        if self.modality == 'rgb' and ir is not None:
            ir = torch.zeros_like(ir)
        elif self.modality == 'ir':
            rgb = torch.zeros_like(rgb)
        return rgb, ir

    def forward(self, rgb: torch.Tensor, ir: Optional[torch.Tensor] = None) -> HeadOutput:
        rgb, ir = self.mask_inputs(rgb, ir)
        return super().forward(rgb, ir)

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info['modality'] = self.modality
        return info
