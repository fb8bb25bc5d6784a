"""
TimedDetectorDecorator - Mede a latência do forward.

Padrão de Estrutura: Decorator (Concrete Decorator)
"""
import time
from typing import Any, Dict, Optional

import torch

from decorators.detector_decorator import DetectorDecorator
from models.head import HeadOutput


class TimedDetectorDecorator(DetectorDecorator):
    """
    Acumula o tempo de relógio de cada forward e o número de imagens.

    Funcionalidades Adicionadas:
    ---------------------------
    1. Latência média por imagem (ms)
    2. Número de chamadas e de imagens processadas
    3. Metadados de tempo no describe()
    """

    def __init__(self, detector):
        super().__init__(detector)
        self.reset()

    def reset(self) -> None:
        self.total_seconds = 0.0
        self.calls = 0
        self.images = 0

    def forward(self, rgb: torch.Tensor, ir: Optional[torch.Tensor] = None) -> HeadOutput:
        start = time.perf_counter()
        output = super().forward(rgb, ir)
        self.total_seconds += time.perf_counter() - start
        self.calls += 1
        self.images += rgb.shape[0]
        return output

    def get_mean_latency_ms(self) -> float:
        """Milissegundos por imagem; 0 antes do primeiro forward."""
        if self.images == 0:
            return 0.0
        return round(1000.0 * self.total_seconds / self.images, 3)

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info['timing'] = {
            'calls': self.calls,
            'images': self.images,
            'latency_ms': self.get_mean_latency_ms(),
        }
        return info
