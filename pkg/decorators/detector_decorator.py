"""
Decorator base para Detectors.

Padrão de Estrutura: Decorator
O decorator tem a mesma interface de chamada do Detector (forward,
predict, describe, gate_summary) e delega no detetor embrulhado; os
decorators concretos acrescentam comportamento à volta do forward.
"""
from typing import Any, Dict, List, Optional

import torch

from models.detector import Detector
from models.head import HeadOutput
from models.postprocess import Detection, decode_and_nms


class DetectorDecorator:
    """
    Decorator abstrato de um Detector (ou de outro decorator).

    >>> detector = DetectorFactory.create_detector(ModelConfig())
    >>> masked = ModalityMaskDecorator(detector, modality='rgb')
    >>> timed = TimedDetectorDecorator(masked)
    """

    def __init__(self, detector: 'Detector | DetectorDecorator'):
        self._detector = detector

    @property
    def detector(self) -> Detector:
        """Detetor concreto no fim da cadeia de decorators."""
        inner = self._detector
        while isinstance(inner, DetectorDecorator):
            inner = inner._detector
        return inner

    def forward(self, rgb: torch.Tensor, ir: Optional[torch.Tensor] = None) -> HeadOutput:
        return self._detector(rgb, ir)

    def __call__(self, rgb: torch.Tensor, ir: Optional[torch.Tensor] = None) -> HeadOutput:
        return self.forward(rgb, ir)

    @torch.no_grad()
    def predict(self, rgb: torch.Tensor, ir: Optional[torch.Tensor] = None,
                conf_threshold: float = 0.25, iou_threshold: float = 0.6) -> List[List[Detection]]:
        model = self.detector
        was_training = model.training
        model.eval()
        try:
            output = self.forward(rgb, ir)
        finally:
            model.train(was_training)
        return decode_and_nms(output, conf_threshold, iou_threshold)

    def describe(self) -> Dict[str, Any]:
        return self._detector.describe()

    def gate_summary(self) -> Dict[int, Dict[str, float]]:
        return self._detector.gate_summary()

    def __getattr__(self, name: str) -> Any:
        # parameters(), train(), state_dict(), cfg, ... vêm do detetor embrulhado
        if name == '_detector':
            raise AttributeError(name)
        return getattr(self._detector, name)
