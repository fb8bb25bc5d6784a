"""
Detetor completo: backbone → pescoço → cabeças.

A composição (que fusão, que pescoço) é decidida pela DetectorFactory;
esta classe só encadeia as partes.
"""
from typing import Any, Dict, List, Optional

import torch
import torch.nn as nn

from config.settings import ModelConfig, config_hash
from models.head import DecoupledHead, HeadOutput
from models.postprocess import Detection, decode_and_nms


class Detector(nn.Module):
    """
    Detetor RGB/IR (ou só RGB na variante single-stream).

    Args:
        cfg: Configuração que originou o modelo
        backbone: DualStreamBackbone ou SingleStreamBackbone
        neck: HFAN ou FPN
        head: Cabeças desacopladas
    """

    def __init__(self, cfg: ModelConfig, backbone: nn.Module, neck: nn.Module, head: DecoupledHead):
        super().__init__()
        self.cfg = cfg
        self.backbone = backbone
        self.neck = neck
        self.head = head

    @property
    def config_hash(self) -> str:
        return config_hash(self.cfg)

    @property
    def uses_ir(self) -> bool:
        return self.cfg.variant != 'single-stream'

    def forward(self, rgb: torch.Tensor, ir: Optional[torch.Tensor] = None) -> HeadOutput:
        pyramid = self.backbone(rgb, ir)
        return self.head(self.neck(pyramid))

    @torch.no_grad()
    def predict(self, rgb: torch.Tensor, ir: Optional[torch.Tensor] = None,
                conf_threshold: float = 0.25, iou_threshold: float = 0.6) -> List[List[Detection]]:
        """Forward em modo de avaliação seguido de descodificação e NMS."""
        was_training = self.training
        self.eval()
        try:
            output = self(rgb, ir)
        finally:
            self.train(was_training)
        return decode_and_nms(output, conf_threshold, iou_threshold)

    def gate_summary(self) -> Dict[int, Dict[str, float]]:
        """Médias dos gates do DGC-MFM no último forward, por nível."""
        return self.backbone.gate_summary()

    def describe(self) -> Dict[str, Any]:
        return {
            'variant': self.cfg.variant,
            'neck': self.cfg.neck,
            'scale': self.cfg.scale,
            'num_classes': self.cfg.num_classes,
            'img_size': self.cfg.img_size,
            'levels': list(self.head.levels),
            'config_hash': self.config_hash,
        }
